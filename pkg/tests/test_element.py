import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nztsurf.element import (
    EDGE_RULE, TRIANGLE_RULE, DegenerateTriangle, MONOMIAL_POWERS,
    build_shape_basis, edge_barycentric, edge_mean_identity_check, eval_basis,
)

UNIT_RIGHT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
RNG = np.random.default_rng(7)


def random_triangle(rng=RNG, scale=1.0):
    for _ in range(100):
        tri = rng.uniform(-1, 1, (3, 2)) * scale
        e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
        area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
        if area > 0.05 * scale ** 2:
            return tri
    raise AssertionError


def dofs_of(fun, grad, tri):
    """Exact element DoFs (value, gradient pairs) of an analytic function."""
    out = np.empty(9)
    for m in range(3):
        out[3 * m] = fun(*tri[m])
        out[3 * m + 1:3 * m + 3] = grad(*tri[m])
    return out


def test_triangle_rule_exactness():
    # reference-triangle monomial integrals: la1^a la2^b la3^c has
    # integral 2*|T|*a!b!c!/(a+b+c+2)!
    from math import factorial
    lam = TRIANGLE_RULE.points
    for a in range(7):
        for b in range(7 - a):
            for c in range(7 - a - b):
                approx = TRIANGLE_RULE.weights @ (
                    lam[:, 0] ** a * lam[:, 1] ** b * lam[:, 2] ** c)
                exact = (2 * factorial(a) * factorial(b) * factorial(c)
                         / factorial(a + b + c + 2))
                assert approx == pytest.approx(exact, rel=1e-13, abs=1e-15)


def test_edge_rule_exactness():
    for k in range(8):
        approx = EDGE_RULE.weights @ EDGE_RULE.points ** k
        assert approx == pytest.approx(1 / (k + 1), rel=1e-14)


def test_unisolvence_unit_triangle():
    basis = build_shape_basis(UNIT_RIGHT)
    vals, grads, _ = eval_basis(basis, np.eye(3))
    D = np.zeros((9, 9))
    for m in range(3):
        D[3 * m] = vals[:, m]
        D[3 * m + 1] = grads[:, m, 0]
        D[3 * m + 2] = grads[:, m, 1]
    np.testing.assert_allclose(D, np.eye(9), atol=1e-10)


def test_nodal_duality_vertex_one():
    basis = build_shape_basis(UNIT_RIGHT)
    vals, grads, _ = eval_basis(basis, np.eye(3))
    np.testing.assert_allclose(vals[0], [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(grads[0, :, :], 0.0, atol=1e-11)


def test_p2_reproduction():
    tri = random_triangle()
    basis = build_shape_basis(tri)
    coef = dofs_of(lambda x, y: x * x, lambda x, y: (2 * x, 0.0), tri)
    pts = RNG.dirichlet((1, 1, 1), size=20)
    vals, _, _ = eval_basis(basis, pts)
    xy = pts @ tri
    np.testing.assert_allclose(coef @ vals, xy[:, 0] ** 2, atol=1e-12)


def test_dof_matrix_against_direct_q_formula():
    # independent evaluation of the enrichment q_01 on the unit triangle:
    # value and finite-difference gradient at the vertices
    def lam(x, y):
        return np.array([1 - x - y, x, y])

    def q01(x, y):
        l = lam(x, y)
        b = l[0] * l[1] * l[2]
        # grad lambda = (-1,-1), (1,0), (0,1); k = 2
        c = 3 * (np.array([-2.0, -1.0]) @ np.array([0.0, 1.0])) / 1.0
        return (l[0] ** 2 * l[1] - l[0] * l[1] ** 2
                + (2 * (l[0] - l[1]) + c * (2 * l[2] - 1)) * b)

    basis = build_shape_basis(UNIT_RIGHT)
    # interpolate q01 by its exact DoFs: FD gradients at vertices
    h = 1e-6
    coef = np.empty(9)
    for m, (x, y) in enumerate(UNIT_RIGHT):
        coef[3 * m] = q01(x, y)
        coef[3 * m + 1] = (q01(x + h, y) - q01(x - h, y)) / (2 * h)
        coef[3 * m + 2] = (q01(x, y + h) - q01(x, y - h)) / (2 * h)
    pts = RNG.dirichlet((1, 1, 1), size=30)
    vals, _, _ = eval_basis(basis, pts)
    direct = np.array([q01(*xy) for xy in pts @ UNIT_RIGHT])
    np.testing.assert_allclose(coef @ vals, direct, atol=1e-6)


def test_partition_of_unity_and_laplacian():
    tri = random_triangle()
    basis = build_shape_basis(tri)
    one = dofs_of(lambda x, y: 1.0, lambda x, y: (0.0, 0.0), tri)
    r2 = dofs_of(lambda x, y: x * x + y * y, lambda x, y: (2 * x, 2 * y), tri)
    pts = RNG.dirichlet((1, 1, 1), size=25)
    vals, grads, laps = eval_basis(basis, pts)
    np.testing.assert_allclose(one @ vals, 1.0, atol=1e-12)
    np.testing.assert_allclose(one @ grads[:, :, 0], 0.0, atol=1e-12)
    np.testing.assert_allclose(r2 @ laps, 4.0, atol=1e-10)


def test_gradient_against_finite_differences():
    tri = random_triangle()
    basis = build_shape_basis(tri)
    coef = RNG.standard_normal(9)
    lam0 = np.array([[0.3, 0.45, 0.25]])
    xy = (lam0 @ tri)[0]
    h = 1e-6

    def value_at(x, y):
        # barycentric coordinates of (x, y)
        A = np.vstack([np.ones(3), tri[:, 0], tri[:, 1]])
        lam = np.linalg.solve(A, np.array([1.0, x, y]))
        vals, _, _ = eval_basis(basis, lam[None, :])
        return coef @ vals[:, 0]

    _, grads, _ = eval_basis(basis, lam0)
    g = coef @ grads[:, 0, :]
    fd = np.array([
        (value_at(xy[0] + h, xy[1]) - value_at(xy[0] - h, xy[1])) / (2 * h),
        (value_at(xy[0], xy[1] + h) - value_at(xy[0], xy[1] - h)) / (2 * h)])
    np.testing.assert_allclose(g, fd, rtol=1e-7, atol=1e-7)


def test_edge_mean_identity_quadratic_and_enrichment():
    basis = build_shape_basis(UNIT_RIGHT)
    tri = UNIT_RIGHT
    p2 = dofs_of(lambda x, y: x * x + 0.5 * x * y,
                 lambda x, y: (2 * x + 0.5 * y, 0.5 * x), tri)
    for e in range(3):
        assert edge_mean_identity_check(basis, e, p2) <= 1e-14
    # q_01 is nodal-representable: interpolate once, residual stays tiny
    for e in range(3):
        coef = RNG.standard_normal(9)
        assert edge_mean_identity_check(basis, e, coef) <= 1e-13


def test_edge_mean_identity_random_members():
    worst = 0.0
    for _ in range(20):
        tri = random_triangle()
        basis = build_shape_basis(tri)
        for _ in range(5):
            coef = RNG.standard_normal(9)
            for e in range(3):
                worst = max(worst, edge_mean_identity_check(basis, e, coef))
    assert worst <= 1e-11


def test_scaling_robustness():
    tri = random_triangle() * 1e-3
    basis = build_shape_basis(tri)
    coef = dofs_of(lambda x, y: x * x, lambda x, y: (2 * x, 0.0), tri)
    pts = RNG.dirichlet((1, 1, 1), size=10)
    vals, _, _ = eval_basis(basis, pts)
    xy = pts @ tri
    np.testing.assert_allclose(coef @ vals, xy[:, 0] ** 2, atol=1e-15)
    # normal derivatives scale like 1/h here; compare against that scale
    rnd = RNG.standard_normal(9)
    _, grads, _ = eval_basis(basis, RNG.dirichlet((1, 1, 1), size=10))
    dn_scale = np.max(np.abs(np.einsum("m,mpk->pk", rnd, grads)))
    for e in range(3):
        assert edge_mean_identity_check(basis, e, rnd) <= 1e-12 * dn_scale


def test_degenerate_triangle_rejected():
    with pytest.raises(DegenerateTriangle):
        build_shape_basis(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))


def test_monomial_count():
    assert len(MONOMIAL_POWERS) == 15


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_unisolvence_random_triangles(seed):
    tri = random_triangle(np.random.default_rng(seed))
    basis = build_shape_basis(tri)
    vals, grads, _ = eval_basis(basis, np.eye(3))
    D = np.zeros((9, 9))
    for m in range(3):
        D[3 * m] = vals[:, m]
        D[3 * m + 1] = grads[:, m, 0]
        D[3 * m + 2] = grads[:, m, 1]
    np.testing.assert_allclose(D, np.eye(9), atol=1e-9)


def test_edge_barycentric_endpoints():
    lam = edge_barycentric(1, np.array([0.0, 1.0]))
    np.testing.assert_allclose(lam, [[0, 1, 0], [0, 0, 1]])
