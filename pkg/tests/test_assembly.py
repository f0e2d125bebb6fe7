import numpy as np
import pytest
import scipy.sparse as sp

from nztsurf.assembly import (
    assemble, edge_stabilization, element_stiffness, face_tables,
)
from nztsurf.dofs import build_dof_system
from nztsurf.element import QuadratureRule, build_shape_basis
from nztsurf.geometry import Sphere
from nztsurf.manufactured import sphere_case
from nztsurf.mesh import make_icosphere, refine

RNG = np.random.default_rng(4242)
UNIT_RIGHT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def dunavant_degree8():
    """Gauss-Jacobi product rule (exact to degree 9), as an independent
    check of the default degree-6 rule."""
    from scipy.special import roots_jacobi, roots_legendre
    xl, wl = roots_legendre(5)
    xj, wj = roots_jacobi(5, 1, 0)
    xl = 0.5 * (xl + 1)
    wl = 0.5 * wl
    xj = 0.5 * (xj + 1)
    wj = 0.25 * wj
    pts, wts = [], []
    for a, wa in zip(xl, wl):
        for b, wb in zip(xj, wj):
            xi = a * (1 - b)
            eta = b
            pts.append([1 - xi - eta, xi, eta])
            wts.append(wa * wb)
    wts = np.array(wts)
    return QuadratureRule(np.array(pts), wts / wts.sum() * 1.0)


def two_triangle_planar_patch():
    """Two coplanar unit triangles sharing the diagonal edge."""
    t1 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    t2 = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    b1, b2 = build_shape_basis(t1), build_shape_basis(t2)
    # shared edge from (1,0) to (0,1): local (1, 2) in t1, local (0, 2) in t2
    locals_ = ((1, 2), (0, 2))
    n1 = np.array([1.0, 1.0]) / np.sqrt(2)
    n2 = -n1
    return (b1, b2), locals_, (n1, n2)


def quadratic_patch_dofs(fun, grad, tri):
    out = np.empty(9)
    for m in range(3):
        out[3 * m] = fun(*tri[m])
        out[3 * m + 1:3 * m + 3] = grad(*tri[m])
    return out


def test_element_stiffness_constant_in_kernel():
    basis = build_shape_basis(UNIT_RIGHT)
    S = element_stiffness(basis)
    const = quadratic_patch_dofs(lambda x, y: 1.0, lambda x, y: (0, 0),
                                 UNIT_RIGHT)
    np.testing.assert_allclose(S @ const, 0.0, atol=1e-13)


def test_element_stiffness_quadratic_value():
    basis = build_shape_basis(UNIT_RIGHT)
    S = element_stiffness(basis)
    r2 = quadratic_patch_dofs(lambda x, y: x * x + y * y,
                              lambda x, y: (2 * x, 2 * y), UNIT_RIGHT)
    # Lap(x^2+y^2) = 4 so the quadratic form is 16 * area = 8
    assert r2 @ S @ r2 == pytest.approx(8.0, rel=1e-12)


def test_element_stiffness_quadrature_insensitive():
    def doubled_area(t):
        e1, e2 = t[1] - t[0], t[2] - t[0]
        return abs(e1[0] * e2[1] - e1[1] * e2[0])

    tri = RNG.uniform(-1, 1, (3, 2))
    while doubled_area(tri) < 0.2:
        tri = RNG.uniform(-1, 1, (3, 2))
    basis = build_shape_basis(tri)
    S6 = element_stiffness(basis)
    S8 = element_stiffness(basis, dunavant_degree8())
    np.testing.assert_allclose(S6, S8, atol=1e-13 * np.abs(S6).max())


def test_edge_stabilization_annihilates_c1_quadratic():
    bases, locals_, conorms = two_triangle_planar_patch()
    t1 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    t2 = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    M = edge_stabilization(bases, locals_, conorms)
    # globally smooth quadratic: its normal derivative is continuous
    fun = lambda x, y: x * x + 0.7 * x * y - 0.3 * y * y
    grad = lambda x, y: (2 * x + 0.7 * y, 0.7 * x - 0.6 * y)
    c = np.concatenate([quadratic_patch_dofs(fun, grad, t1),
                        quadratic_patch_dofs(fun, grad, t2)])
    assert c @ M @ c == pytest.approx(0.0, abs=1e-13)
    const = np.concatenate([quadratic_patch_dofs(lambda x, y: 2.0,
                                                 lambda x, y: (0, 0), t1),
                            quadratic_patch_dofs(lambda x, y: 2.0,
                                                 lambda x, y: (0, 0), t2)])
    np.testing.assert_allclose(M @ const, 0.0, atol=1e-14)


def test_planar_patch_zero_source_zero_load():
    # the load against any basis function of a zero source is zero;
    # constants lie in the kernel of both local operators
    bases, locals_, conorms = two_triangle_planar_patch()
    M = edge_stabilization(bases, locals_, conorms)
    S1 = element_stiffness(bases[0])
    S2 = element_stiffness(bases[1])
    const = np.tile([1.0, 0.0, 0.0], 3)
    np.testing.assert_allclose(S1 @ const, 0.0, atol=1e-13)
    np.testing.assert_allclose(S2 @ const, 0.0, atol=1e-13)
    c = np.concatenate([const, const])
    np.testing.assert_allclose(M @ c, 0.0, atol=1e-13)


def test_stabilization_energy_matches_independent_resummation():
    case = sphere_case()
    mesh = make_icosphere(case.surface, 2)
    dofs = build_dof_system(mesh)
    system = assemble(mesh, dofs, case)
    u = RNG.standard_normal(dofs.n_dofs)

    # independent per-edge quadrature of the jump energy
    from nztsurf.assembly import edge_jump_tables, EDGE_RULE
    from nztsurf.dofs import local_coefficients
    tables = face_tables(mesh)
    jrows, _ = edge_jump_tables(mesh, dofs, tables.coeffs, tables.grad_lambda)
    loc = local_coefficients(dofs, u)
    c18 = np.concatenate([loc[mesh.edge_faces[:, 0]],
                          loc[mesh.edge_faces[:, 1]]], axis=1)
    J = np.einsum("ei,eip->ep", c18, jrows)
    jump_energy = float(np.sum(EDGE_RULE.weights[None, :] * J ** 2))

    # subtract the volume part from the full quadratic form
    from nztsurf.assembly import _transfer9
    T9 = _transfer9(dofs)
    S = np.einsum("p,fip,fjp->fij",
                  __import__("nztsurf.element", fromlist=["TRIANGLE_RULE"])
                  .TRIANGLE_RULE.weights,
                  tables.laplacians, tables.laplacians) * tables.areas[:, None, None]
    vol = float(np.einsum("fi,fij,fj->", loc, S, loc))
    total = float(u @ (system.A @ u))
    assert total - vol == pytest.approx(jump_energy, rel=1e-12)


def test_assemble_invariants_sphere_level2():
    case = sphere_case()
    mesh = make_icosphere(case.surface, 2)
    dofs = build_dof_system(mesh)
    system = assemble(mesh, dofs, case)
    A, b, m, k = system.A, system.b, system.m, system.kernel
    assert system.n == 486
    # exact symmetry
    diff = (A - A.T).tocoo()
    assert len(diff.data) == 0 or np.max(np.abs(diff.data)) == 0.0
    # kernel annihilation
    norm_inf = np.abs(A).sum(axis=1).max()
    assert np.linalg.norm(A @ k) <= 1e-10 * norm_inf
    # mean-zero load
    assert abs(k @ b) <= 1e-10 * np.linalg.norm(b)
    # weight vector pairs with the kernel to the total area
    assert m @ k == pytest.approx(system.area, rel=1e-12)
    # positive semidefinite
    for _ in range(20):
        x = RNG.standard_normal(system.n)
        assert x @ (A @ x) >= -1e-10 * norm_inf * (x @ x)


def test_assemble_deterministic():
    case = sphere_case()
    mesh = make_icosphere(case.surface, 1)
    dofs = build_dof_system(mesh)
    s1 = assemble(mesh, dofs, case)
    s2 = assemble(mesh, dofs, case)
    assert np.array_equal(s1.A.data, s2.A.data)
    assert np.array_equal(s1.A.indices, s2.A.indices)
    assert np.array_equal(s1.b, s2.b)
    assert np.array_equal(s1.m, s2.m)


def test_norm_growth_rate_with_refinement():
    case = sphere_case()
    mesh = make_icosphere(case.surface, 1)
    norms = []
    for _ in range(3):
        dofs = build_dof_system(mesh)
        system = assemble(mesh, dofs, case)
        norms.append(np.abs(system.A).sum(axis=1).max())
        mesh = refine(mesh)
    ratios = np.array(norms[1:]) / np.array(norms[:-1])
    assert np.all((2.5 < ratios) & (ratios < 6.0))
