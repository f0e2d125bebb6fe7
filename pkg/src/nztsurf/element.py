"""The 9-DoF triangular plate element: P2 plus three quartic bubbles.

The shape space on a triangle K is P2(K) + span{q_ij}, where each
enrichment q_ij is a quartic built from barycentric coordinates and a
cubic-bubble correction. Its defining property: for every member v and
every edge e, the mean of the normal derivative over e equals the
average of the endpoint normal derivatives, which is what makes a
parameter-free jump stabilization possible on non-flat meshes.

Degrees of freedom are the three vertex values and the two in-plane
gradient components at each vertex (9 per triangle). All math happens
in the facet's 2D frame; polynomials are stored as coefficient vectors
over the 15 monomials xi^a eta^b (a + b <= 4) with (xi, eta) the second
and third barycentric coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule", "ShapeBasis", "TRIANGLE_RULE", "EDGE_RULE",
    "build_shape_basis", "build_all_bases", "eval_basis",
    "edge_mean_identity_check", "DegenerateTriangle", "IllConditioned",
    "MONOMIAL_POWERS", "monomial_matrix", "DXI", "DETA",
]


class DegenerateTriangle(ValueError):
    """Triangle area is numerically zero."""


class IllConditioned(RuntimeError):
    """DoF matrix condition number exceeds the trust threshold."""


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule; weights sum to 1 (scale by area / length)."""

    points: np.ndarray   # (P, 3) barycentric or (P,) on [0, 1]
    weights: np.ndarray  # (P,)


def _triangle_rule_degree6():
    # symmetric 12-point rule, exact for polynomials of degree <= 6
    b1, w1 = 0.063089014491502, 0.050844906370207
    b2, w2 = 0.249286745170910, 0.116786275726379
    a3, b3 = 0.053145049844816, 0.310352451033785
    w3 = 0.082851075618374
    pts, wts = [], []
    for b, w in ((b1, w1), (b2, w2)):
        a = 1 - 2 * b
        for lam in ((a, b, b), (b, a, b), (b, b, a)):
            pts.append(lam)
            wts.append(w)
    c3 = 1 - a3 - b3
    for lam in ((a3, b3, c3), (a3, c3, b3), (b3, a3, c3),
                (b3, c3, a3), (c3, a3, b3), (c3, b3, a3)):
        pts.append(lam)
        wts.append(w3)
    return QuadratureRule(np.array(pts), np.array(wts))


def _edge_rule_gauss4():
    # 4-point Gauss-Legendre on [0, 1], exact for degree <= 7
    r1 = np.sqrt(3 / 7 - 2 / 7 * np.sqrt(6 / 5))
    r2 = np.sqrt(3 / 7 + 2 / 7 * np.sqrt(6 / 5))
    w1 = (18 + np.sqrt(30)) / 72
    w2 = (18 - np.sqrt(30)) / 72
    pts = 0.5 * (1 + np.array([-r2, -r1, r1, r2]))
    wts = np.array([w2, w1, w1, w2])
    return QuadratureRule(pts, wts)


TRIANGLE_RULE = _triangle_rule_degree6()
EDGE_RULE = _edge_rule_gauss4()

# ---------------------------------------------------------------------------
# monomial machinery over (xi, eta) = (lambda_2, lambda_3), degree <= 4

MONOMIAL_POWERS = [(a, b) for total in range(5)
                   for a in range(total, -1, -1)
                   for b in (total - a,)]
_N_MONO = len(MONOMIAL_POWERS)  # 15
_MONO_INDEX = {p: i for i, p in enumerate(MONOMIAL_POWERS)}


def _grid_to_vec(grid):
    return np.array([grid[a, b] for a, b in MONOMIAL_POWERS])


def _pmul(g1, g2):
    out = np.zeros((5, 5))
    for a1 in range(5):
        for b1 in range(5 - a1):
            v = g1[a1, b1]
            if v == 0:
                continue
            out[a1:a1 + 5 - a1, b1:b1 + 5 - b1] += v * g2[:5 - a1, :5 - b1]
    return out


def _poly(*terms):
    """Grid from ((coef, a, b), ...) monomial terms."""
    g = np.zeros((5, 5))
    for c, a, b in terms:
        g[a, b] += c
    return g


def _derivative_matrix(axis):
    D = np.zeros((_N_MONO, _N_MONO))
    for i, (a, b) in enumerate(MONOMIAL_POWERS):
        if axis == 0 and a > 0:
            D[_MONO_INDEX[(a - 1, b)], i] = a
        if axis == 1 and b > 0:
            D[_MONO_INDEX[(a, b - 1)], i] = b
    return D


DXI = _derivative_matrix(0)
DETA = _derivative_matrix(1)


def monomial_matrix(points_bary):
    """Monomial values at barycentric points: shape (15, P)."""
    pts = np.atleast_2d(points_bary)
    xi, eta = pts[:, 1], pts[:, 2]
    return np.stack([xi ** a * eta ** b for a, b in MONOMIAL_POWERS])


def _span_templates():
    """Geometry-independent parts of the 9 spanning functions.

    Returns (base (9, 15), bubble (3, 15)) where spanning function n is
    base[n] + c_n * bubble[n - 6] for n >= 6, with c_n the per-triangle
    gradient ratio of the enrichment.
    """
    lam = [_poly((1, 0, 0), (-1, 1, 0), (-1, 0, 1)),
           _poly((1, 1, 0)), _poly((1, 0, 1))]
    bub = _pmul(_pmul(lam[0], lam[1]), lam[2])
    base = np.zeros((9, _N_MONO))
    base[0] = _grid_to_vec(_poly((1, 0, 0)))
    base[1] = _grid_to_vec(lam[1])
    base[2] = _grid_to_vec(lam[2])
    base[3] = _grid_to_vec(_pmul(lam[1], lam[1]))
    base[4] = _grid_to_vec(_pmul(lam[1], lam[2]))
    base[5] = _grid_to_vec(_pmul(lam[2], lam[2]))
    bubble = np.zeros((3, _N_MONO))
    for n, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        k = 3 - i - j
        aij = _pmul(_pmul(lam[i], lam[j]), lam[i] - lam[j])
        base[6 + n] = _grid_to_vec(aij + 2 * _pmul(lam[i] - lam[j], bub))
        bubble[n] = _grid_to_vec(_pmul(2 * lam[k] - _poly((1, 0, 0)), bub))
    return base, bubble


_SPAN_BASE, _SPAN_BUBBLE = _span_templates()
_VERTS_BARY = np.eye(3)
_MONO_AT_VERTS = monomial_matrix(_VERTS_BARY)          # (15, 3)
_PAIR_KS = np.array([2, 1, 0])  # k opposite to pairs (0,1), (0,2), (1,2)


@dataclass(frozen=True)
class ShapeBasis:
    """Nodal basis of one triangle in its 2D frame.

    ``coeffs[m]`` holds the monomial coefficients of nodal function m;
    ordering: (value, d/dx, d/dy) at vertex 0, then vertices 1, 2.
    """

    triangle: np.ndarray      # (3, 2) vertex coordinates
    coeffs: np.ndarray        # (9, 15)
    grad_lambda: np.ndarray   # (3, 2)


def build_all_bases(tris):
    """Batched nodal-basis construction for triangles ``tris`` (F, 3, 2).

    Returns (coeffs (F, 9, 15), grad_lambda (F, 3, 2), area (F,)).
    """
    tris = np.asarray(tris, dtype=float)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    diam2 = np.maximum(np.einsum("fi,fi->f", e1, e1),
                       np.einsum("fi,fi->f", e2, e2))
    if np.any(np.abs(det) <= 2e-14 * diam2):
        raise DegenerateTriangle("triangle area is numerically zero")
    inv_det = 1.0 / det
    # gradients of barycentric coordinates (rows of the inverse Jacobian)
    g2 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) * inv_det[:, None]
    g3 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) * inv_det[:, None]
    g1 = -g2 - g3
    grad_lambda = np.stack([g1, g2, g3], axis=1)

    # enrichment ratio c = 3 (grad l_i - grad l_j) . grad l_k / |grad l_k|^2
    pairs = ((0, 1), (0, 2), (1, 2))
    c = np.empty((len(tris), 3))
    for n, (i, j) in enumerate(pairs):
        k = _PAIR_KS[n]
        gk = grad_lambda[:, k]
        c[:, n] = 3 * np.einsum("fi,fi->f", grad_lambda[:, i] - grad_lambda[:, j],
                                gk) / np.einsum("fi,fi->f", gk, gk)

    span = np.broadcast_to(_SPAN_BASE, (len(tris), 9, _N_MONO)).copy()
    span[:, 6:] += c[:, :, None] * _SPAN_BUBBLE[None]

    # DoF matrix: values and physical gradients at the vertices
    vals = span @ _MONO_AT_VERTS                      # (F, 9, 3)
    dxi = (span @ DXI.T) @ _MONO_AT_VERTS             # (F, 9, 3)
    deta = (span @ DETA.T) @ _MONO_AT_VERTS
    D = np.empty((len(tris), 9, 9))
    for m in range(3):
        D[:, 3 * m, :] = vals[:, :, m]
        D[:, 3 * m + 1, :] = (dxi[:, :, m] * g2[:, None, 0]
                              + deta[:, :, m] * g3[:, None, 0])
        D[:, 3 * m + 2, :] = (dxi[:, :, m] * g2[:, None, 1]
                              + deta[:, :, m] * g3[:, None, 1])
    cond = (np.abs(D).sum(axis=2).max(axis=1)
            * np.abs(np.linalg.inv(D)).sum(axis=2).max(axis=1))
    if np.any(cond > 1e12):
        raise IllConditioned(f"DoF matrix condition {cond.max():.2e} > 1e12")
    coeffs = np.einsum("fnm,fnk->fmk", np.linalg.inv(D), span)
    return coeffs, grad_lambda, 0.5 * np.abs(det)


def build_shape_basis(triangle):
    """Nodal basis for a single triangle given as (3, 2) coordinates."""
    triangle = np.asarray(triangle, dtype=float)
    coeffs, grad_lambda, _ = build_all_bases(triangle[None])
    return ShapeBasis(triangle, coeffs[0], grad_lambda[0])


def eval_basis(basis, points_bary):
    """Values, 2D gradients, and Laplacians at barycentric points.

    Returns (values (9, P), grads (9, P, 2), laps (9, P)).
    """
    M = monomial_matrix(points_bary)
    c = basis.coeffs
    g2, g3 = basis.grad_lambda[1], basis.grad_lambda[2]
    vals = c @ M
    dxi = (c @ DXI.T) @ M
    deta = (c @ DETA.T) @ M
    grads = np.stack([dxi * g2[0] + deta * g3[0],
                      dxi * g2[1] + deta * g3[1]], axis=2)
    dxx = (c @ DXI.T @ DXI.T) @ M
    dxe = (c @ DXI.T @ DETA.T) @ M
    dee = (c @ DETA.T @ DETA.T) @ M
    laps = (dxx * (g2 @ g2) + 2 * dxe * (g2 @ g3) + dee * (g3 @ g3))
    return vals, grads, laps


def edge_barycentric(edge, t):
    """Barycentric coordinates of points at parameter t on local edge.

    Edge k runs from vertex k to vertex (k + 1) % 3.
    """
    t = np.atleast_1d(t)
    lam = np.zeros((len(t), 3))
    lam[:, edge] = 1 - t
    lam[:, (edge + 1) % 3] = t
    return lam


def edge_mean_identity_check(basis, edge, coef=None, rule=EDGE_RULE):
    """Residual of the edge-mean identity for the normal derivative.

    |(1/|e|) int_e dv/dn ds  -  (dv/dn(a1) + dv/dn(a2)) / 2| for the
    member v of the shape space with nodal coefficients ``coef``
    (random if omitted).
    """
    if coef is None:
        coef = np.random.default_rng(0).standard_normal(9)
    tri = basis.triangle
    a, b = tri[edge], tri[(edge + 1) % 3]
    tau = b - a
    n = np.array([tau[1], -tau[0]])
    n /= np.linalg.norm(n)
    mid = 0.5 * (a + b)
    centroid = tri.mean(axis=0)
    if np.dot(n, mid - centroid) < 0:
        n = -n

    lam = edge_barycentric(edge, rule.points)
    _, grads, _ = eval_basis(basis, lam)
    dn = np.einsum("m,mpk,k->p", coef, grads, n)
    mean = float(rule.weights @ dn)

    lam_ends = edge_barycentric(edge, np.array([0.0, 1.0]))
    _, grads_e, _ = eval_basis(basis, lam_ends)
    dn_ends = np.einsum("m,mpk,k->p", coef, grads_e, n)
    return abs(mean - 0.5 * (dn_ends[0] + dn_ends[1]))
