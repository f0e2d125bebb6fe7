"""Interpolation, error functionals, and convergence-order computation.

Nothing here feeds back into the solver; these operators exist to
measure the discretization: nodal interpolation with gradient DoFs set
through the tangent-plane transport, the continuous companion built by
averaging edge-tangential vertex derivatives, and the L2-type error
norms reported by the experiments (value, gradient, facet Laplacian,
and the root of the 1/h_e-weighted conormal-jump sum).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import (EDGE_RULE, TRIANGLE_RULE, edge_jump_tables,
                       face_quadrature_geometry, face_tables)
from .dofs import local_coefficients, surface_piola_pull
from .geometry import probe
from .manufactured import (exact_laplace_beltrami, exact_tangential_gradient,
                           exact_value)

__all__ = [
    "ErrorReport", "LevelErrors", "interpolate", "conforming_relative",
    "compute_errors", "convergence_orders", "broken_h1_seminorm", "l2_norm",
]


@dataclass(frozen=True)
class LevelErrors:
    dofs: int
    h: float
    e0: float
    e1: float
    e_delta: float
    e_jump: float


@dataclass
class ErrorReport:
    """Per-level errors of one refinement family."""

    case_name: str
    uses_projected_gradient: bool  # E1* (no Weingarten map) instead of E1
    rows: list = field(default_factory=list)

    def add(self, row):
        self.rows.append(row)


def convergence_orders(report):
    """log2 error ratios between consecutive levels, per error column."""
    orders = {}
    for name in ("e0", "e1", "e_delta", "e_jump"):
        vals = [getattr(r, name) for r in report.rows]
        orders[name] = [float(np.log2(a / b))
                        for a, b in zip(vals[:-1], vals[1:])]
    return orders


def basis_integrals(mesh, dof_system, rule=TRIANGLE_RULE):
    """Weight vector m_i = int Phi_i and the total facet area."""
    from .assembly import _transfer9
    tables = face_tables(mesh, rule)
    wa = rule.weights[None, :] * tables.areas[:, None]
    m_loc = np.einsum("fp,fip->fi", wa, tables.values)
    m_loc = np.einsum("fki,fk->fi", _transfer9(dof_system), m_loc)
    m = np.zeros(dof_system.n_dofs)
    np.add.at(m, dof_system.face_dofs.ravel(), m_loc.ravel())
    return m, float(tables.areas.sum())


def interpolate(case, mesh, dof_system, weights=None):
    """Nodal interpolant of the exact solution, shifted to zero mean.

    Vertex values are the exact values; vertex gradient DoFs are the
    anchor-frame components of the tangent-plane transport of the exact
    surface gradient. ``weights`` may pass a precomputed
    (m, area) pair to skip requadrature.
    """
    verts = mesh.vertices
    u = np.zeros(dof_system.n_dofs)
    u[0::3] = exact_value(case, verts)
    g = exact_tangential_gradient(case, verts)
    pulled = surface_piola_pull(mesh, mesh.anchors, g, verts)
    u[1::3] = np.einsum("vi,vi->v", pulled, dof_system.anchor_t1)
    u[2::3] = np.einsum("vi,vi->v", pulled, dof_system.anchor_t2)
    m, area = weights if weights is not None else \
        basis_integrals(mesh, dof_system)
    u -= (m @ u) / area * dof_system.kernel
    return u


def compute_errors(case, mesh, dof_system, u, rule=TRIANGLE_RULE,
                   edge_rule=EDGE_RULE):
    """One convergence-table row for the coefficient vector ``u``."""
    tables = face_tables(mesh, rule)
    loc = local_coefficients(dof_system, u)        # (F, 9)
    wa = rule.weights[None, :] * tables.areas[:, None]

    pts, proj = face_quadrature_geometry(mesh, rule)
    flat = proj.reshape(-1, 3)
    shape = proj.shape[:2]

    u_exact = exact_value(case, flat).reshape(shape)
    u_h = np.einsum("fi,fip->fp", loc, tables.values)
    e0 = np.sqrt(np.sum(wa * (u_exact - u_h) ** 2))

    grad_exact = exact_tangential_gradient(case, flat)
    gx = np.einsum("fi,fip->fp", loc, tables.grad_x)
    gy = np.einsum("fi,fip->fp", loc, tables.grad_y)
    grad_h = (gx[..., None] * mesh.t1[:, None, :]
              + gy[..., None] * mesh.t2[:, None, :])
    if case.mode == "closest_point_ad":
        # Weingarten-free variant: compare with P_h (grad u)^e
        target = grad_exact
    else:
        pr = probe(mesh.surface, pts.reshape(-1, 3))
        dd, nu, H = pr.d, pr.nu, pr.H
        v = (grad_exact - nu * np.einsum("ni,ni->n", nu, grad_exact)[:, None]
             - dd[:, None] * np.einsum("nij,nj->ni", H, grad_exact))
        target = v
    nu_h = np.repeat(mesh.normals, shape[1], axis=0)
    target = target - nu_h * np.einsum("ni,ni->n", nu_h, target)[:, None]
    diff = target.reshape(shape + (3,)) - grad_h
    e1 = np.sqrt(np.sum(wa * np.einsum("fpi,fpi->fp", diff, diff)))

    lap_exact = exact_laplace_beltrami(case, flat).reshape(shape)
    lap_h = np.einsum("fi,fip->fp", loc, tables.laplacians)
    e_delta = np.sqrt(np.sum(wa * (lap_exact - lap_h) ** 2))

    jrows, jcols = edge_jump_tables(mesh, dof_system, tables.coeffs,
                                    tables.grad_lambda, edge_rule)
    c18 = np.concatenate([loc[mesh.edge_faces[:, 0]],
                          loc[mesh.edge_faces[:, 1]]], axis=1)
    J = np.einsum("ei,eip->ep", c18, jrows)
    e_jump = np.sqrt(np.sum(edge_rule.weights[None, :] * J ** 2))

    return LevelErrors(dofs=dof_system.n_dofs, h=mesh.h, e0=float(e0),
                       e1=float(e1), e_delta=float(e_delta),
                       e_jump=float(e_jump))


def conforming_relative(u, mesh, dof_system):
    """Continuous companion: per-face local DoFs (F, 9).

    Vertex values are kept; at each vertex the two edge-tangential
    derivatives of the face are replaced by their across-edge averages,
    which determine the in-plane gradient by a 2x2 solve. The result is
    continuous across edges (restrictions to an edge are cubics fixed by
    endpoint values and tangential derivatives).
    """
    loc = local_coefficients(dof_system, u)        # (F, 9)
    F = mesh.n_faces
    # 3D gradient of v|_K at each local vertex
    g3d = (loc[:, [1, 4, 7]][..., None] * mesh.t1[:, None, :]
           + loc[:, [2, 5, 8]][..., None] * mesh.t2[:, None, :])  # (F, 3, 3)

    # averaged tangential derivative per (edge, endpoint)
    tau = mesh.edge_tangents
    avg = np.zeros((mesh.n_edges, 2))
    for s in range(2):
        f = mesh.edge_faces[:, s]
        for endpoint in range(2):
            lv = mesh.edge_local[:, s, endpoint]
            gv = g3d[f, lv]                        # (E, 3)
            avg[:, endpoint] += 0.5 * np.einsum("ei,ei->e", gv, tau)

    # face -> edge lookup: edge id of local edge k = (vk, vk+1)
    edge_ids = {(a, b): i for i, (a, b) in enumerate(map(tuple, mesh.edges))}
    face_edge = np.empty((F, 3), dtype=np.int64)
    for k in range(3):
        a = mesh.faces[:, k]
        b = mesh.faces[:, (k + 1) % 3]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        face_edge[:, k] = [edge_ids[(x, y)] for x, y in zip(lo, hi)]

    out = loc.copy()
    for v in range(3):
        # the two face edges meeting local vertex v
        e_prev = face_edge[:, (v + 2) % 3]
        e_next = face_edge[:, v]
        glob = mesh.faces[:, v]
        rows = []
        rhs = []
        for e in (e_next, e_prev):
            t = mesh.edge_tangents[e]
            rows.append(np.stack([np.einsum("fi,fi->f", t, mesh.t1),
                                  np.einsum("fi,fi->f", t, mesh.t2)], axis=1))
            endpoint = (mesh.edges[e, 1] == glob).astype(int)
            rhs.append(avg[e, endpoint])
        Amat = np.stack(rows, axis=1)              # (F, 2, 2)
        grad2d = np.linalg.solve(Amat, np.stack(rhs, axis=1)[..., None])[..., 0]
        out[:, 3 * v + 1] = grad2d[:, 0]
        out[:, 3 * v + 2] = grad2d[:, 1]
    return out


def l2_norm(mesh, dof_system, u, rule=TRIANGLE_RULE):
    tables = face_tables(mesh, rule)
    loc = local_coefficients(dof_system, u)
    wa = rule.weights[None, :] * tables.areas[:, None]
    vals = np.einsum("fi,fip->fp", loc, tables.values)
    return float(np.sqrt(np.sum(wa * vals ** 2)))


def broken_h1_seminorm(mesh, dof_system, u, rule=TRIANGLE_RULE):
    tables = face_tables(mesh, rule)
    loc = local_coefficients(dof_system, u)
    wa = rule.weights[None, :] * tables.areas[:, None]
    gx = np.einsum("fi,fip->fp", loc, tables.grad_x)
    gy = np.einsum("fi,fip->fp", loc, tables.grad_y)
    return float(np.sqrt(np.sum(wa * (gx ** 2 + gy ** 2))))
