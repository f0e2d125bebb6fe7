"""Global sparse system for the stabilized surface bilaplacian scheme.

The bilinear form has two parts: the elementwise product of facet
Laplacians and, for every edge, the mean-free jump of the conormal
derivative weighted by 1/h_e. Because the discrete gradient transfers
between faces with a divergence-preserving tangent-plane map (see
:mod:`nztsurf.dofs`), the jump term needs no tunable penalty parameter.

The load vector uses the source composed with the closest-point
projection and is corrected to zero mean against the facet measure, so
the system is consistent on the singular (constant) direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .element import (DETA, DXI, EDGE_RULE, TRIANGLE_RULE, build_all_bases,
                      monomial_matrix)
from .geometry import probe
from .manufactured import exact_source

__all__ = ["SparseSystem", "FaceTables", "element_stiffness",
           "edge_stabilization", "assemble", "face_tables",
           "edge_jump_tables", "face_quadrature_geometry"]


@dataclass(frozen=True)
class SparseSystem:
    A: sp.csr_matrix    # symmetric positive semidefinite, n = 3V
    b: np.ndarray       # mean-corrected load
    m: np.ndarray       # integrals of the global basis functions
    kernel: np.ndarray  # constant-function coefficients (null vector of A)
    area: float         # |Gamma_h|

    @property
    def n(self):
        return len(self.b)


def element_stiffness(basis, rule=TRIANGLE_RULE):
    """9x9 facet matrix S_ij = int_K  Lap N_i Lap N_j."""
    from .element import eval_basis
    tri = basis.triangle
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    _, _, laps = eval_basis(basis, rule.points)
    return area * np.einsum("p,ip,jp->ij", rule.weights, laps, laps)


def edge_stabilization(bases, edge_locals, conormals2d, rule=EDGE_RULE):
    """18x18 jump coupling of two facets sharing an edge.

    ``bases`` are the two facets' nodal bases, ``edge_locals[s]`` the
    local vertex indices (tail, head) of the shared edge in facet s, and
    ``conormals2d[s]`` the in-plane outward conormal in facet s's frame.
    The h_e weight cancels against the arclength measure, so the result
    is exactly h_e^{-1} int_e [dN.n][dN.n] ds.
    """
    from .element import eval_basis
    rows = []
    for s in range(2):
        la, lb = edge_locals[s]
        lam = np.zeros((len(rule.points), 3))
        lam[:, la] = 1 - rule.points
        lam[:, lb] = rule.points
        _, grads, _ = eval_basis(bases[s], lam)
        rows.append(np.einsum("ipk,k->ip", grads, conormals2d[s]))
    j = np.concatenate(rows)                       # (18, P)
    return np.einsum("p,ip,jp->ij", rule.weights, j, j)


@dataclass(frozen=True)
class FaceTables:
    """Basis evaluations at the triangle rule points, batched per face."""

    coeffs: np.ndarray       # (F, 9, 15)
    grad_lambda: np.ndarray  # (F, 3, 2)
    areas: np.ndarray        # (F,)
    values: np.ndarray       # (F, 9, P)
    grad_x: np.ndarray       # (F, 9, P) in the face frame
    grad_y: np.ndarray       # (F, 9, P)
    laplacians: np.ndarray   # (F, 9, P)


def face_tables(mesh, rule=TRIANGLE_RULE):
    coeffs, grad_lambda, areas = build_all_bases(mesh.coords2d)
    MQ = monomial_matrix(rule.points)
    vals = coeffs @ MQ
    dxi = (coeffs @ DXI.T) @ MQ
    deta = (coeffs @ DETA.T) @ MQ
    g2, g3 = grad_lambda[:, 1], grad_lambda[:, 2]
    gx = dxi * g2[:, None, 0, None] + deta * g3[:, None, 0, None]
    gy = dxi * g2[:, None, 1, None] + deta * g3[:, None, 1, None]
    cxx = coeffs @ (DXI.T @ DXI.T)
    cxe = coeffs @ (DXI.T @ DETA.T)
    cee = coeffs @ (DETA.T @ DETA.T)
    laps = ((cxx @ MQ) * np.einsum("fi,fi->f", g2, g2)[:, None, None]
            + 2 * (cxe @ MQ) * np.einsum("fi,fi->f", g2, g3)[:, None, None]
            + (cee @ MQ) * np.einsum("fi,fi->f", g3, g3)[:, None, None])
    return FaceTables(coeffs, grad_lambda, areas, vals, gx, gy, laps)


def face_quadrature_geometry(mesh, rule=TRIANGLE_RULE):
    """3D quadrature points per face and their projections: (F, P, 3)."""
    tri = mesh.vertices[mesh.faces]                # (F, 3, 3)
    pts = np.einsum("pv,fvi->fpi", rule.points, tri)
    flat = pts.reshape(-1, 3)
    proj = probe(mesh.surface, flat).p.reshape(pts.shape)
    return pts, proj


def edge_jump_tables(mesh, dof_system, coeffs, grad_lambda, rule=EDGE_RULE):
    """Conormal-derivative rows of all edge jumps: (E, 18, P) plus the
    stacked global column indices (E, 18)."""
    E = mesh.n_edges
    P = len(rule.points)
    from .element import MONOMIAL_POWERS
    rows = []
    cols = []
    for s in range(2):
        f = mesh.edge_faces[:, s]
        la = mesh.edge_local[:, s, 0]
        lb = mesh.edge_local[:, s, 1]
        lam = np.zeros((E, P, 3))
        idx = np.arange(E)
        lam[idx[:, None], np.arange(P)[None, :], la[:, None]] = 1 - rule.points
        lam[idx[:, None], np.arange(P)[None, :], lb[:, None]] = rule.points
        xi, eta = lam[:, :, 1], lam[:, :, 2]
        mono = np.stack([xi ** a * eta ** b for a, b in MONOMIAL_POWERS],
                        axis=2)                    # (E, P, 15)
        cxi = coeffs[f] @ DXI.T                    # (E, 9, 15)
        ceta = coeffs[f] @ DETA.T
        dxi = np.einsum("eik,epk->eip", cxi, mono)
        deta = np.einsum("eik,epk->eip", ceta, mono)
        g2, g3 = grad_lambda[f, 1], grad_lambda[f, 2]
        gx = dxi * g2[:, None, 0, None] + deta * g3[:, None, 0, None]
        gy = dxi * g2[:, None, 1, None] + deta * g3[:, None, 1, None]
        n = mesh.edge_conormals[:, s]
        n2d = np.stack([np.einsum("ei,ei->e", n, mesh.t1[f]),
                        np.einsum("ei,ei->e", n, mesh.t2[f])], axis=1)
        rows.append(gx * n2d[:, None, 0, None] + gy * n2d[:, None, 1, None])
        cols.append(dof_system.face_dofs[f])
    return np.concatenate(rows, axis=1), np.concatenate(cols, axis=1)


def _transfer18(dof_system, mesh):
    """Block transfer matrices for edge pairs: (E, 18, 18)."""
    E = mesh.n_edges
    T = np.zeros((E, 18, 18))
    for s in range(2):
        f = mesh.edge_faces[:, s]
        off = 9 * s
        for v in range(3):
            T[:, off + 3 * v, off + 3 * v] = 1.0
            T[:, off + 3 * v + 1:off + 3 * v + 3,
              off + 3 * v + 1:off + 3 * v + 3] = dof_system.transfer[f, v]
    return T


def _transfer9(dof_system):
    F = len(dof_system.transfer)
    T = np.zeros((F, 9, 9))
    for v in range(3):
        T[:, 3 * v, 3 * v] = 1.0
        T[:, 3 * v + 1:3 * v + 3, 3 * v + 1:3 * v + 3] = \
            dof_system.transfer[:, v]
    return T


def assemble(mesh, dof_system, case, rule=TRIANGLE_RULE, edge_rule=EDGE_RULE):
    """Assemble the stabilized system for a manufactured case."""
    n = dof_system.n_dofs
    tables = face_tables(mesh, rule)
    areas = tables.areas
    T9 = _transfer9(dof_system)

    # facet Laplacian term
    S = np.einsum("p,fip,fjp->fij", rule.weights, tables.laplacians,
                  tables.laplacians)
    S *= areas[:, None, None]
    G = np.einsum("fki,fkl,flj->fij", T9, S, T9, optimize=True)
    G = 0.5 * (G + G.transpose(0, 2, 1))
    rows_f = np.repeat(dof_system.face_dofs, 9, axis=1).ravel()
    cols_f = np.tile(dof_system.face_dofs, (1, 9)).ravel()

    # edge stabilization term
    jrows, jcols = edge_jump_tables(mesh, dof_system, tables.coeffs,
                                    tables.grad_lambda, edge_rule)
    Me = np.einsum("p,eip,ejp->eij", edge_rule.weights, jrows, jrows)
    T18 = _transfer18(dof_system, mesh)
    Ge = np.einsum("eki,ekl,elj->eij", T18, Me, T18, optimize=True)
    Ge = 0.5 * (Ge + Ge.transpose(0, 2, 1))
    rows_e = np.repeat(jcols, 18, axis=1).ravel()
    cols_e = np.tile(jcols, (1, 18)).ravel()

    A = sp.coo_matrix(
        (np.concatenate([G.ravel(), Ge.ravel()]),
         (np.concatenate([rows_f, rows_e]),
          np.concatenate([cols_f, cols_e]))), shape=(n, n)).tocsr()
    # duplicate summation order differs between (i, j) and (j, i); make
    # the matrix exactly symmetric
    A = 0.5 * (A + A.T).tocsr()
    A.sort_indices()

    # load and weight vectors
    _, proj = face_quadrature_geometry(mesh, rule)
    f_at_p = exact_source(case, proj.reshape(-1, 3)).reshape(proj.shape[:2])
    wa = rule.weights[None, :] * areas[:, None]    # (F, P)
    b_loc = np.einsum("fp,fip->fi", wa * f_at_p, tables.values)
    m_loc = np.einsum("fp,fip->fi", wa, tables.values)
    b_loc = np.einsum("fki,fk->fi", T9, b_loc)
    m_loc = np.einsum("fki,fk->fi", T9, m_loc)
    b = np.zeros(n)
    m = np.zeros(n)
    np.add.at(b, dof_system.face_dofs.ravel(), b_loc.ravel())
    np.add.at(m, dof_system.face_dofs.ravel(), m_loc.ravel())
    area = float(areas.sum())
    f_mean = float((wa * f_at_p).sum()) / area
    b -= f_mean * m
    return SparseSystem(A=A, b=b, m=m, kernel=dof_system.kernel.copy(),
                        area=area)
