"""Global degrees of freedom and the inter-face vertex-gradient transfer.

Every vertex carries three unknowns: its value and the two components
of the discrete tangential gradient expressed in the frame of that
vertex's anchor face. A face sees its own local gradient DoFs, related
to the anchor's by the tangent-plane Piola map

    M = (nu_a . nu_K) [I - nu_a (x) nu_K / (nu_a . nu_K)],

which has two crucial algebraic properties: it sends any vector into
the plane of K, and the conormal sums M x . n1 + M x . n2 over an edge
cancel exactly (a Binet-Cauchy identity), giving the discrete gradient
a weak divergence conformity across edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import probe

__all__ = [
    "DofSystem", "NearTangentFlip", "mka_matrix", "build_dof_system",
    "local_transfer", "surface_piola_pull", "local_coefficients",
]


class NearTangentFlip(ValueError):
    """Adjacent face normals nearly orthogonal: broken mesh or geometry."""


def _mka_batch(nu_a, nu_k):
    c = np.einsum("...i,...i->...", nu_a, nu_k)
    if np.any(c <= 0.1):
        raise NearTangentFlip(
            f"anchor/face normal dot product {c.min():.3f} <= 0.1")
    eye = np.broadcast_to(np.eye(3), nu_a.shape[:-1] + (3, 3))
    return c[..., None, None] * eye - nu_a[..., :, None] * nu_k[..., None, :]


def mka_matrix(nu_anchor, nu_k):
    """Tangent-plane transfer matrix from the anchor plane to face K."""
    return _mka_batch(np.asarray(nu_anchor, dtype=float),
                      np.asarray(nu_k, dtype=float))


@dataclass(frozen=True)
class DofSystem:
    """DoF bookkeeping for one mesh: 3 unknowns per vertex."""

    n_dofs: int
    anchor_t1: np.ndarray      # (V, 3) frame of the anchor face
    anchor_t2: np.ndarray      # (V, 3)
    transfer: np.ndarray       # (F, 3, 2, 2) anchor-frame -> face-frame
    face_dofs: np.ndarray      # (F, 9) global indices per local DoF
    kernel: np.ndarray         # coefficients of the constant function 1

    @property
    def n_vertices(self):
        return self.n_dofs // 3


def build_dof_system(mesh):
    V, F = mesh.n_vertices, mesh.n_faces
    va = mesh.anchors[mesh.faces]                  # (F, 3) anchor faces
    nu_a = mesh.normals[va]                        # (F, 3, 3)
    nu_k = np.broadcast_to(mesh.normals[:, None, :], (F, 3, 3))
    M = _mka_batch(nu_a, nu_k)                     # (F, 3, 3, 3)

    frame_k = np.stack([mesh.t1, mesh.t2], axis=2)         # (F, 3, 2)
    frame_a = np.stack([mesh.t1[va], mesh.t2[va]], axis=3)  # (F, 3, 3, 2)
    # B = F_K^T M F_anchor per (face, local vertex)
    transfer = np.einsum("fit,fvij,fvju->fvtu", frame_k, M, frame_a,
                         optimize=True)

    dof_ids = 3 * mesh.faces[:, :, None] + np.arange(3)[None, None, :]
    face_dofs = dof_ids.reshape(F, 9)

    kernel = np.zeros(3 * V)
    kernel[0::3] = 1.0

    return DofSystem(n_dofs=3 * V,
                     anchor_t1=mesh.t1[mesh.anchors],
                     anchor_t2=mesh.t2[mesh.anchors],
                     transfer=transfer, face_dofs=face_dofs, kernel=kernel)


def local_transfer(face, dof_system):
    """9x9 matrix mapping a face's global DoF slice to its local DoFs."""
    T = np.zeros((9, 9))
    for v in range(3):
        T[3 * v, 3 * v] = 1.0
        T[3 * v + 1:3 * v + 3, 3 * v + 1:3 * v + 3] = \
            dof_system.transfer[face, v]
    return T


def local_coefficients(dof_system, u):
    """Per-face local DoF vectors of a global coefficient vector: (F, 9)."""
    loc = u[dof_system.face_dofs].copy()           # (F, 9)
    g = loc[:, [1, 2, 4, 5, 7, 8]].reshape(-1, 3, 2)
    g = np.einsum("fvtu,fvu->fvt", dof_system.transfer, g)
    loc[:, [1, 2, 4, 5, 7, 8]] = g.reshape(-1, 6)
    return loc


def surface_piola_pull(mesh, face, g, x):
    """Pull a tangent field of the surface onto the plane of ``face``.

    Returns mu_h [I - nu (x) nu_h / (nu . nu_h)] [I - d H]^{-1} g, the
    measure-weighted tangent-plane transport of g evaluated at x; the
    result lies in the facet plane. ``face`` may be one index or an
    array pairing each point with its facet.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None] if single else x
    g = np.asarray(g, dtype=float)
    gs = g[None] if single else g
    faces = (np.full(len(pts), face) if np.ndim(face) == 0
             else np.asarray(face))

    pr = probe(mesh.surface, pts)
    d, nu, H = np.atleast_1d(pr.d), np.atleast_2d(pr.nu), pr.H.reshape(-1, 3, 3)
    nu_h = mesh.normals[faces]
    c = np.einsum("ni,ni->n", nu, nu_h)
    if np.any(c <= 0.1):
        raise NearTangentFlip("surface and facet normals nearly orthogonal")

    A = np.eye(3)[None] - d[:, None, None] * H
    ig = np.linalg.solve(A, gs[..., None])[..., 0]
    bracket = ig - nu * (np.einsum("ni,ni->n", nu_h, ig) / c)[:, None]

    def push(t):
        pt = t - nu * np.einsum("ni,ni->n", nu, t)[:, None]
        return pt - d[:, None] * np.einsum("nij,nj->ni", H, t)

    mu = np.linalg.norm(np.cross(push(mesh.t1[faces]), push(mesh.t2[faces])),
                        axis=1)
    out = mu[:, None] * bracket
    return out[0] if single else out
