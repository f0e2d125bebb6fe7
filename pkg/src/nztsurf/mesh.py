"""Triangulated closed surfaces with full connectivity.

A :class:`SurfaceMesh` keeps every derived quantity the discretization
needs: per-face orthonormal frames and flat 2D vertex coordinates,
oriented edge records with the two in-plane conormals (which on a
curved mesh do *not* satisfy n1 = -n2), and one fixed anchor face per
vertex that will host that vertex's gradient unknowns.

Generators: icosphere, structured torus grid, OFF import. Refinement
splits each triangle at the edge midpoints projected back onto the
surface. Meshes are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import NonConvergence, OutsideTube, probe
from .io_formats import parse_off

__all__ = [
    "SurfaceMesh", "NonManifold", "ProjectionFailure",
    "make_icosphere", "make_torus_mesh", "load_off", "refine",
    "build_mesh",
]


class NonManifold(ValueError):
    """Mesh is not a closed orientable 2-manifold triangulation."""


class ProjectionFailure(RuntimeError):
    """A vertex or midpoint could not be projected onto the surface."""


@dataclass(frozen=True)
class SurfaceMesh:
    surface: object
    vertices: np.ndarray        # (V, 3) all on the surface
    faces: np.ndarray           # (F, 3) outward-oriented
    normals: np.ndarray         # (F, 3)
    t1: np.ndarray              # (F, 3) frame: t1 x t2 = normal
    t2: np.ndarray              # (F, 3)
    areas: np.ndarray           # (F,)
    diameters: np.ndarray       # (F,) longest edge
    coords2d: np.ndarray        # (F, 3, 2) vertices in the face frame
    edges: np.ndarray           # (E, 2) vertex ids, first < second
    edge_faces: np.ndarray      # (E, 2) incident faces, first < second
    edge_local: np.ndarray      # (E, 2, 2) local indices of (a, b) per face
    edge_lengths: np.ndarray    # (E,)
    edge_tangents: np.ndarray   # (E, 3) unit, from a to b
    edge_conormals: np.ndarray  # (E, 2, 3) in-plane outward per face
    anchors: np.ndarray         # (V,) anchor face per vertex
    h: float
    genus: int

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def scale(self):
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))


def _orient_outward(surface, vertices, faces, per_face):
    """Make face normals point along the surface normal.

    ``per_face`` flips faces individually (for imported meshes with
    arbitrary winding; needs h small enough that the centroid test is
    reliable). Otherwise the winding is assumed consistent and at most
    a global flip is applied, which is robust on very coarse meshes.
    """
    tri = vertices[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    centroids = tri.mean(axis=1)
    nu = probe(surface, centroids).nu
    inward = np.einsum("fi,fi->f", n, nu) < 0
    faces = faces.copy()
    if per_face:
        faces[inward] = faces[inward][:, ::-1]
    elif inward.sum() * 2 > len(faces):
        faces = faces[:, ::-1]
    return faces


def build_mesh(surface, vertices, faces, expected_genus=None,
               orient_per_face=False):
    """Assemble a SurfaceMesh from raw arrays, validating manifoldness."""
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    faces = _orient_outward(surface, vertices, faces, orient_per_face)

    # half-edge table: rows (tail, head) for each face side
    half = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]],
                           faces[:, [2, 0]]])
    half_face = np.tile(np.arange(len(faces)), 3)
    if np.any(half[:, 0] == half[:, 1]):
        raise NonManifold("degenerate face with repeated vertex")
    key = np.sort(half, axis=1)
    edges, inverse, counts = np.unique(key, axis=0, return_inverse=True,
                                       return_counts=True)
    if np.any(counts != 2):
        raise NonManifold("every edge must bound exactly two faces")
    # opposite traversal: of the two half-edges, exactly one is ascending
    ascending = half[:, 0] < half[:, 1]
    asc_count = np.zeros(len(edges), dtype=int)
    np.add.at(asc_count, inverse, ascending)
    if np.any(asc_count != 1):
        raise NonManifold("inconsistent orientation across an edge")

    order = np.argsort(inverse, kind="stable")
    pair_faces = half_face[order].reshape(-1, 2)
    swap = pair_faces[:, 0] > pair_faces[:, 1]
    pair_faces[swap] = pair_faces[swap][:, ::-1]
    edge_faces = pair_faces

    V, E, F = len(vertices), len(edges), len(faces)
    genus = 1 - (V - E + F) // 2
    if (V - E + F) % 2 or genus < 0:
        raise NonManifold(f"Euler characteristic {V - E + F} is not that "
                          "of a closed orientable surface")
    if expected_genus is not None and genus != expected_genus:
        raise NonManifold(f"genus {genus}, expected {expected_genus}")

    # per-face frames and flat coordinates
    tri = vertices[faces]
    e01 = tri[:, 1] - tri[:, 0]
    e02 = tri[:, 2] - tri[:, 0]
    raw_n = np.cross(e01, e02)
    areas = 0.5 * np.linalg.norm(raw_n, axis=1)
    if np.any(areas < 1e-300):
        raise NonManifold("zero-area face")
    normals = raw_n / (2 * areas[:, None])
    t1 = e01 / np.linalg.norm(e01, axis=1)[:, None]
    t2 = np.cross(normals, t1)
    coords2d = np.zeros((F, 3, 2))
    coords2d[:, 1, 0] = np.einsum("fi,fi->f", e01, t1)
    coords2d[:, 1, 1] = np.einsum("fi,fi->f", e01, t2)
    coords2d[:, 2, 0] = np.einsum("fi,fi->f", e02, t1)
    coords2d[:, 2, 1] = np.einsum("fi,fi->f", e02, t2)
    side = np.linalg.norm(np.stack([e01, tri[:, 2] - tri[:, 1], e02]), axis=2)
    diameters = side.max(axis=0)

    # edge records
    ev = vertices[edges]
    tangents = ev[:, 1] - ev[:, 0]
    lengths = np.linalg.norm(tangents, axis=1)
    tangents /= lengths[:, None]
    midpoints = 0.5 * (ev[:, 0] + ev[:, 1])
    conormals = np.empty((E, 2, 3))
    edge_local = np.empty((E, 2, 2), dtype=np.int64)
    for side_i in range(2):
        f = edge_faces[:, side_i]
        n = np.cross(tangents, normals[f])
        outward = midpoints - tri[f].mean(axis=1)
        sign = np.sign(np.einsum("ei,ei->e", n, outward))
        conormals[:, side_i] = n * sign[:, None]
        for col in range(2):
            match = faces[f] == edges[:, col][:, None]
            edge_local[:, side_i, col] = np.argmax(match, axis=1)

    # anchor: smallest incident face index per vertex
    anchors = np.full(V, F, dtype=np.int64)
    for k in range(3):
        np.minimum.at(anchors, faces[:, k], np.arange(F))
    if np.any(anchors == F):
        raise NonManifold("isolated vertex")

    return SurfaceMesh(
        surface=surface, vertices=vertices, faces=faces, normals=normals,
        t1=t1, t2=t2, areas=areas, diameters=diameters, coords2d=coords2d,
        edges=edges, edge_faces=edge_faces, edge_local=edge_local,
        edge_lengths=lengths, edge_tangents=tangents,
        edge_conormals=conormals, anchors=anchors,
        h=float(diameters.max()), genus=genus)


def _project(surface, pts):
    try:
        return probe(surface, pts).p
    except (NonConvergence, OutsideTube) as exc:
        raise ProjectionFailure(str(exc)) from exc


# golden-rectangle icosahedron: unit vertices from cyclic permutations of
# (0, +-phi, +-1)/sqrt(phi^2+1), faces wound outward
_ICO_FACES = np.array([
    (5, 0, 7), (1, 8, 3), (3, 0, 1), (7, 0, 3), (4, 8, 1),
    (4, 9, 8), (6, 9, 4), (10, 9, 6), (6, 5, 10), (10, 5, 7),
    (1, 0, 2), (0, 5, 2), (2, 5, 6), (6, 4, 2), (2, 4, 1),
    (7, 3, 11), (8, 9, 11), (11, 3, 8), (9, 10, 11), (11, 10, 7),
])


def _icosahedron_vertices():
    big = np.sqrt(0.5 + 0.5 / np.sqrt(5.0))   # phi / sqrt(phi^2 + 1)
    small = np.sqrt(0.5 - 0.5 / np.sqrt(5.0))
    verts = []
    for sa in (1, -1):
        for sb in (1, -1):
            a, b = sa * big, sb * small
            verts += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    return np.array(verts)


def _subdivide(surface, vertices, faces):
    """Split each face 1 -> 4 at edge midpoints projected onto the surface."""
    half = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]],
                           faces[:, [2, 0]]])
    key = np.sort(half, axis=1)
    edges, inverse = np.unique(key, axis=0, return_inverse=True)
    mids = _project(surface, 0.5 * (vertices[edges[:, 0]]
                                    + vertices[edges[:, 1]]))
    mid_ids = len(vertices) + np.arange(len(edges))
    m01, m12, m20 = (mid_ids[inverse].reshape(3, -1))
    v0, v1, v2 = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate([
        np.stack([v0, m01, m20], axis=1),
        np.stack([v1, m12, m01], axis=1),
        np.stack([v2, m20, m12], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    return np.concatenate([vertices, mids]), new_faces


def make_icosphere(surface, level):
    """Icosahedron projected to the sphere and subdivided ``level`` times."""
    if level > 8:
        raise ValueError("refinement level > 8 would exhaust memory")
    vertices = surface.radius * _icosahedron_vertices()
    faces = _ICO_FACES.copy()
    for _ in range(level):
        vertices, faces = _subdivide(surface, vertices, faces)
    return build_mesh(surface, vertices, faces, expected_genus=0)


def make_torus_mesh(surface, n_theta, n_phi):
    """Structured torus grid, each quad split along the same diagonal."""
    if n_theta < 3 or n_phi < 3:
        raise ValueError("torus grid needs at least 3 divisions each way")
    R, r = surface.major_radius, surface.minor_radius
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    vertices = np.stack([(R + r * np.cos(TH)) * np.cos(PH),
                         (R + r * np.cos(TH)) * np.sin(PH),
                         r * np.sin(TH)], axis=2).reshape(-1, 3)

    def vid(i, j):
        return (i % n_theta) * n_phi + (j % n_phi)

    faces = []
    for i in range(n_theta):
        for j in range(n_phi):
            faces.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            faces.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
    return build_mesh(surface, np.asarray(vertices),
                      np.asarray(faces, dtype=np.int64), expected_genus=1)


def load_off(path, surface):
    """Read an OFF file and project its vertices onto the surface."""
    with open(path) as fh:
        doc = parse_off(fh.read())
    vertices = _project(surface, doc.vertices)
    return build_mesh(surface, vertices, doc.faces, orient_per_face=True)


def refine(mesh, surface=None):
    """Uniform 1 -> 4 refinement with midpoints projected to the surface."""
    surface = surface if surface is not None else mesh.surface
    vertices, faces = _subdivide(surface, mesh.vertices, mesh.faces)
    return build_mesh(surface, vertices, faces, expected_genus=mesh.genus)
