#!/usr/bin/env python3
"""Regenerate the coarse triangulation of the implicit surface
(x - z^2)^2 + y^2 + z^2 = 1 shipped in meshes/implicit_coarse.off.

Marching cubes on a coarse grid gives an ambient-isotropic
triangulation; its vertices are then projected onto the surface and
relaxed by tangential smoothing (neighbor averaging followed by
reprojection) to even out triangle shapes.
"""
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nztsurf.geometry import LevelSet, _project_levelset
from nztsurf.io_formats import OffDocument, write_off
from nztsurf.manufactured import implicit_phi

GRID_N = 25
GRID_HALF = 1.6
SMOOTH_SWEEPS = 30
SURF = LevelSet(phi=implicit_phi)


def closest_point(pts):
    return _project_levelset(SURF, np.asarray(pts, dtype=float))[0]


def marching_cubes_mesh():
    from skimage.measure import marching_cubes
    xs = np.linspace(-GRID_HALF, GRID_HALF, GRID_N)
    X, Y, Z = np.meshgrid(xs, xs, xs, indexing="ij")
    vol = implicit_phi(X, Y, Z)
    spacing = (xs[1] - xs[0],) * 3
    verts, faces, _, _ = marching_cubes(vol, level=0.0, spacing=spacing)
    verts = verts - GRID_HALF
    return verts, faces.astype(np.int64)


def weld(verts, faces, tol=1e-9):
    """Merge duplicate vertices and drop degenerate faces."""
    order = np.lexsort(verts.T)
    remap = np.empty(len(verts), dtype=np.int64)
    unique = []
    for idx in order:
        if unique and np.linalg.norm(verts[idx] - verts[unique[-1]]) <= tol:
            remap[idx] = len(unique) - 1
        else:
            unique.append(idx)
            remap[idx] = len(unique) - 1
    faces = remap[faces]
    keep = ((faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2])
            & (faces[:, 2] != faces[:, 0]))
    return verts[np.array(unique)], faces[keep]


def smooth(verts, faces, sweeps):
    neighbors = [set() for _ in verts]
    for a, b, c in faces:
        neighbors[a] |= {b, c}
        neighbors[b] |= {a, c}
        neighbors[c] |= {a, b}
    neighbors = [sorted(n) for n in neighbors]
    for _ in range(sweeps):
        avg = np.array([verts[n].mean(axis=0) for n in neighbors])
        verts = closest_point(0.5 * (verts + avg))
    return verts


def main():
    verts, faces = marching_cubes_mesh()
    verts, faces = weld(verts, faces)
    verts = closest_point(verts)
    verts = smooth(verts, faces, SMOOTH_SWEEPS)
    resid = np.abs([implicit_phi(*v) for v in verts]).max()
    print(f"{len(verts)} vertices, {len(faces)} faces, "
          f"max |phi| = {resid:.2e}")
    out = os.path.join(os.path.dirname(__file__), "..", "meshes",
                       "implicit_coarse.off")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w") as fh:
        fh.write(write_off(OffDocument(verts, np.asarray(faces))))
    print(f"wrote {os.path.normpath(out)}")


if __name__ == "__main__":
    main()
