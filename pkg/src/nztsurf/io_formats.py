"""Strict parsers and writers for the file formats the package touches.

OFF (ASCII, triangles only) for mesh input, legacy ASCII VTK POLYDATA
with point scalars for visualization export, and the CSV convergence
tables written by the experiment driver. Everything is line-oriented
text; parse errors carry the line number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OffDocument", "ParseError", "NonTriangular",
    "parse_off", "write_off", "write_vtk", "read_vtk", "format_report_csv",
]


class ParseError(ValueError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonTriangular(ParseError):
    pass


@dataclass
class OffDocument:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray     # (F, 3) int


def _content_lines(text):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


def parse_off(text):
    """Parse ASCII OFF with triangular faces into an OffDocument."""
    lines = _content_lines(text)
    try:
        i, header = next(lines)
    except StopIteration:
        raise ParseError(1, "empty file") from None
    if header != "OFF":
        raise ParseError(i, f"expected 'OFF' header, got {header!r}")
    try:
        i, counts = next(lines)
    except StopIteration:
        raise ParseError(i, "missing counts line") from None
    parts = counts.split()
    if len(parts) != 3:
        raise ParseError(i, "counts line must be 'V F E'")
    try:
        nv, nf = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(i, "non-integer counts") from None

    verts = np.empty((nv, 3))
    for k in range(nv):
        try:
            i, line = next(lines)
        except StopIteration:
            raise ParseError(i, f"expected {nv} vertices, got {k}") from None
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(i, "vertex line must have 3 coordinates")
        try:
            verts[k] = [float(p) for p in parts]
        except ValueError:
            raise ParseError(i, "non-numeric vertex coordinate") from None

    faces = np.empty((nf, 3), dtype=np.int64)
    for k in range(nf):
        try:
            i, line = next(lines)
        except StopIteration:
            raise ParseError(i, f"expected {nf} faces, got {k}") from None
        parts = line.split()
        try:
            ids = [int(p) for p in parts]
        except ValueError:
            raise ParseError(i, "non-integer face index") from None
        if not ids or ids[0] != 3 or len(ids) != 4:
            raise NonTriangular(i, "non-triangular face")
        if any(v < 0 or v >= nv for v in ids[1:]):
            raise ParseError(i, "face index out of range")
        faces[k] = ids[1:]
    return OffDocument(verts, faces)


def write_off(doc):
    """Serialize an OffDocument to ASCII OFF text."""
    out = ["OFF", f"{len(doc.vertices)} {len(doc.faces)} 0"]
    for v in doc.vertices:
        out.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for f in doc.faces:
        out.append(f"3 {f[0]} {f[1]} {f[2]}")
    return "\n".join(out) + "\n"


def write_vtk(path, vertices, faces, point_data):
    """Write legacy ASCII VTK POLYDATA with named point scalars.

    ``point_data`` maps field names to per-vertex value arrays.
    """
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces)
    for name, values in point_data.items():
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"invalid VTK field name {name!r}")
        if len(values) != len(vertices):
            raise ValueError(f"field {name!r} length {len(values)} "
                             f"!= vertex count {len(vertices)}")
    lines = ["# vtk DataFile Version 3.0", "surface solution", "ASCII",
             "DATASET POLYDATA", f"POINTS {len(vertices)} double"]
    for v in vertices:
        lines.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    lines.append(f"POLYGONS {len(faces)} {4 * len(faces)}")
    for f in faces:
        lines.append(f"3 {f[0]} {f[1]} {f[2]}")
    lines.append(f"POINT_DATA {len(vertices)}")
    for name, values in point_data.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        for v in values:
            lines.append(f"{v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Minimal reader for files produced by :func:`write_vtk` (tests)."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    idx = next(i for i, t in enumerate(tokens) if t.startswith("POINTS"))
    n = int(tokens[idx].split()[1])
    verts = np.array([[float(x) for x in tokens[idx + 1 + k].split()]
                      for k in range(n)])
    idx = next(i for i, t in enumerate(tokens) if t.startswith("POLYGONS"))
    nf = int(tokens[idx].split()[1])
    faces = np.array([[int(x) for x in tokens[idx + 1 + k].split()[1:]]
                      for k in range(nf)])
    data = {}
    i = idx + 1 + nf
    while i < len(tokens):
        if tokens[i].startswith("SCALARS"):
            name = tokens[i].split()[1]
            vals = np.array([float(tokens[i + 2 + k]) for k in range(n)])
            data[name] = vals
            i += 2 + n
        else:
            i += 1
    return verts, faces, data


def format_report_csv(report):
    """Convergence table as CSV text, matching the experiment driver.

    Errors use scientific notation with 3 significant digits; orders two
    decimals; order cells of the first row stay empty.
    """
    grad = "E1star" if report.uses_projected_gradient else "E1"
    lines = [f"Dof,E0,order,{grad},order,EDelta,order,Ejump,order"]
    prev = None
    for row in report.rows:
        cells = [str(row.dofs)]
        for name in ("e0", "e1", "e_delta", "e_jump"):
            err = getattr(row, name)
            cells.append(f"{err:.2e}")
            if prev is None:
                cells.append("")
            else:
                cells.append(f"{np.log2(getattr(prev, name) / err):.2f}")
        prev = row
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
