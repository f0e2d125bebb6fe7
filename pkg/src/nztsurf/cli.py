"""Experiment driver and command-line front end.

Runs one of the three convergence studies (sphere, torus, implicit
surface) over a range of uniform refinements, printing and optionally
writing the Dof/error/order table as CSV and exporting VTK surface
files of the discrete solution for visualization.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import ErrorReport, compute_errors
from .assembly import assemble
from .dofs import build_dof_system, local_coefficients
from .io_formats import format_report_csv, write_vtk
from .manufactured import implicit_case, sphere_case, torus_case
from .mesh import load_off, make_icosphere, make_torus_mesh, refine
from .solver import SolverConfig, solve

__all__ = ["ExperimentSpec", "run_experiment", "export_solution_vtk", "main"]

DEFAULT_LEVELS = {"sphere": (2, 5), "torus": (0, 2), "implicit": (0, 2)}
DEFAULT_MESH = "meshes/implicit_coarse.off"


@dataclass
class ExperimentSpec:
    case: str                                  # sphere | torus | implicit
    levels: tuple                              # (first, last) inclusive
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(
        max_iter=50000))
    csv_path: str | None = None
    vtk_dir: str | None = None
    mesh_path: str | None = None               # OFF input (implicit case)
    torus_grid: tuple = (16, 32)
    seed: int = 0

    def __post_init__(self):
        if self.case not in DEFAULT_LEVELS:
            raise ValueError(f"unknown case {self.case!r}")
        if self.levels[1] < self.levels[0]:
            raise ValueError("empty level range")


class ExperimentError(RuntimeError):
    def __init__(self, level, stage, cause):
        super().__init__(f"level {level}, stage {stage}: {cause}")
        self.level = level
        self.stage = stage
        self.cause = cause


def _make_case(spec):
    if spec.case == "sphere":
        return sphere_case()
    if spec.case == "torus":
        return torus_case()
    return implicit_case()


def _base_mesh(spec, case):
    first = spec.levels[0]
    if spec.case == "sphere":
        return make_icosphere(case.surface, first)
    if spec.case == "torus":
        mesh = make_torus_mesh(case.surface, *spec.torus_grid)
    else:
        mesh = load_off(spec.mesh_path or DEFAULT_MESH, case.surface)
    for _ in range(first):
        mesh = refine(mesh)
    return mesh


def export_solution_vtk(mesh, dof_system, u, path):
    """Write u_h and |grad u_h| sampled at the vertices as VTK point data."""
    grad = np.hypot(u[1::3], u[2::3])
    write_vtk(path, mesh.vertices, mesh.faces,
              {"u_h": u[0::3], "grad_u_h_norm": grad})


def run_experiment(spec, log=print):
    """Assemble-solve-measure across the requested refinement levels.

    Returns the ErrorReport; CSV rows for completed levels are written
    after every level, so a failure preserves the finished part.
    """
    case = _make_case(spec)
    report = ErrorReport(case_name=spec.case,
                         uses_projected_gradient=(spec.case == "implicit"))
    mesh = _base_mesh(spec, case)
    for level in range(spec.levels[0], spec.levels[1] + 1):
        t0 = time.time()
        stage = "assemble"
        try:
            dofs = build_dof_system(mesh)
            system = assemble(mesh, dofs, case)
            stage = "solve"
            u = solve(system, spec.solver)
            stage = "errors"
            row = compute_errors(case, mesh, dofs, u)
        except Exception as exc:
            raise ExperimentError(level, stage, exc) from exc
        report.add(row)
        log(f"level {level}: dofs={row.dofs} E0={row.e0:.2e} "
            f"E1={row.e1:.2e} EDelta={row.e_delta:.2e} "
            f"Ejump={row.e_jump:.2e} ({time.time() - t0:.1f}s)")
        if spec.csv_path:
            with open(spec.csv_path, "w") as fh:
                fh.write(format_report_csv(report))
        if spec.vtk_dir:
            path = f"{spec.vtk_dir}/{spec.case}_level{level}.vtk"
            export_solution_vtk(mesh, dofs, u, path)
        if level < spec.levels[1]:
            stage = "refine"
            try:
                mesh = refine(mesh)
            except Exception as exc:
                raise ExperimentError(level + 1, stage, exc) from exc
    return report


def self_check(spec, log=print):
    """Randomized algebraic identity checks on the base mesh."""
    from .assembly import EDGE_RULE, edge_jump_tables, face_tables
    from .dofs import mka_matrix

    case = _make_case(spec)
    mesh = _base_mesh(spec, case)
    dofs = build_dof_system(mesh)
    rng = np.random.default_rng(spec.seed)
    ok = True

    tables = face_tables(mesh)
    jrows, _ = edge_jump_tables(mesh, dofs, tables.coeffs, tables.grad_lambda)
    worst = 0.0
    for _ in range(20):
        u = rng.standard_normal(dofs.n_dofs)
        loc = local_coefficients(dofs, u)
        c18 = np.concatenate([loc[mesh.edge_faces[:, 0]],
                              loc[mesh.edge_faces[:, 1]]], axis=1)
        means = np.einsum("ei,eip->ep", c18, jrows) @ EDGE_RULE.weights
        worst = max(worst, np.max(np.abs(means)))
    scale = max(1.0, np.max(np.abs(jrows)))
    passed = worst <= 1e-11 * scale
    ok &= passed
    log(f"jump-mean-zero: max |mean| = {worst:.2e} "
        f"({'PASS' if passed else 'FAIL'})")

    worst = 0.0
    x = rng.standard_normal(3)
    for e in range(mesh.n_edges):
        f1, f2 = mesh.edge_faces[e]
        a = mesh.anchors[mesh.edges[e, 0]]
        s = (mka_matrix(mesh.normals[a], mesh.normals[f1]) @ x
             @ mesh.edge_conormals[e, 0]
             + mka_matrix(mesh.normals[a], mesh.normals[f2]) @ x
             @ mesh.edge_conormals[e, 1])
        worst = max(worst, abs(s))
    passed = worst <= 1e-13
    ok &= passed
    log(f"conormal-cancellation: max |sum| = {worst:.2e} "
        f"({'PASS' if passed else 'FAIL'})")
    return ok


def _parse_levels(text, case):
    if text is None:
        return DEFAULT_LEVELS[case]
    parts = text.split(":")
    if len(parts) == 1:
        lo = hi = int(parts[0])
    elif len(parts) == 2:
        lo, hi = int(parts[0]), int(parts[1])
    else:
        raise argparse.ArgumentTypeError("levels must be K or A:B")
    return lo, hi


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nztsurf",
        description="Convergence studies for the stabilized nonconforming "
                    "solver of the surface bilaplacian problem.")
    parser.add_argument("--case", required=True,
                        choices=("sphere", "torus", "implicit"))
    parser.add_argument("--levels", default=None,
                        help="refinement range A:B (default per case)")
    parser.add_argument("--rel-tol", type=float, default=1e-10)
    parser.add_argument("--max-iter", type=int, default=50000)
    parser.add_argument("--mesh", default=None,
                        help="OFF file for the implicit case")
    parser.add_argument("--csv", default=None, help="output CSV path")
    parser.add_argument("--vtk", default=None, help="output VTK directory")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for --check")
    parser.add_argument("--check", action="store_true",
                        help="run randomized identity checks and exit")
    args = parser.parse_args(argv)

    spec = ExperimentSpec(
        case=args.case,
        levels=_parse_levels(args.levels, args.case),
        solver=SolverConfig(rel_tol=args.rel_tol, max_iter=args.max_iter),
        csv_path=args.csv, vtk_dir=args.vtk, mesh_path=args.mesh,
        seed=args.seed)

    if args.check:
        return 0 if self_check(spec) else 1

    try:
        report = run_experiment(spec)
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    print(format_report_csv(report), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
