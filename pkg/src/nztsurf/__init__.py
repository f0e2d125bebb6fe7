"""Stabilized nonconforming finite elements for the surface bilaplacian.

Solves Delta_gamma^2 u = f on closed triangulated surfaces with a
9-DoF triangular plate element (vertex values + vertex gradients), a
tangent-plane Piola transfer that couples gradient unknowns across
facets, and a parameter-free conormal-jump stabilization.
"""

from .analysis import (ErrorReport, LevelErrors, compute_errors,
                       conforming_relative, convergence_orders, interpolate)
from .assembly import SparseSystem, assemble
from .cli import ExperimentSpec, run_experiment
from .dofs import DofSystem, build_dof_system, mka_matrix, surface_piola_pull
from .element import ShapeBasis, build_shape_basis, eval_basis
from .geometry import GeometryProbe, LevelSet, Sphere, Torus, mu_h, probe
from .manufactured import (ManufacturedCase, exact_laplace_beltrami,
                           exact_source, exact_tangential_gradient,
                           exact_value, implicit_case, sphere_case,
                           torus_case)
from .mesh import (SurfaceMesh, load_off, make_icosphere, make_torus_mesh,
                   refine)
from .solver import SolverConfig, solve

__version__ = "0.1.0"
