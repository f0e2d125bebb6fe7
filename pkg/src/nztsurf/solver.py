"""Solve the singular-but-consistent SPD system on the mean-zero subspace.

The assembled matrix has the constant function as its one-dimensional
kernel and the load is orthogonal to it, so conjugate gradients works
once iterates are kept clear of the kernel: every residual and
preconditioned residual is deflated along the constant direction, and
the final iterate is shifted along the kernel to satisfy the zero-mean
constraint m^T u = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["SolverConfig", "NoConvergence", "SingularBeyondKernel", "solve"]


class NoConvergence(RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(f"no convergence after {iterations} iterations "
                         f"(relative residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class SingularBeyondKernel(RuntimeError):
    """A null direction outside the constant kernel was encountered."""


@dataclass(frozen=True)
class SolverConfig:
    method: str = "projected_cg"      # or "dense"
    rel_tol: float = 1e-10
    max_iter: int | None = None       # default: 20 sqrt(n) + 2000
    preconditioner: str = "diagonal"  # or "none"

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-2:
            raise ValueError("rel_tol must lie in (0, 1e-2]")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def solve(system, config=SolverConfig()):
    """Return u with ||A u - b|| <= rel_tol ||b|| and m^T u = 0."""
    if config.method == "dense":
        u = _solve_dense(system)
    else:
        u = _projected_cg(system, config)
    # shift along the kernel to the zero-mean representative
    k = system.kernel
    u = u - (system.m @ u) / (system.m @ k) * k
    return u


def _solve_dense(system):
    A = system.A.toarray()
    n = system.n
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = A
    K[:n, n] = system.m
    K[n, :n] = system.m
    rhs = np.concatenate([system.b, [0.0]])
    return scipy.linalg.solve(K, rhs, assume_a="sym")[:n]


def _projected_cg(system, config):
    A, b = system.A, system.b
    n = system.n
    if not np.any(b):
        return np.zeros(n)
    max_iter = config.max_iter
    if max_iter is None:
        max_iter = int(20 * np.sqrt(n) + 2000)
    k = system.kernel / np.linalg.norm(system.kernel)

    def deflate(v):
        return v - (k @ v) * k

    if config.preconditioner == "diagonal":
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise SingularBeyondKernel("nonpositive diagonal entry")
        inv_diag = 1.0 / diag
    else:
        inv_diag = None

    norm_b = np.linalg.norm(b)
    tol = config.rel_tol * norm_b

    def pcg_core(rhs, target, budget):
        """Standard deflated PCG on A d = rhs down to ||r_rec|| <= target."""
        x = np.zeros(n)
        r = deflate(rhs.copy())
        z = deflate(inv_diag * r) if inv_diag is not None else r.copy()
        p = z.copy()
        rz = r @ z
        res = np.linalg.norm(r)
        it = 0
        while it < budget and res > target:
            it += 1
            Ap = A @ p
            pAp = p @ Ap
            if pAp <= 0:
                align = abs(p @ k) / np.linalg.norm(p)
                if align < 0.99:
                    raise SingularBeyondKernel(
                        "zero-energy search direction "
                        f"(kernel alignment {align:.3f})")
                p = deflate(p)
                continue
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            r = deflate(r)
            res = np.linalg.norm(r)
            z = deflate(inv_diag * r) if inv_diag is not None else r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        return x, it

    # defect correction: the recurrence residual of a single long CG run
    # drifts away from b - A x, so re-solve against the true residual in
    # cycles of moderate inner tolerance
    x = np.zeros(n)
    r = b.copy()
    used = 0
    res = np.linalg.norm(r)
    while used < max_iter:
        if res <= tol:
            return x
        inner_target = max(0.5 * tol, 1e-6 * res)
        d, it = pcg_core(deflate(r), inner_target, max_iter - used)
        used += max(it, 1)
        x += d
        r = b - A @ x
        res = np.linalg.norm(r)
    if res <= tol:
        return x
    raise NoConvergence(used, res / norm_b)
