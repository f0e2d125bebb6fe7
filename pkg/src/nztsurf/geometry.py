"""Exact-surface queries for sphere, torus, and level-set surfaces.

Every surface answers the same questions inside its tubular
neighborhood: signed distance d, closest-point projection p,
unit outward normal nu (= grad d), and the Weingarten map H
(= hess d).  Sphere and torus use closed forms; a generic level-set
surface runs an iterative closest-point projection and obtains
derivative information by forward-mode AD through the converged
iteration (see :mod:`nztsurf.jets`).

All operations accept a single point ``(3,)`` or a batch ``(n, 3)``
and are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jets import Jet, coefficient, constant, jsqrt, value, variable

__all__ = [
    "Sphere", "Torus", "LevelSet", "GeometryProbe",
    "probe", "mu_h", "NonConvergence", "OutsideTube",
]


class NonConvergence(RuntimeError):
    """Closest-point iteration failed to converge within max_iter."""


class OutsideTube(ValueError):
    """Query point is outside the working tubular neighborhood."""


@dataclass(frozen=True)
class Sphere:
    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    @property
    def scale(self):
        return self.radius


@dataclass(frozen=True)
class Torus:
    major_radius: float = 1.0
    minor_radius: float = 0.6

    def __post_init__(self):
        if not 0 < self.minor_radius < self.major_radius:
            raise ValueError("torus requires 0 < r < R")

    @property
    def scale(self):
        return self.major_radius + self.minor_radius


@dataclass(frozen=True)
class LevelSet:
    """Surface {phi = 0} for a smooth phi with nonvanishing gradient.

    ``phi(x, y, z)`` must accept floats, numpy arrays, and
    :class:`~nztsurf.jets.Jet` scalars (derivatives up to order 4 are
    taken through it by the manufactured-source pipeline).
    """

    phi: Callable = None
    tube_radius: float = 1.0
    tol_proj: float = 1e-13
    tol_align: float = 1e-12
    max_iter: int = 50
    max_ad_sweeps: int = 60  # cap on AD sweeps after float convergence

    @property
    def scale(self):
        return 1.0


@dataclass
class GeometryProbe:
    """Signed distance, projection, normal, and Weingarten map at x."""

    x: np.ndarray
    d: np.ndarray
    p: np.ndarray
    nu: np.ndarray
    H: np.ndarray


def probe(surface, x):
    """Evaluate d, p, nu, H of ``surface`` at ambient point(s) ``x``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if isinstance(surface, Sphere):
        d, p, nu, H = _probe_sphere(surface, pts)
    elif isinstance(surface, Torus):
        d, p, nu, H = _probe_torus(surface, pts)
    elif isinstance(surface, LevelSet):
        d, p, nu, H = _probe_levelset(surface, pts)
    else:
        raise TypeError(f"unknown surface {surface!r}")
    if single:
        return GeometryProbe(x, d[0], p[0], nu[0], H[0])
    return GeometryProbe(x, d, p, nu, H)


def mu_h(surface, t1, t2, x):
    """Area-measure ratio between the surface and a flat facet at x.

    ``t1, t2`` are the facet's orthonormal tangents; returns
    |((P - d H) t1) x ((P - d H) t2)|, the pointwise factor relating
    facet area measure to surface area measure under the projection.
    """
    g = probe(surface, x)
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    d = np.atleast_1d(g.d)
    nu = np.atleast_2d(g.nu)
    H = g.H.reshape(-1, 3, 3)
    t1b = np.broadcast_to(t1, nu.shape)
    t2b = np.broadcast_to(t2, nu.shape)

    def push(t):
        pt = t - nu * np.sum(nu * t, axis=1)[:, None]
        return pt - d[:, None] * np.einsum("nij,nj->ni", H, t)

    m = np.linalg.norm(np.cross(push(t1b), push(t2b)), axis=1)
    return m[0] if np.asarray(x).ndim == 1 else m


# ---------------------------------------------------------------------------
# closed forms


def _probe_sphere(s, pts):
    r = np.linalg.norm(pts, axis=1)
    if np.any(r <= 1e-12 * s.radius):
        raise OutsideTube("projection undefined at the sphere's center")
    nu = pts / r[:, None]
    d = r - s.radius
    p = s.radius * nu
    P = np.eye(3)[None] - nu[:, :, None] * nu[:, None, :]
    H = P / r[:, None, None]
    return d, p, nu, H


def _probe_torus(t, pts):
    R, r = t.major_radius, t.minor_radius
    s = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(s < 1e-14):
        raise OutsideTube("torus axis is outside the tube")
    rho = np.hypot(s - R, pts[:, 2])
    d = rho - r
    if np.any(rho < 1e-14) or np.any(np.abs(d) >= r):
        raise OutsideTube("point at or beyond the torus' reach")
    cphi = pts[:, 0] / s
    sphi = pts[:, 1] / s
    cth = (s - R) / rho
    sth = pts[:, 2] / rho
    nu = np.stack([cth * cphi, cth * sphi, sth], axis=1)
    p = np.stack([(R + r * cth) * cphi, (R + r * cth) * sphi, r * sth], axis=1)
    e_th = np.stack([-sth * cphi, -sth * sphi, cth], axis=1)
    e_ph = np.stack([-sphi, cphi, np.zeros_like(sphi)], axis=1)
    # principal curvatures transported to distance d along the normal
    k_th = 1.0 / (r + d)
    k_ph = cth / (R + (r + d) * cth)
    H = (k_th[:, None, None] * e_th[:, :, None] * e_th[:, None, :]
         + k_ph[:, None, None] * e_ph[:, :, None] * e_ph[:, None, :])
    return d, p, nu, H


# ---------------------------------------------------------------------------
# level-set path


def _phi_and_grad(phi, x, y, z):
    """phi and its gradient at coordinates that may be arrays or Jets.

    Each partial derivative wraps the coordinates in a fresh order-1
    Jet layer, so the result has the same scalar level as the inputs.
    """
    coords = (x, y, z)
    v = None
    g = []
    for i in range(3):
        args = [Jet((coords[j], 1.0 if j == i else 0.0)) for j in range(3)]
        f = phi(*args)
        if v is None:
            v = f.c[0]
        g.append(f.c[1])
    return v, g


def _project_sweep(phi, y, x):
    """One projection sweep: two surface Newton steps + tangent correction.

    Works identically for float arrays and Jet coordinates; the
    composite map's fixed point is the exact closest point of x.
    """
    for _ in range(2):
        v, g = _phi_and_grad(phi, *y)
        g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
        step = v / g2
        y = [y[i] - step * g[i] for i in range(3)]
    _, g = _phi_and_grad(phi, *y)
    gn = jsqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
    n = [g[i] / gn for i in range(3)]
    r = [x[i] - y[i] for i in range(3)]
    rn = r[0] * n[0] + r[1] * n[1] + r[2] * n[2]
    y = [y[i] + (r[i] - rn * n[i]) for i in range(3)]
    return y


def _project_levelset(s, pts):
    """Batched closest-point projection onto {phi = 0} (float path)."""
    phi = s.phi
    x = [pts[:, 0].copy(), pts[:, 1].copy(), pts[:, 2].copy()]
    scale = 1.0 + np.linalg.norm(pts, axis=1)
    v0, g0 = _phi_and_grad(phi, *x)
    gn0 = np.sqrt(g0[0] ** 2 + g0[1] ** 2 + g0[2] ** 2)
    if np.any(np.abs(v0) / gn0 > s.tube_radius):
        raise OutsideTube("initial |phi|/|grad phi| exceeds tube radius")
    y = [c.copy() for c in x]
    for _ in range(s.max_iter):
        y = _project_sweep(phi, y, x)
        v, g = _phi_and_grad(phi, *y)
        gn = np.sqrt(g[0] ** 2 + g[1] ** 2 + g[2] ** 2)
        n = [g[i] / gn for i in range(3)]
        r = [x[i] - y[i] for i in range(3)]
        rn = r[0] * n[0] + r[1] * n[1] + r[2] * n[2]
        tang = np.sqrt(sum((r[i] - rn * n[i]) ** 2 for i in range(3)))
        if np.all(np.abs(v) / gn <= s.tol_proj * scale) and \
           np.all(tang <= s.tol_align * scale):
            p = np.stack(y, axis=1)
            nu = np.stack(n, axis=1)
            d = np.sign(v0) * np.linalg.norm(pts - p, axis=1)
            return p, nu, d
    raise NonConvergence(
        f"closest-point projection did not converge in {s.max_iter} sweeps")


def _maxabs(v):
    """Largest absolute leaf value of a possibly nested Jet."""
    if isinstance(v, Jet):
        return max(_maxabs(c) for c in v.c)
    return float(np.max(np.abs(v)))


def project_jet(s, coords, base=None):
    """Closest-point projection with Jet coordinates.

    ``coords`` is a list of three Jet coordinates whose value parts lie
    in the tube. Sweeps start from ``base`` (defaults to the float
    projection of the value parts) and run until the Taylor
    coefficients of p(x) stop changing; the sweep map contracts the
    coefficient error by roughly |d| * curvature per application.
    """
    if base is None:
        vals = np.stack([np.atleast_1d(np.asarray(value(c), dtype=float))
                         for c in coords], axis=1)
        base, _, _ = _project_levelset(s, vals)
        base = [base[:, 0], base[:, 1], base[:, 2]]

    def lift(b, proto):
        return constant(b, proto.order) if isinstance(proto, Jet) else b

    y = [lift(base[i], coords[i]) for i in range(3)]
    scale = 1.0 + max(_maxabs(c) for c in coords)
    prev_change = np.inf
    for _ in range(s.max_ad_sweeps):
        y_new = _project_sweep(s.phi, y, coords)
        change = max(_maxabs(y_new[i] - y[i]) for i in range(3))
        y = y_new
        if change <= 1e-14 * scale:
            break
        # coefficient corrections converge order by order, so only treat
        # a non-decreasing change as a roundoff plateau once it is tiny
        if change >= prev_change and prev_change <= 1e-8 * scale:
            break
        prev_change = change
    return y


def _probe_levelset(s, pts):
    p, nu, d = _project_levelset(s, pts)
    # H = grad(nu o p): differentiate the projected normal in the three
    # ambient directions through the converged iteration.
    H = np.empty((len(pts), 3, 3))
    base = [p[:, 0], p[:, 1], p[:, 2]]
    for i in range(3):
        coords = [variable(pts[:, j], 1) if j == i
                  else constant(pts[:, j], 1) for j in range(3)]
        y = project_jet(s, coords, base=base)
        _, g = _phi_and_grad(s.phi, *y)
        gn = jsqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
        for j in range(3):
            H[:, j, i] = coefficient(g[j] / gn, 1)
    return d, p, nu, H
