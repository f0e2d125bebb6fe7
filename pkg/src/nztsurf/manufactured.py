"""Manufactured exact solutions u and their surface derivatives.

Three experiment cases drive the convergence studies:

* unit sphere with the eigenfunction u = (3x^2 y - y^3) / a^3, where
  the surface Laplacian and bilaplacian have closed forms;
* torus with u = sin(3 phi) cos(3 theta + phi), differentiated in the
  angular coordinates by nested forward AD;
* an implicitly defined surface with u = y, differentiated through the
  closest-point projection (the extension u o p has ambient derivatives
  that restrict to the surface ones on the surface itself).

The closest-point route needs derivatives of the projection up to
fourth order for the source term; these come from running the
projection iteration in (nested) Jet arithmetic, see
:mod:`nztsurf.geometry`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import LevelSet, Sphere, Torus, probe, project_jet
from .jets import Jet, jcos, jsin

__all__ = [
    "ManufacturedCase", "DerivativeOrderUnavailable",
    "sphere_case", "torus_case", "implicit_case", "levelset_case",
    "exact_value", "exact_tangential_gradient", "exact_laplace_beltrami",
    "exact_source", "torus_printed_neg_laplacian", "implicit_phi",
]


class DerivativeOrderUnavailable(TypeError):
    """The supplied field cannot be differentiated to the needed order."""


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution of the surface bilaplacian problem on one surface."""

    surface: object
    ambient_u: Callable            # u(x, y, z) on generic scalars
    mode: str                      # closed_form | coordinate_ad | closest_point_ad
    name: str = ""


def sphere_case(radius=1.0):
    a3 = radius ** 3
    return ManufacturedCase(
        surface=Sphere(radius),
        ambient_u=lambda x, y, z: (3 * x * x * y - y * y * y) / a3,
        mode="closed_form", name="sphere")


def torus_case(R=1.0, r=0.6):
    return ManufacturedCase(
        surface=Torus(R, r),
        ambient_u=_torus_ambient_u(R),
        mode="coordinate_ad", name="torus")


def implicit_phi(x, y, z):
    w = x - z * z
    return w * w + y * y + z * z - 1.0


def implicit_case():
    return ManufacturedCase(
        surface=LevelSet(phi=implicit_phi),
        ambient_u=lambda x, y, z: y,
        mode="closest_point_ad", name="implicit")


def levelset_case(surface, ambient_u, name="levelset"):
    """Generic closest-point case; used to cross-check the AD pipeline."""
    return ManufacturedCase(surface=surface, ambient_u=ambient_u,
                            mode="closest_point_ad", name=name)


# ---------------------------------------------------------------------------
# the four exact quantities


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


def _require_on_surface(case, pts):
    d = np.atleast_1d(probe(case.surface, pts).d)
    tol = 1e-9 * case.surface.scale
    if np.any(np.abs(d) > tol):
        raise ValueError(f"point off the surface by {np.max(np.abs(d)):.2e}")


def exact_value(case, x):
    """u at on-surface point(s) x."""
    pts, single = _as_batch(x)
    _require_on_surface(case, pts)
    if case.mode == "coordinate_ad":
        th, ph = _torus_angles(case.surface, pts)
        v = _torus_u(th, ph)
    else:
        v = case.ambient_u(pts[:, 0], pts[:, 1], pts[:, 2])
        v = np.broadcast_to(np.asarray(v, dtype=float), len(pts)).copy()
    return v[0] if single else v


def exact_tangential_gradient(case, x):
    """Tangential gradient P grad(u) at on-surface point(s) x."""
    pts, single = _as_batch(x)
    _require_on_surface(case, pts)
    if case.mode == "coordinate_ad":
        g = _torus_metric_gradient(case.surface, pts)
    else:
        grad = _ambient_gradient(case.ambient_u, pts)
        nu = probe(case.surface, pts).nu
        nu = np.atleast_2d(nu)
        g = grad - nu * np.einsum("ni,ni->n", nu, grad)[:, None]
    return g[0] if single else g


def exact_laplace_beltrami(case, x):
    """Surface Laplacian of u at on-surface point(s) x."""
    pts, single = _as_batch(x)
    _require_on_surface(case, pts)
    if case.mode == "closed_form":
        v = -12.0 / case.surface.radius ** 2 * exact_value(case, pts)
    elif case.mode == "coordinate_ad":
        th, ph = _torus_angles(case.surface, pts)
        R, r = case.surface.major_radius, case.surface.minor_radius
        v = _coord_laplacian(R, r, _torus_u, th, ph)
    else:
        v = _cp_laplacian(case.surface, case.ambient_u,
                          [pts[:, 0], pts[:, 1], pts[:, 2]])
    return v[0] if single else np.asarray(v)


def exact_source(case, x):
    """Bilaplacian source f = Delta_gamma^2 u at on-surface point(s) x."""
    pts, single = _as_batch(x)
    _require_on_surface(case, pts)
    if case.mode == "closed_form":
        v = 144.0 / case.surface.radius ** 4 * exact_value(case, pts)
    elif case.mode == "coordinate_ad":
        th, ph = _torus_angles(case.surface, pts)
        R, r = case.surface.major_radius, case.surface.minor_radius

        def w(t, p):
            return _coord_laplacian(R, r, _torus_u, t, p)

        v = _coord_laplacian(R, r, w, th, ph)
    else:
        surface, u = case.surface, case.ambient_u

        def w(*y):
            return _cp_laplacian(surface, u, y)

        try:
            v = _cp_laplacian(surface, w, [pts[:, 0], pts[:, 1], pts[:, 2]])
        except (TypeError, AttributeError) as exc:
            raise DerivativeOrderUnavailable(
                "field does not support fourth-order differentiation") from exc
    return v[0] if single else np.asarray(v)


# ---------------------------------------------------------------------------
# ambient AD helpers


def _ambient_gradient(u, pts):
    g = np.empty_like(pts)
    coords = [pts[:, 0], pts[:, 1], pts[:, 2]]
    for i in range(3):
        args = [Jet((coords[j], 1.0 if j == i else 0.0)) for j in range(3)]
        f = u(*args)
        g[:, i] = f.c[1] if isinstance(f, Jet) else 0.0
    return g


def _cp_laplacian(surface, u, coords):
    """Ambient Laplacian of (u o p) at coords; exact surface Laplacian
    of u when the evaluation points lie on the surface.

    ``coords`` may hold arrays or Jets, so the construction nests: the
    bilaplacian is this function applied to itself.
    """
    total = None
    for i in range(3):
        seeded = [Jet((coords[j], 1.0 if j == i else 0.0, 0.0))
                  for j in range(3)]
        y = project_jet(surface, seeded)
        f = u(*y)
        term = 2 * f.c[2]
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# torus coordinate pipeline


def _torus_angles(surface, pts):
    R = surface.major_radius
    s = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 2], s - R)
    ph = np.arctan2(pts[:, 1], pts[:, 0])
    return th, ph


def _torus_u(th, ph):
    return jsin(3 * ph) * jcos(3 * th + ph)


def _torus_ambient_u(R):
    """u = sin(3 phi) cos(3 theta + phi) written without atan2, so that
    it can be differentiated ambiently (test oracle for the metric form).
    """
    from .jets import jsqrt

    def u(x, y, z):
        s = jsqrt(x * x + y * y)
        rho = jsqrt((s - R) * (s - R) + z * z)
        cth, sth = (s - R) / rho, z / rho
        cph, sph = x / s, y / s
        sin3ph = sph * (3 - 4 * sph * sph)
        cos3ph = cph * (4 * cph * cph - 3)
        sin3th = sth * (3 - 4 * sth * sth)
        cos3th = cth * (4 * cth * cth - 3)
        # cos(3 theta + phi), sin(3 phi) via angle-sum identities
        return sin3ph * (cos3th * cph - sin3th * sph)

    return u


def _coord_laplacian(R, r, u, th, ph):
    """Laplace-Beltrami in torus angles:
    (1/r^2) u_tt + (1/W^2) u_pp - (sin t / (r W)) u_t, W = R + r cos t.

    Generic over scalar type; nesting it yields the bilaplacian.
    """
    tj = Jet((th, 1.0, 0.0))
    f_t = u(tj, Jet((ph, 0.0, 0.0)))
    u_t, u_tt = f_t.c[1], 2 * f_t.c[2]
    f_p = u(Jet((th, 0.0, 0.0)), Jet((ph, 1.0, 0.0)))
    u_pp = 2 * f_p.c[2]
    W = R + r * jcos(th)
    return u_tt / r ** 2 + u_pp / W ** 2 - jsin(th) / (r * W) * u_t


def _torus_metric_gradient(surface, pts):
    R, r = surface.major_radius, surface.minor_radius
    th, ph = _torus_angles(surface, pts)
    f_t = _torus_u(Jet((th, 1.0)), Jet((ph, 0.0)))
    f_p = _torus_u(Jet((th, 0.0)), Jet((ph, 1.0)))
    u_t, u_p = f_t.c[1], f_p.c[1]
    W = R + r * np.cos(th)
    e_th = np.stack([-np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph),
                     np.cos(th)], axis=1)
    e_ph = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=1)
    return (u_t / r)[:, None] * e_th + (u_p / W)[:, None] * e_ph


def torus_printed_neg_laplacian(R, r, th, ph):
    """Reference three-term expansion of -Delta_gamma u on the torus."""
    W = R + r * jcos(th)
    sth = jsin(th)
    s3p, c3p = jsin(3 * ph), jcos(3 * ph)
    s3tp, c3tp = jsin(3 * th + ph), jcos(3 * th + ph)
    return (9 / r ** 2 * s3p * c3tp
            - 3 / (r * W) * sth * s3p * s3tp
            + 1 / W ** 2 * (10 * s3p * c3tp + 6 * c3p * s3tp))
