"""Closed-form parametric immersions into R^n and their pointwise extrinsic geometry.

Every function here is vectorized: ``u`` and ``v`` may be scalars or arrays of
a common shape, and ambient vectors carry a trailing axis of length ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

Array = np.ndarray
ChartFn = Callable[[Array, Array], Array]


class GeometryError(ValueError):
    """Raised when the immersion condition fails at a requested point."""


@dataclass(frozen=True)
class ParametricImmersion:
    """A chart ``F(u, v) -> R^n`` with optional analytic derivative oracles.

    ``dF`` returns ``(F_u, F_v)`` and ``d2F`` returns ``(F_uu, F_uv, F_vv)``.
    When an oracle is missing, central differences with step ``fd_step`` are
    used instead.
    """

    name: str
    ambient_dim: int
    domain: Tuple[float, float, float, float]
    F: ChartFn
    dF: Optional[Callable] = None
    d2F: Optional[Callable] = None
    periodic_u: bool = False
    basepoint: Tuple[float, float] = (0.0, 0.0)
    fd_step: float = 1e-5
    minimal: bool = False
    params: dict = field(default_factory=dict)

    @property
    def period(self) -> Optional[float]:
        if not self.periodic_u:
            return None
        return self.domain[1] - self.domain[0]

    def position(self, u, v) -> Array:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return self.F(u, v)

    def first_derivatives(self, u, v) -> Tuple[Array, Array]:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        if self.dF is not None:
            return self.dF(u, v)
        s = self.fd_step
        Fu = (self.F(u + s, v) - self.F(u - s, v)) / (2 * s)
        Fv = (self.F(u, v + s) - self.F(u, v - s)) / (2 * s)
        return Fu, Fv

    def second_derivatives(self, u, v) -> Tuple[Array, Array, Array]:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        if self.d2F is not None:
            return self.d2F(u, v)
        s = self.fd_step
        F0 = self.F(u, v)
        Fuu = (self.F(u + s, v) - 2 * F0 + self.F(u - s, v)) / s**2
        Fvv = (self.F(u, v + s) - 2 * F0 + self.F(u, v - s)) / s**2
        Fuv = (
            self.F(u + s, v + s) - self.F(u + s, v - s)
            - self.F(u - s, v + s) + self.F(u - s, v - s)
        ) / (4 * s**2)
        return Fuu, Fuv, Fvv

    def without_derivatives(self, fd_step: float = 1e-4) -> "ParametricImmersion":
        """Same chart, derivatives by finite differences."""
        return replace(self, dF=None, d2F=None, fd_step=fd_step)

    def embedded(self, n: int) -> "ParametricImmersion":
        """Append zero coordinates so the image lives in R^n."""
        if n < self.ambient_dim:
            raise ValueError("cannot embed into a smaller ambient space")
        pad = n - self.ambient_dim

        def _pad(fn):
            if fn is None:
                return None

            def wrapped(u, v):
                out = fn(u, v)
                if isinstance(out, tuple):
                    return tuple(_zero_extend(o, pad) for o in out)
                return _zero_extend(out, pad)

            return wrapped

        return replace(
            self, ambient_dim=n, F=_pad(self.F), dF=_pad(self.dF), d2F=_pad(self.d2F)
        )

    def moved(self, rotation: Array, translation: Array) -> "ParametricImmersion":
        """Compose with the rigid motion ``x -> rotation @ x + translation``."""
        Q = np.asarray(rotation, float)
        b = np.asarray(translation, float)

        def F(u, v):
            return self.F(u, v) @ Q.T + b

        def lin(fn):
            if fn is None:
                return None
            return lambda u, v: tuple(o @ Q.T for o in fn(u, v))

        return replace(self, F=F, dF=lin(self.dF), d2F=lin(self.d2F))


def _zero_extend(x: Array, pad: int) -> Array:
    if pad == 0:
        return x
    return np.concatenate([x, np.zeros(x.shape[:-1] + (pad,))], axis=-1)


def _stack(*cols) -> Array:
    cols = np.broadcast_arrays(*cols)
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

INF = np.inf


def plane() -> ParametricImmersion:
    zero = lambda u: np.zeros_like(u)
    one = lambda u: np.ones_like(u)
    return ParametricImmersion(
        name="plane",
        ambient_dim=3,
        domain=(-INF, INF, -INF, INF),
        F=lambda u, v: _stack(u, v, zero(u)),
        dF=lambda u, v: (_stack(one(u), zero(u), zero(u)), _stack(zero(u), one(u), zero(u))),
        d2F=lambda u, v: (np.zeros(u.shape + (3,)),) * 3,
        minimal=True,
    )


def catenoid() -> ParametricImmersion:
    def F(u, v):
        return _stack(np.cosh(v) * np.cos(u), np.cosh(v) * np.sin(u), v)

    def dF(u, v):
        ch, sh, cu, su = np.cosh(v), np.sinh(v), np.cos(u), np.sin(u)
        return _stack(-ch * su, ch * cu, 0 * u), _stack(sh * cu, sh * su, 1 + 0 * u)

    def d2F(u, v):
        ch, sh, cu, su = np.cosh(v), np.sinh(v), np.cos(u), np.sin(u)
        return (
            _stack(-ch * cu, -ch * su, 0 * u),
            _stack(-sh * su, sh * cu, 0 * u),
            _stack(ch * cu, ch * su, 0 * u),
        )

    return ParametricImmersion(
        name="catenoid", ambient_dim=3, domain=(0.0, 2 * np.pi, -INF, INF),
        F=F, dF=dF, d2F=d2F, periodic_u=True, minimal=True,
    )


def helicoid(c: float = 1.0) -> ParametricImmersion:
    def F(u, v):
        return _stack(v * np.cos(u), v * np.sin(u), c * u)

    def dF(u, v):
        cu, su = np.cos(u), np.sin(u)
        return _stack(-v * su, v * cu, c + 0 * u), _stack(cu, su, 0 * u)

    def d2F(u, v):
        cu, su = np.cos(u), np.sin(u)
        return _stack(-v * cu, -v * su, 0 * u), _stack(-su, cu, 0 * u), np.zeros(u.shape + (3,))

    return ParametricImmersion(
        name="helicoid", ambient_dim=3, domain=(-INF, INF, -INF, INF),
        F=F, dF=dF, d2F=d2F, minimal=True, params={"c": c},
    )


def enneper() -> ParametricImmersion:
    def F(u, v):
        return _stack(u - u**3 / 3 + u * v**2, -v + v**3 / 3 - u**2 * v, u**2 - v**2)

    def dF(u, v):
        return (
            _stack(1 - u**2 + v**2, -2 * u * v, 2 * u),
            _stack(2 * u * v, -1 + v**2 - u**2, -2 * v),
        )

    def d2F(u, v):
        two = 2 + 0 * u
        return _stack(-2 * u, -2 * v, two), _stack(2 * v, -2 * u, 0 * u), _stack(2 * u, 2 * v, -two)

    return ParametricImmersion(
        name="enneper", ambient_dim=3, domain=(-INF, INF, -INF, INF),
        F=F, dF=dF, d2F=d2F, minimal=True,
    )


def sphere(a: float = 1.0, center=(0.0, 0.0, 0.0)) -> ParametricImmersion:
    """Round sphere of radius ``a``; poles on the z-axis through ``center``."""
    c0 = np.asarray(center, float)

    def F(u, v):
        return c0 + a * _stack(np.cos(v) * np.cos(u), np.cos(v) * np.sin(u), np.sin(v))

    def dF(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        return a * _stack(-cv * su, cv * cu, 0 * u), a * _stack(-sv * cu, -sv * su, cv)

    def d2F(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        return (
            a * _stack(-cv * cu, -cv * su, 0 * u),
            a * _stack(sv * su, -sv * cu, 0 * u),
            a * _stack(-cv * cu, -cv * su, -sv),
        )

    # nearest point to the origin, in chart coordinates
    d = -c0
    if np.linalg.norm(d) > 0:
        d = d / np.linalg.norm(d)
        base = (float(np.arctan2(d[1], d[0]) % (2 * np.pi)), float(np.arcsin(np.clip(d[2], -1, 1))))
    else:
        base = (0.0, 0.0)
    return ParametricImmersion(
        name="sphere", ambient_dim=3, domain=(0.0, 2 * np.pi, -np.pi / 2, np.pi / 2),
        F=F, dF=dF, d2F=d2F, periodic_u=True, basepoint=base,
        params={"a": a, "center": tuple(float(x) for x in c0)},
    )


def paraboloid() -> ParametricImmersion:
    def F(u, v):
        return _stack(u, v, (u**2 + v**2) / 2)

    def dF(u, v):
        return _stack(1 + 0 * u, 0 * u, u), _stack(0 * u, 1 + 0 * u, v)

    def d2F(u, v):
        e3 = _stack(0 * u, 0 * u, 1 + 0 * u)
        return e3, np.zeros(u.shape + (3,)), e3

    return ParametricImmersion(
        name="paraboloid", ambient_dim=3, domain=(-INF, INF, -INF, INF), F=F, dF=dF, d2F=d2F,
    )


def hyperboloid_sheet(c: float = 1.0) -> ParametricImmersion:
    def F(u, v):
        return _stack(u, v, c * np.sqrt(1 + u**2 + v**2))

    def dF(u, v):
        s = np.sqrt(1 + u**2 + v**2)
        return _stack(1 + 0 * u, 0 * u, c * u / s), _stack(0 * u, 1 + 0 * u, c * v / s)

    def d2F(u, v):
        s3 = (1 + u**2 + v**2) ** 1.5
        z = 0 * u
        return (
            _stack(z, z, c * (1 + v**2) / s3),
            _stack(z, z, -c * u * v / s3),
            _stack(z, z, c * (1 + u**2) / s3),
        )

    return ParametricImmersion(
        name="hyperboloid_sheet", ambient_dim=3, domain=(-INF, INF, -INF, INF),
        F=F, dF=dF, d2F=d2F, params={"c": c},
    )


def graph(f: Callable[[Array, Array], Array], fd_step: float = 1e-5) -> ParametricImmersion:
    """Graph ``(u, v, f(u, v))`` with finite-difference derivatives."""
    return ParametricImmersion(
        name="graph", ambient_dim=3, domain=(-INF, INF, -INF, INF),
        F=lambda u, v: _stack(u, v, f(u, v)), fd_step=fd_step,
    )


_CATALOG = {
    "plane": plane,
    "catenoid": catenoid,
    "helicoid": helicoid,
    "enneper": enneper,
    "sphere": sphere,
    "paraboloid": paraboloid,
    "hyperboloid_sheet": hyperboloid_sheet,
    "graph": graph,
}

CATALOG_NAMES = tuple(_CATALOG)


def catalog(name: str, **params) -> ParametricImmersion:
    """Look up a catalog immersion by name, passing shape parameters through."""
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown immersion {name!r}; known: {', '.join(CATALOG_NAMES)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# pointwise geometry
# ---------------------------------------------------------------------------


@dataclass
class PointGeometry:
    """Extrinsic geometry at one or many chart points (fields broadcast over points)."""

    position: Array
    g11: Array
    g12: Array
    g22: Array
    alpha11: Array
    alpha12: Array
    alpha22: Array
    K: Array
    H: Array
    alpha_norm: Array
    Fu: Array
    Fv: Array

    @property
    def det_g(self) -> Array:
        return self.g11 * self.g22 - self.g12**2

    @property
    def H_norm(self) -> Array:
        return np.linalg.norm(self.H, axis=-1)

    @property
    def area_element(self) -> Array:
        return np.sqrt(self.det_g)


def _dot(a: Array, b: Array) -> Array:
    return np.einsum("...i,...i->...", a, b)


def tangent_coefficients(Fu, Fv, g11, g12, g22, w):
    """Coefficients (a, b) with ``a Fu + b Fv`` the tangential projection of ``w``."""
    det = g11 * g22 - g12**2
    p, q = _dot(w, Fu), _dot(w, Fv)
    a = (g22 * p - g12 * q) / det
    b = (-g12 * p + g11 * q) / det
    return a, b


def normal_part(Fu, Fv, g11, g12, g22, w):
    a, b = tangent_coefficients(Fu, Fv, g11, g12, g22, w)
    return w - a[..., None] * Fu - b[..., None] * Fv


def point_geometry(imm: ParametricImmersion, u, v, det_tol: float = 1e-14,
                   allow_degenerate: bool = False) -> PointGeometry:
    """Fundamental forms, second fundamental form, K, mean curvature vector and ||alpha||.

    The normal part of each second derivative is obtained by subtracting its
    projection onto span{F_u, F_v}, so no normal frame is needed and any
    codimension works. ``H`` is half the trace of alpha. With
    ``allow_degenerate`` singular chart points yield NaN curvature instead of
    raising.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    X = imm.position(u, v)
    Fu, Fv = imm.first_derivatives(u, v)
    Fuu, Fuv, Fvv = imm.second_derivatives(u, v)
    g11, g12, g22 = _dot(Fu, Fu), _dot(Fu, Fv), _dot(Fv, Fv)
    det = g11 * g22 - g12**2
    scale = np.maximum(g11 * g22, 1.0)
    bad = det <= det_tol * scale
    if np.any(bad):
        if not allow_degenerate:
            raise GeometryError("not an immersion here: degenerate first fundamental form")
        det = np.where(bad, np.nan, det)
    a11 = normal_part(Fu, Fv, g11, g12, g22, Fuu)
    a12 = normal_part(Fu, Fv, g11, g12, g22, Fuv)
    a22 = normal_part(Fu, Fv, g11, g12, g22, Fvv)
    i11, i12, i22 = g22 / det, -g12 / det, g11 / det
    K = (_dot(a11, a22) - _dot(a12, a12)) / det
    H = 0.5 * (i11[..., None] * a11 + 2 * i12[..., None] * a12 + i22[..., None] * a22)
    # ||alpha||^2 = g^{ik} g^{jl} <alpha_ij, alpha_kl>
    s11, s12, s22 = _dot(a11, a11), _dot(a11, a12), _dot(a11, a22)
    t12, t22, w22 = _dot(a12, a12), _dot(a12, a22), _dot(a22, a22)
    norm2 = (
        i11 * i11 * s11 + 4 * i11 * i12 * s12 + 2 * i12 * i12 * s22
        + 2 * (i11 * i22 + i12 * i12) * t12 + 4 * i12 * i22 * t22 + i22 * i22 * w22
    )
    return PointGeometry(
        position=X, g11=g11, g12=g12, g22=g22,
        alpha11=a11, alpha12=a12, alpha22=a22,
        K=K, H=H, alpha_norm=np.sqrt(np.maximum(norm2, 0.0)), Fu=Fu, Fv=Fv,
    )


def radial_split(geom: PointGeometry):
    """Split the ambient radial unit vector into tangential and normal parts.

    Returns ``(R, grad_R_norm, normal_defect, normal_vector)`` where the last is
    the normal component of ``x / |x|`` as an ambient vector.
    """
    X = geom.position
    R = np.linalg.norm(X, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        e = X / R[..., None]
    nrm = normal_part(geom.Fu, geom.Fv, geom.g11, geom.g12, geom.g22, e)
    defect = np.linalg.norm(nrm, axis=-1)
    tang = e - nrm
    return R, np.linalg.norm(tang, axis=-1), defect, nrm


def grad_R_chart(geom: PointGeometry):
    """Chart components of the intrinsic gradient of R and |grad R|^2."""
    X = geom.position
    R = np.linalg.norm(X, axis=-1)
    e = X / R[..., None]
    a, b = tangent_coefficients(geom.Fu, geom.Fv, geom.g11, geom.g12, geom.g22, e)
    n2 = a * a * geom.g11 + 2 * a * b * geom.g12 + b * b * geom.g22
    return a, b, n2


def alpha_on(geom: PointGeometry, du: Array, dv: Array) -> Array:
    """alpha(X, X) for the tangent vector X = du F_u + dv F_v."""
    du, dv = du[..., None], dv[..., None]
    return du * du * geom.alpha11 + 2 * du * dv * geom.alpha12 + dv * dv * geom.alpha22


def alpha_norm_profile(imm: ParametricImmersion, path, rho=None):
    """||alpha|| along a chart path, paired with a distance proxy.

    Without ``rho``, the proxy is the integrated ambient chord length along
    the path starting at zero.
    """
    path = np.asarray(path, float)
    geom = point_geometry(imm, path[:, 0], path[:, 1])
    if rho is None:
        steps = np.linalg.norm(np.diff(geom.position, axis=0), axis=-1)
        rho = np.concatenate([[0.0], np.cumsum(steps)])
    return list(zip(np.asarray(rho, float), geom.alpha_norm))
