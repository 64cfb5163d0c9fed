"""Radial comparison machinery: Jacobi fields, curvature-decay conditions, Kasue's
envelope, and the radial Dirichlet eigenfunction of Euclidean balls.

Integration is fixed-step classical RK4 throughout so results are
bit-reproducible across runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

RadialFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_TOL_ODE = 1e-8


class SolutionEscaped(ArithmeticError):
    pass


class TailDivergent(ValueError):
    pass


class BracketError(RuntimeError):
    pass


def _as_vectorized(fn: RadialFn) -> RadialFn:
    def wrapped(t):
        t = np.asarray(t, float)
        out = np.asarray(fn(t), float)
        return np.broadcast_to(out, t.shape).astype(float)

    return wrapped


def _safe_eval(G: RadialFn, t: float, step: float) -> float:
    """Evaluate G, stepping off t=0 when G has a removable singularity there."""
    with np.errstate(all="ignore"):
        val = float(G(np.asarray(t)))
    if not np.isfinite(val) and t == 0.0:
        val = float(G(np.asarray(1e-6 * step)))
    return val


def _rk4(f, y0, t0, step, n):
    """Fixed-step RK4; returns the array of states at t0 + k*step, k=0..n."""
    ys = np.empty((n + 1, len(y0)))
    ys[0] = y0
    y = np.asarray(y0, float)
    t = t0
    for k in range(n):
        k1 = f(t, y)
        k2 = f(t + step / 2, y + step / 2 * k1)
        k3 = f(t + step / 2, y + step / 2 * k2)
        k4 = f(t + step, y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
        t = t0 + (k + 1) * step
    return ys


# ---------------------------------------------------------------------------
# Jacobi equation h'' = G h
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonProfile:
    G: RadialFn
    t: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray
    grid_step: float
    positivity_horizon: float
    richardson_error: float = np.nan

    def __call__(self, t):
        """Cubic Hermite interpolation of h."""
        return self.interpolate(t)[0]

    def interpolate(self, t):
        t = np.asarray(t, float)
        s = self.grid_step
        k = np.clip(np.floor(t / s).astype(int), 0, len(self.t) - 2)
        x = (t - self.t[k]) / s
        h0, h1 = self.h[k], self.h[k + 1]
        d0, d1 = self.h_prime[k] * s, self.h_prime[k + 1] * s
        x2, x3 = x * x, x * x * x
        h = (2 * x3 - 3 * x2 + 1) * h0 + (x3 - 2 * x2 + x) * d0 + (-2 * x3 + 3 * x2) * h1 + (x3 - x2) * d1
        dh = ((6 * x2 - 6 * x) * h0 + (3 * x2 - 4 * x + 1) * d0 + (-6 * x2 + 6 * x) * h1 + (3 * x2 - 2 * x) * d1) / s
        return h, dh

    def residual(self) -> np.ndarray:
        """|h'' - G h| at interior nodes, h'' from five-point second differences,
        scaled by max(1, |h|)."""
        h, s = self.h, self.grid_step
        if len(h) < 5:
            return np.zeros(0)
        d2 = (-h[4:] + 16 * h[3:-1] - 30 * h[2:-2] + 16 * h[1:-3] - h[:-4]) / (12 * s * s)
        tt = self.t[2:-2]
        Gt = np.array([_safe_eval(self.G, x, s) for x in tt])
        return np.abs(d2 - Gt * h[2:-2]) / np.maximum(1.0, np.abs(h[2:-2]))


def _integrate_jacobi(G, t_max, step, sign=1.0):
    n = int(round(t_max / step))
    if n < 1:
        raise ValueError("t_max must exceed the step")

    def f(t, y):
        return np.array([y[1], sign * _safe_eval(G, t, step) * y[0]])

    with np.errstate(over="ignore", invalid="ignore"):
        ys = _rk4(f, np.array([0.0, 1.0]), 0.0, step, n)
    return np.arange(n + 1) * step, ys


def solve_jacobi(G: RadialFn, t_max: float, step: float = 1e-2, richardson: bool = True) -> ComparisonProfile:
    """Tabulate the solution of ``h'' - G h = 0, h(0)=0, h'(0)=1`` on ``[0, t_max]``.

    If ``h`` reaches zero the table is truncated there and
    ``positivity_horizon`` records the last positive node. The Richardson
    estimate compares against a run at ``step/2``.
    """
    if t_max <= 0 or step <= 0:
        raise ValueError("t_max and step must be positive")
    G = _as_vectorized(G)
    t, ys = _integrate_jacobi(G, t_max, step)
    if not np.all(np.isfinite(ys)) or np.abs(ys).max() > 1e300:
        raise SolutionEscaped("solution escaped before t_max")
    h, hp = ys[:, 0], ys[:, 1]
    bad = np.nonzero(h[1:] <= 0)[0]
    if bad.size:
        cut = bad[0] + 1
        t, h, hp = t[:cut], h[:cut], hp[:cut]
    horizon = float(t[-1])
    err = np.nan
    if richardson:
        t2, ys2 = _integrate_jacobi(G, horizon, step / 2)
        h2 = ys2[::2, 0][: len(h)]
        # RK4: error(step) ~ 16/15 * |h(step) - h(step/2)|
        err = float(np.max(np.abs(h - h2) / np.maximum(1.0, np.abs(h2))) * 16 / 15)
    return ComparisonProfile(G, t, h, hp, step, horizon, err)


def check_bmr(G: RadialFn, t_max: float, tail_exponent: Optional[float] = None, n: int = 4000):
    """Evaluate ``sup_t t * int_t^inf G_-(s) ds`` and compare with 1/4.

    The tail beyond ``t_max`` is zero unless a power-law decay exponent ``p`` for
    ``G_-`` is declared (``G_-(s) ~ G_-(t_max) (s/t_max)^p``), which requires
    ``p < -1``. Returns ``(holds, sup_value, info)``.
    """
    G = _as_vectorized(G)
    if tail_exponent is not None and tail_exponent >= -1:
        raise TailDivergent(f"tail divergent: exponent {tail_exponent} >= -1")
    t = np.linspace(0.0, t_max, n + 1)
    with np.errstate(all="ignore"):
        gm = np.maximum(-G(t), 0.0)
    if not np.isfinite(gm[0]):
        gm[0] = gm[1]
    # cumulative trapezoid from the right
    seg = 0.5 * (gm[1:] + gm[:-1]) * np.diff(t)
    right = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    tail = 0.0
    if tail_exponent is not None:
        tail = gm[-1] * t_max / (-tail_exponent - 1)
    vals = t * (right + tail)
    sup = float(vals.max())
    info = {"tail": "power_law" if tail_exponent is not None else "assumed_zero",
            "tail_exponent": tail_exponent, "tail_integral": tail}
    return sup <= 0.25, sup, info


def quadratic_decay_lemma_check(profile: ComparisonProfile, tol: float = 1e-6):
    """Premise ``h''/h <= 2/t^2`` on the grid, and the maximum of ``t h'/h``.

    Returns ``(premise_holds, max_t_logderiv)``.
    """
    t, h, hp = profile.t[1:], profile.h[1:], profile.h_prime[1:]
    Gt = np.array([_safe_eval(profile.G, x, profile.grid_step) for x in t])
    premise = bool(np.all(Gt <= 2.0 / t**2 + tol))
    return premise, float(np.max(t * hp / h))


# ---------------------------------------------------------------------------
# model-space helpers
# ---------------------------------------------------------------------------


def s_kappa(kappa: float, t):
    """Solution of ``S'' + kappa S = 0`` with ``S(0)=0, S'(0)=1``."""
    t = np.asarray(t, float)
    if kappa == 0:
        out = t.copy()
    elif kappa < 0:
        k = np.sqrt(-kappa)
        out = np.sinh(k * t) / k
    else:
        k = np.sqrt(kappa)
        out = np.sin(k * t) / k
    return out if out.ndim else float(out)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def kasue_bound(kappa: float, k: RadialFn, r: float, R, delta: Optional[RadialFn] = None,
                return_flag: bool = False):
    """``delta(R) + S_kappa(R)^{-1} int_r^R S_kappa(s) k(s) ds``, clamped to [0, 1].

    ``R`` may be an array; quadrature is 64-point Gauss-Legendre per interval.
    With ``return_flag`` the clamping indicator is returned too.
    """
    R = np.asarray(R, float)
    if np.any(R <= r):
        raise ValueError("empty integration range: need r < R")
    k = _as_vectorized(k)
    half = (R - r)[..., None] / 2
    s = r + half * (_GL_X + 1)
    integral = np.sum(_GL_W * s_kappa(kappa, s) * k(s), axis=-1) * half[..., 0]
    d = np.zeros_like(R) if delta is None else _as_vectorized(delta)(R)
    raw = d + integral / s_kappa(kappa, R)
    out = np.clip(raw, 0.0, 1.0)
    clamped = bool(np.any(out != raw))
    out = out if out.ndim else float(out)
    return (out, clamped) if return_flag else out


def lambda_c(c: float, delta: RadialFn, t):
    """``Lambda_c(t) = delta(t) + c``; also returns whether the value is below 1."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    val = np.asarray(_as_vectorized(delta)(t) + c)
    ok = bool(np.all(val < 1))
    val = val if val.ndim else float(val)
    return val, ok


def default_delta(sin_beta_max: float, r0: float, h: Optional[ComparisonProfile] = None) -> RadialFn:
    """``delta(t) = sin_beta_max * h(r0) / h(t)`` (``h(t) = t`` when no profile is given)."""
    if h is None:
        return lambda t: sin_beta_max * r0 / np.asarray(t, float)
    hr0 = float(h(r0))
    return lambda t: sin_beta_max * hr0 / h(np.asarray(t, float))


# ---------------------------------------------------------------------------
# radial Dirichlet eigenfunction of the Euclidean l-ball
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialEigenfunction:
    l: int
    r: float
    lambda1: float
    t: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray

    def __call__(self, t):
        return self.interpolate(t)[0]

    def interpolate(self, t):
        t = np.asarray(t, float)
        s = self.t[1] - self.t[0]
        k = np.clip(np.floor(t / s).astype(int), 0, len(self.t) - 2)
        x = (t - self.t[k]) / s
        v0, v1 = self.v[k], self.v[k + 1]
        d0, d1 = self.v_prime[k] * s, self.v_prime[k + 1] * s
        x2, x3 = x * x, x * x * x
        v = (2 * x3 - 3 * x2 + 1) * v0 + (x3 - 2 * x2 + x) * d0 + (-2 * x3 + 3 * x2) * v1 + (x3 - x2) * d1
        dv = ((6 * x2 - 6 * x) * v0 + (3 * x2 - 4 * x + 1) * d0 + (-6 * x2 + 6 * x) * v1 + (3 * x2 - 2 * x) * d1) / s
        return v, dv

    def residual(self) -> np.ndarray:
        v, s, t = self.v, self.t[1] - self.t[0], self.t
        d2 = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * s * s)
        return np.abs(d2 + (self.l - 1) * self.v_prime[2:-2] / t[2:-2] + self.lambda1 * v[2:-2])


def _shoot(l: int, lam: float, r: float, n: int):
    """Integrate ``v'' + (l-1) v'/t + lam v = 0`` from the series start at t=h."""
    step = r / n
    t = step
    v = 1 - lam * t**2 / (2 * l) + lam**2 * t**4 / (8 * l * (l + 2))
    w = -lam * t / l + lam**2 * t**3 / (2 * l * (l + 2))
    out = np.empty((n + 1, 2))
    out[0] = 1.0, 0.0
    out[1] = v, w
    a = l - 1
    h2 = step / 2
    for k in range(2, n + 1):
        th = t + h2
        t1 = t + step
        k1v, k1w = w, -a * w / t - lam * v
        v2, w2 = v + h2 * k1v, w + h2 * k1w
        k2v, k2w = w2, -a * w2 / th - lam * v2
        v3, w3 = v + h2 * k2v, w + h2 * k2w
        k3v, k3w = w3, -a * w3 / th - lam * v3
        v4, w4 = v + step * k3v, w + step * k3w
        k4v, k4w = w4, -a * w4 / t1 - lam * v4
        v += step / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        w += step / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        t = k * step
        out[k] = v, w
    return out


def dirichlet_eigen_ball(l: int, r: float, n: int = 4000, rtol: float = 1e-13) -> RadialEigenfunction:
    """First Dirichlet eigenvalue and radial profile of the ball of radius ``r`` in R^l.

    Shooting from the origin with ``v(0)=1, v'(0)=0``; the eigenvalue is the
    first ``lam`` where ``v(r; lam)`` changes sign, bracketed by a geometric
    scan and refined by bisection.
    """
    if l < 2:
        raise ValueError("l must be >= 2")
    if r <= 0:
        raise ValueError("r must be positive")
    lo = 0.5 / r**2
    if _shoot(l, lo, r, n)[-1, 0] <= 0:
        raise BracketError("no sign change in lambda bracket")
    hi = lo
    for _ in range(200):
        hi = lo * 1.2
        if _shoot(l, hi, r, n)[-1, 0] < 0:
            break
        lo = hi
    else:
        raise BracketError("no sign change in lambda bracket")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _shoot(l, mid, r, n)[-1, 0] > 0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    ys = _shoot(l, lam, r, n)
    return RadialEigenfunction(l, r, lam, np.linspace(0.0, r, n + 1), ys[:, 0], ys[:, 1])


def v_slope_lemma_check(ef: RadialEigenfunction, tol: float = 1e-9):
    """Maximum of ``-v'(t)/t`` on (0, r] and whether it stays below ``lambda1``."""
    ratio = -ef.v_prime[1:] / ef.t[1:]
    m = float(ratio.max())
    return m <= ef.lambda1 * (1 + tol), m
