"""Action functionals, exact coefficient gradients, and the force residual.

Three functionals share one discretisation:

* Kepler:        A(q) = 1/2 int |q'|^2 + int dt/|q|^alpha, zero-mean q;
* choreography:  A(x) = 1/2 int |x'|^2
                       + 1/2 sum_{h=1}^{n-1} int dt / |x(t) - x(t+h tau)|^alpha;
* rotating:      same potential, kinetic 1/2 int |y' + J w P y|^2 plus the
                 plain 1/2 int |y'_perp|^2 on coordinates outside the
                 rotation plane.

Orientation convention: J is the counterclockwise quarter turn on the
rotation plane (the first two coordinates).  A rotating-frame circle
R e^{J m t} has kinetic energy pi R^2 (m + w)^2, so the slowly-moving
branch near an integer frame speed w ~ k is the winding m = -k.

Discretisation: all integrals use the uniform grid quadrature
(2 pi / M) sum_j f(t_j), which is exact for trigonometric polynomials below
the aliasing limit; in particular it is exact for the kinetic term whenever
M >= 2K + 1, so the closed-form kinetic expressions used here agree with the
grid quadrature to rounding.  The discretised action is the object that is
differentiated and optimised: gradients returned by this module are the
exact derivatives of the discretised functional, not of the continuum limit.

Near-collisions are a hard error below the guard separation (no smoothing):
minimizers of interest are collisionless, and smoothing would corrupt the
certified values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .loops import (
    TWO_PI,
    FourierLoop,
    SystemParams,
    resolve_grid_size,
    trig_basis,
)

DEFAULT_GUARD = 1e-8


class CollisionError(RuntimeError):
    """Raised when two bodies come closer than the guard separation."""

    def __init__(self, separation: float, t: float, h: int | None = None):
        self.separation = separation
        self.t = t
        self.h = h
        where = f"t={t:.6f}" + (f", lag h={h}" if h is not None else "")
        super().__init__(f"near-collision: separation {separation:.3e} at {where}")


@dataclass(frozen=True)
class ActionValue:
    kinetic: float
    potential: float
    grid_size: int

    @property
    def total(self) -> float:
        return self.kinetic + self.potential

    def as_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "potential": self.potential,
            "total": self.total,
            "grid_size": self.grid_size,
        }


@dataclass(frozen=True)
class GradientVector:
    """Derivative of the discretised action w.r.t. every Fourier coefficient."""

    mean: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    @property
    def norm(self) -> float:
        return math.sqrt(
            float(self.mean @ self.mean)
            + float(np.sum(self.cos_coeffs**2))
            + float(np.sum(self.sin_coeffs**2))
        )


# ---------------------------------------------------------------------------
# raw-array kernels (shared with the optimizer)


def kinetic_value(
    mean: np.ndarray, cos: np.ndarray, sin: np.ndarray, omega: float
) -> float:
    """1/2 int |y' + J w P y|^2 (+ plain kinetic outside the plane).

    With w = 0 this reduces to the inertial 1/2 int |y'|^2 for all
    components.  Closed form in the coefficients:

        1/2 int |y'|^2          = (pi/2) sum_k k^2 (|a_k|^2 + |b_k|^2)
        w int y' . J y          = 2 pi w sum_k k (a_k x b_k)   (plane only)
        (w^2/2) int |y_P|^2     = pi w^2 (|a_0P|^2 + ...)      (plane only)

    where a x b is the 2-d cross product on the rotation plane.
    """
    K = cos.shape[0]
    k = np.arange(1, K + 1, dtype=float)
    k2 = k * k
    val = 0.5 * math.pi * float(k2 @ (np.sum(cos**2, axis=1) + np.sum(sin**2, axis=1)))
    if omega:
        ap, bp = cos[:, :2], sin[:, :2]
        cross = ap[:, 0] * bp[:, 1] - ap[:, 1] * bp[:, 0]
        val += TWO_PI * omega * float(k @ cross)
        plane_sq = float(np.sum(ap**2) + np.sum(bp**2))
        val += 0.5 * omega**2 * (
            TWO_PI * float(mean[0] ** 2 + mean[1] ** 2) + math.pi * plane_sq
        )
    return val


def kinetic_gradient(
    mean: np.ndarray, cos: np.ndarray, sin: np.ndarray, omega: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradient of :func:`kinetic_value` in (mean, cos, sin)."""
    K, d = cos.shape
    k = np.arange(1, K + 1, dtype=float)[:, None]
    g_cos = math.pi * k**2 * cos
    g_sin = math.pi * k**2 * sin
    g_mean = np.zeros(d)
    if omega:
        ap, bp = cos[:, :2], sin[:, :2]
        # d/da of 2 pi w k (a x b) is 2 pi w k (b2, -b1); d/db is (−a2, a1)
        g_cos[:, 0] += TWO_PI * omega * k[:, 0] * bp[:, 1] + math.pi * omega**2 * ap[:, 0]
        g_cos[:, 1] += -TWO_PI * omega * k[:, 0] * bp[:, 0] + math.pi * omega**2 * ap[:, 1]
        g_sin[:, 0] += -TWO_PI * omega * k[:, 0] * ap[:, 1] + math.pi * omega**2 * bp[:, 0]
        g_sin[:, 1] += TWO_PI * omega * k[:, 0] * ap[:, 0] + math.pi * omega**2 * bp[:, 1]
        g_mean[0] = TWO_PI * omega**2 * mean[0]
        g_mean[1] = TWO_PI * omega**2 * mean[1]
    return g_mean, g_cos, g_sin


@lru_cache(maxsize=128)
def _shift_index(n: int, M: int) -> np.ndarray:
    """Row h-1 holds the sample indices of the lag-h shifted loop."""
    stride = M // n
    if stride * n != M:
        raise ValueError(f"grid size {M} is not a multiple of n={n}")
    j = np.arange(M)
    idx = (j[None, :] + stride * np.arange(1, n)[:, None]) % M
    idx.flags.writeable = False
    return idx


def pair_potential(
    X: np.ndarray,
    n: int,
    alpha: float,
    guard: float,
    need_force: bool,
) -> tuple[float, np.ndarray | None, float]:
    """Discretised pair potential of a choreography sample array.

    Returns (value, dU/dX or None, min separation).  X has shape (M, d) with
    M a multiple of n; the shift by h tau is an index roll by h*M/n samples,
    evaluated for all lags at once.  The force array is the exact derivative
    of the discretised value.
    """
    M = X.shape[0]
    idx = _shift_index(n, M)
    diff = X[None, :, :] - X[idx]  # (n-1, M, d)
    r2 = np.einsum("hmd,hmd->hm", diff, diff)
    flat_min = int(np.argmin(r2))
    min_sep = math.sqrt(float(r2.flat[flat_min]))
    if min_sep < guard:
        h, j = divmod(flat_min, M)
        raise CollisionError(min_sep, j * TWO_PI / M, h + 1)
    value = (math.pi / M) * float(np.sum(r2 ** (-alpha / 2.0)))
    force = None
    if need_force:
        w = r2 ** (-(alpha + 2.0) / 2.0)
        force = -(TWO_PI * alpha / M) * np.einsum("hm,hmd->md", w, diff)
    return value, force, min_sep


def single_potential(
    X: np.ndarray, alpha: float, guard: float, need_force: bool
) -> tuple[float, np.ndarray | None, float]:
    """Kepler potential int dt/|q|^alpha on the grid, with derivative."""
    M = X.shape[0]
    r2 = np.sum(X**2, axis=1)
    jmin = int(np.argmin(r2))
    sep = math.sqrt(float(r2[jmin]))
    if sep < guard:
        raise CollisionError(sep, jmin * TWO_PI / M, None)
    value = (TWO_PI / M) * float(np.sum(r2 ** (-alpha / 2.0)))
    force = None
    if need_force:
        force = -(TWO_PI * alpha / M) * (r2 ** (-(alpha + 2.0) / 2.0))[:, None] * X
    return value, force, sep


def pullback_to_coefficients(
    force: np.ndarray, cutoff: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chain rule from dU/dX on the grid to (mean, cos, sin) derivatives."""
    M = force.shape[0]
    _, C, S = trig_basis(cutoff, M)
    return force.sum(axis=0), C.T @ force, S.T @ force


# ---------------------------------------------------------------------------
# public functionals


def kepler_action(
    q: FourierLoop,
    alpha: float,
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> ActionValue:
    """Two-body action 1/2 int |q'|^2 + int dt/|q|^alpha for zero-mean q."""
    if float(np.max(np.abs(q.mean))) > 1e-12:
        raise ValueError("Kepler loops must have zero mean")
    M = resolve_grid_size(q.cutoff, 2, grid_size)
    kin = kinetic_value(q.mean, q.cos_coeffs, q.sin_coeffs, 0.0)
    pot, _, _ = single_potential(q.sample(M), alpha, guard, need_force=False)
    return ActionValue(kin, pot, M)


def choreography_action(
    x: FourierLoop,
    params: SystemParams,
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> ActionValue:
    """Inertial choreography action; ignores params.omega."""
    M = resolve_grid_size(x.cutoff, params.n, grid_size)
    kin = kinetic_value(x.mean, x.cos_coeffs, x.sin_coeffs, 0.0)
    pot, _, _ = pair_potential(x.sample(M), params.n, params.alpha, guard, False)
    return ActionValue(kin, pot, M)


def rotating_action(
    y: FourierLoop,
    params: SystemParams,
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> ActionValue:
    """Rotating-frame action at params.omega (the inertial action when 0).

    Mutual distances are rotation invariant, so only the kinetic part
    differs from the inertial functional.
    """
    M = resolve_grid_size(y.cutoff, params.n, grid_size)
    kin = kinetic_value(y.mean, y.cos_coeffs, y.sin_coeffs, params.omega)
    pot, _, _ = pair_potential(y.sample(M), params.n, params.alpha, guard, False)
    return ActionValue(kin, pot, M)


def _resolve_omega(params: SystemParams, frame: str) -> float:
    if frame == "inertial":
        return 0.0
    if frame == "rotating":
        return params.omega
    if frame == "auto":
        return params.omega
    raise ValueError(f"unknown frame {frame!r}")


def gradient(
    x: FourierLoop,
    params: SystemParams,
    frame: str = "auto",
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> GradientVector:
    """Exact derivative of the discretised action w.r.t. each coefficient.

    The kinetic part is in closed form (diagonal in the harmonic index); the
    potential part accumulates -alpha (x(t) - x(t+h tau)) / r^{alpha+2} on
    the grid and pulls it back through the shift structure and the basis
    functions.
    """
    omega = _resolve_omega(params, frame)
    M = resolve_grid_size(x.cutoff, params.n, grid_size)
    g_mean, g_cos, g_sin = kinetic_gradient(
        x.mean, x.cos_coeffs, x.sin_coeffs, omega
    )
    _, force, _ = pair_potential(x.sample(M), params.n, params.alpha, guard, True)
    fm, fc, fs = pullback_to_coefficients(force, x.cutoff)
    return GradientVector(g_mean + fm, g_cos + fc, g_sin + fs)


def kepler_gradient(
    q: FourierLoop,
    alpha: float,
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> GradientVector:
    M = resolve_grid_size(q.cutoff, 2, grid_size)
    g_mean, g_cos, g_sin = kinetic_gradient(q.mean, q.cos_coeffs, q.sin_coeffs, 0.0)
    _, force, _ = single_potential(q.sample(M), alpha, guard, True)
    fm, fc, fs = pullback_to_coefficients(force, q.cutoff)
    # the mean is not a Kepler degree of freedom; report its component anyway
    return GradientVector(g_mean + fm, g_cos + fc, g_sin + fs)


def newton_residual(
    x: FourierLoop,
    params: SystemParams,
    frame: str = "auto",
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> float:
    """L^2 norm of the equations of motion along body 0.

    Inertial frame:   x0'' + sum_h alpha (x0 - x_h)/|x0 - x_h|^{alpha+2};
    rotating frame:   y0'' + 2 w J y0' - w^2 y0 + same force, with the
    Coriolis and centrifugal terms acting on the rotation plane only.
    A loop is a critical point of the discretised action iff the gradient
    vanishes; this residual must co-vanish (up to the truncation tail).
    """
    omega = _resolve_omega(params, frame)
    M = resolve_grid_size(x.cutoff, params.n, grid_size)
    X = x.sample(M)
    acc = x.derivative().derivative().sample(M)
    res = acc.copy()
    if omega:
        vel = x.derivative().sample(M)
        res[:, 0] += -2.0 * omega * vel[:, 1] - omega**2 * X[:, 0]
        res[:, 1] += 2.0 * omega * vel[:, 0] - omega**2 * X[:, 1]
    stride = M // params.n
    for h in range(1, params.n):
        diff = X - np.roll(X, -h * stride, axis=0)
        r2 = np.sum(diff**2, axis=1)
        sep = math.sqrt(float(np.min(r2)))
        if sep < guard:
            raise CollisionError(sep, float(np.argmin(r2)) * TWO_PI / M, h)
        res += params.alpha * (r2 ** (-(params.alpha + 2.0) / 2.0))[:, None] * diff
    return math.sqrt((TWO_PI / M) * float(np.sum(res**2)))


def kepler_newton_residual(
    q: FourierLoop,
    alpha: float,
    grid_size: int | None = None,
    guard: float = DEFAULT_GUARD,
) -> float:
    """L^2 norm of q'' + alpha q / |q|^{alpha+2} on the grid."""
    M = resolve_grid_size(q.cutoff, 2, grid_size)
    X = q.sample(M)
    r2 = np.sum(X**2, axis=1)
    sep = math.sqrt(float(np.min(r2)))
    if sep < guard:
        raise CollisionError(sep, float(np.argmin(r2)) * TWO_PI / M, None)
    res = q.derivative().derivative().sample(M)
    res += alpha * (r2 ** (-(alpha + 2.0) / 2.0))[:, None] * X
    return math.sqrt((TWO_PI / M) * float(np.sum(res**2)))
