"""Steepest descent over Fourier coefficients, with escape and clusters.

Plain gradient descent with Armijo backtracking and geometric step growth.
No momentum and no quasi-Newton acceleration on the certified runs: the
selected minimizer should be the one reached by the steepest descent flow
from the given start.  The step grows by a constant factor after every
accepted iterate, which is what lets non-attainment runs (minimizing
sequences escaping to infinity) reach the escape threshold in a bounded
number of iterations.

Escape detection: non-attained infima are approached by loops whose spatial
extent diverges while the action still decreases.  A run is flagged
``escaped_to_infinity`` when the loop's rms norm about the origin exceeds
``escape_factor`` times max(1, initial rms); escaped and converged are
mutually exclusive.

Cluster detection groups bodies by time-averaged pairwise distance using the
largest relative gap in the sorted lag profile.  Adjacent sorted chords of a
circle never jump by more than a factor 2 (sin 2u / sin u < 2), so any gap
ratio above 2 indicates genuine clustering; the partition is then checked
against the arithmetic rule bodies i = m (mod j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import action as action_mod
from .action import (
    ActionValue,
    CollisionError,
    DEFAULT_GUARD,
    kinetic_gradient,
    kinetic_value,
    pair_potential,
    pullback_to_coefficients,
    single_potential,
)
from .loops import (
    TWO_PI,
    FourierLoop,
    LoopDiagnostics,
    SymmetryGroup,
    SystemParams,
    diagnostics as loop_diagnostics,
    pack_coefficients,
    project_symmetry,
    resolve_grid_size,
    trig_basis,
    unpack_coefficients,
)
from .spectral import circle_radius_for_winding


@dataclass(frozen=True)
class DescentConfig:
    """Knobs of the descent; defaults are the certified-run settings."""

    cutoff: int = 8
    grid_size: int | None = None
    max_iters: int = 200_000
    grad_tol: float = 1e-8
    initial_step: float = 0.25
    backtrack: float = 0.5
    armijo: float = 1e-4
    step_growth: float = 2.0
    max_step: float = 1e9
    min_step: float = 1e-16
    guard: float = DEFAULT_GUARD
    seed: int = 0
    symmetry: SymmetryGroup | None = None
    pin_mean: bool = False
    escape_factor: float = 12.0
    escape_window: int = 200
    log_every: int = 0  # 0 disables the iteration history

    def __post_init__(self) -> None:
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        for name in ("grad_tol", "initial_step", "armijo", "guard"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.step_growth < 1.0:
            raise ValueError("step growth must be >= 1")


@dataclass(frozen=True)
class ClusterReport:
    """Grouping of bodies by time-averaged distance."""

    count: int  # j, number of clusters
    size: int  # k~, bodies per cluster
    assignment: tuple[int, ...]  # body -> cluster index
    intra_lags: tuple[int, ...]  # lags h grouped as intra-cluster
    drift: tuple[float, ...]  # rms norm of each cluster centroid path
    lag_profile: tuple[float, ...]  # mean distance per lag h = 1..n-1
    matches_arithmetic_rule: bool

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "size": self.size,
            "assignment": list(self.assignment),
            "intra_lags": list(self.intra_lags),
            "drift": list(self.drift),
            "lag_profile": list(self.lag_profile),
            "matches_arithmetic_rule": self.matches_arithmetic_rule,
        }


@dataclass(frozen=True)
class MinimizeResult:
    loop: FourierLoop
    action: ActionValue
    grad_norm: float
    newton_residual: float
    iters: int
    diagnostics: LoopDiagnostics
    clusters: ClusterReport | None
    converged: bool
    escaped_to_infinity: bool
    abort_reason: str | None = None
    history: tuple[tuple[int, float, float, float], ...] = ()

    def as_dict(self) -> dict:
        return {
            "action": self.action.as_dict(),
            "grad_norm": self.grad_norm,
            "newton_residual": self.newton_residual,
            "iters": self.iters,
            "diagnostics": self.diagnostics.as_dict(),
            "clusters": self.clusters.as_dict() if self.clusters else None,
            "converged": self.converged,
            "escaped_to_infinity": self.escaped_to_infinity,
            "abort_reason": self.abort_reason,
        }


# ---------------------------------------------------------------------------
# packed objective


class Objective:
    """Discretised action and gradient over packed coefficient vectors.

    ``params=None`` selects the Kepler functional (one body around a fixed
    center, zero mean pinned); otherwise the rotating-frame choreography
    action at params.omega (the inertial one when omega = 0).
    """

    def __init__(
        self,
        params: SystemParams | None,
        cutoff: int,
        grid_size: int | None = None,
        guard: float = DEFAULT_GUARD,
        symmetry: SymmetryGroup | None = None,
        pin_mean: bool = False,
        alpha: float | None = None,
        dim: int | None = None,
    ):
        self.params = params
        self.kepler = params is None
        if self.kepler:
            if alpha is None or dim is None:
                raise ValueError("Kepler objective needs alpha and dim")
            self.alpha = float(alpha)
            self.dim = int(dim)
            self.n = 2
            self.omega = 0.0
            pin_mean = True
        else:
            self.alpha = params.alpha
            self.dim = params.d
            self.n = params.n
            self.omega = params.omega
        self.cutoff = int(cutoff)
        self.grid_size = resolve_grid_size(self.cutoff, self.n, grid_size)
        self.guard = guard
        self.symmetry = symmetry
        self.pin_mean = pin_mean
        _, self._C, self._S = trig_basis(self.cutoff, self.grid_size)
        self.mask = self._build_mask()
        self.size = self.dim * (1 + 2 * self.cutoff)

    def _build_mask(self) -> np.ndarray:
        d, K = self.dim, self.cutoff
        if self.symmetry is not None:
            if self.symmetry.dim != d:
                raise ValueError(
                    f"symmetry group needs dimension {self.symmetry.dim}, run has {d}"
                )
            mmask, cmask, smask = self.symmetry.masks(K)
        else:
            mmask = np.ones(d, dtype=bool)
            cmask = np.ones((K, d), dtype=bool)
            smask = np.ones((K, d), dtype=bool)
        if self.pin_mean:
            mmask = np.zeros(d, dtype=bool)
        return np.concatenate([mmask, cmask.ravel(), smask.ravel()])

    # -- packing ------------------------------------------------------------

    def pack(self, loop: FourierLoop) -> np.ndarray:
        if loop.dim != self.dim:
            raise ValueError("loop dimension does not match the objective")
        vec = pack_coefficients(loop.padded(self.cutoff))
        return np.where(self.mask, vec, 0.0)

    def unpack(self, vec: np.ndarray) -> FourierLoop:
        return unpack_coefficients(vec, self.dim, self.cutoff)

    def _split(self, vec: np.ndarray):
        d, K = self.dim, self.cutoff
        mean = vec[:d]
        cos = vec[d : d + K * d].reshape(K, d)
        sin = vec[d + K * d :].reshape(K, d)
        return mean, cos, sin

    def _samples(self, mean, cos, sin) -> np.ndarray:
        return mean + self._C @ cos + self._S @ sin

    # -- evaluation ---------------------------------------------------------

    def value(self, vec: np.ndarray) -> float:
        mean, cos, sin = self._split(vec)
        kin = kinetic_value(mean, cos, sin, self.omega)
        X = self._samples(mean, cos, sin)
        if self.kepler:
            pot, _, _ = single_potential(X, self.alpha, self.guard, False)
        else:
            pot, _, _ = pair_potential(X, self.n, self.alpha, self.guard, False)
        return kin + pot

    def value_and_grad(self, vec: np.ndarray) -> tuple[float, np.ndarray]:
        mean, cos, sin = self._split(vec)
        g_mean, g_cos, g_sin = kinetic_gradient(mean, cos, sin, self.omega)
        kin = kinetic_value(mean, cos, sin, self.omega)
        X = self._samples(mean, cos, sin)
        if self.kepler:
            pot, force, _ = single_potential(X, self.alpha, self.guard, True)
        else:
            pot, force, _ = pair_potential(X, self.n, self.alpha, self.guard, True)
        fm, fc, fs = pullback_to_coefficients(force, self.cutoff)
        grad = np.concatenate(
            [(g_mean + fm), (g_cos + fc).ravel(), (g_sin + fs).ravel()]
        )
        return kin + pot, np.where(self.mask, grad, 0.0)

    def action_value(self, vec: np.ndarray) -> ActionValue:
        mean, cos, sin = self._split(vec)
        kin = kinetic_value(mean, cos, sin, self.omega)
        X = self._samples(mean, cos, sin)
        if self.kepler:
            pot, _, _ = single_potential(X, self.alpha, self.guard, False)
        else:
            pot, _, _ = pair_potential(X, self.n, self.alpha, self.guard, False)
        return ActionValue(kin, pot, self.grid_size)

    def rms(self, vec: np.ndarray) -> float:
        mean, cos, sin = self._split(vec)
        sq = float(mean @ mean) + 0.5 * float(np.sum(cos**2) + np.sum(sin**2))
        return math.sqrt(max(sq, 0.0))

    def residual(self, vec: np.ndarray) -> float:
        loop = self.unpack(vec)
        if self.kepler:
            return action_mod.kepler_newton_residual(
                loop, self.alpha, self.grid_size, self.guard
            )
        return action_mod.newton_residual(
            loop, self.params, "auto", self.grid_size, self.guard
        )


# ---------------------------------------------------------------------------
# descent engine


@dataclass
class _DescentOutcome:
    vec: np.ndarray
    value: float
    grad_norm: float
    iters: int
    converged: bool
    escaped: bool
    abort_reason: str | None
    history: list


def descend(obj: Objective, x0: np.ndarray, cfg: DescentConfig) -> _DescentOutcome:
    """Armijo-backtracked steepest descent on the packed objective.

    Escape is declared when the loop's rms norm exceeds ``escape_factor``
    times max(1, initial rms) after growing monotonically (to rounding) over
    the last ``escape_window`` iterations; the action is strictly decreasing
    throughout by construction, which completes the non-attainment
    signature.
    """
    x = np.where(obj.mask, x0, 0.0)
    f, g = obj.value_and_grad(x)
    t = cfg.initial_step
    rms = obj.rms(x)
    escape_at = cfg.escape_factor * max(1.0, rms)
    growth_streak = 0
    history: list = []
    abort = None
    converged = escaped = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if cfg.log_every and (it % cfg.log_every == 0 or it == 1):
            history.append((it, f, gnorm, t))
        if gnorm < cfg.grad_tol:
            converged = True
            break
        if rms > escape_at and growth_streak >= cfg.escape_window:
            escaped = True
            break
        gsq = gnorm * gnorm
        # near a minimum the sufficient decrease drops below the float
        # resolution of f; allow that much slack (stays within the 1e-12
        # per-step monotonicity contract)
        noise = 1e-13 * max(1.0, abs(f))
        accepted = False
        while t >= cfg.min_step:
            try:
                fn = obj.value(x - t * g)
            except CollisionError:
                fn = None
            if fn is not None and fn <= f - cfg.armijo * t * gsq + noise:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            abort = "no feasible descent step above the minimum step size"
            break
        measurable = cfg.armijo * t * gsq > noise
        x = x - t * g
        f, g = obj.value_and_grad(x)
        new_rms = obj.rms(x)
        growth_streak = growth_streak + 1 if new_rms >= rms * (1.0 - 1e-9) else 0
        rms = new_rms
        if measurable:
            t = min(t * cfg.step_growth, cfg.max_step)
        elif float(np.linalg.norm(g)) > gnorm:
            # noise-floor regime: an overshooting step is invisible to the
            # Armijo test, so stabilise on the gradient norm instead
            t *= cfg.backtrack
    else:
        abort = "iteration budget exhausted"
        it = cfg.max_iters
    gnorm = float(np.linalg.norm(g))
    return _DescentOutcome(
        vec=x,
        value=f,
        grad_norm=gnorm,
        iters=it,
        converged=converged,
        escaped=escaped,
        abort_reason=abort,
        history=history,
    )


# ---------------------------------------------------------------------------
# public entry points


def init_circle(
    params: SystemParams,
    winding: int,
    radius: float,
    noise: float = 0.0,
    seed: int = 0,
    cutoff: int = 8,
) -> FourierLoop:
    """Planar circle of the given winding plus seeded uniform coefficient
    noise on harmonics <= cutoff.

    At zero noise the winding must be coprime with n, otherwise two bodies
    coincide along the whole orbit; with noise the degeneracy is lifted and
    any winding not divisible by n is accepted.
    """
    m = int(winding)
    if m % params.n == 0:
        raise ValueError(f"winding {m} is divisible by n={params.n}: all bodies collide")
    g = math.gcd(abs(m), params.n)
    if noise == 0.0 and g != 1:
        raise ValueError(
            f"winding {m} shares factor {g} with n={params.n}: bodies collide "
            "pairwise at zero noise"
        )
    K = max(cutoff, abs(m))
    loop = FourierLoop.circle(radius, m, dim=params.d, cutoff=K)
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        cos = loop.cos_coeffs + rng.uniform(-noise, noise, size=(K, params.d))
        sin = loop.sin_coeffs + rng.uniform(-noise, noise, size=(K, params.d))
        loop = FourierLoop(loop.mean, cos, sin)
    return loop


def _finish(
    obj: Objective, params: SystemParams | None, out: _DescentOutcome, cfg: DescentConfig
) -> MinimizeResult:
    loop = obj.unpack(out.vec)
    act = obj.action_value(out.vec)
    if params is not None:
        diag = loop_diagnostics(loop, params, obj.grid_size)
        clusters = detect_clusters(loop, params, obj.grid_size)
    else:
        kepler_params = SystemParams(n=2, d=obj.dim, alpha=obj.alpha)
        diag = loop_diagnostics(loop, kepler_params, obj.grid_size)
        clusters = None
    try:
        resid = obj.residual(out.vec)
    except CollisionError:
        resid = math.inf
    return MinimizeResult(
        loop=loop,
        action=act,
        grad_norm=out.grad_norm,
        newton_residual=resid,
        iters=out.iters,
        diagnostics=diag,
        clusters=clusters,
        converged=out.converged,
        escaped_to_infinity=out.escaped,
        abort_reason=out.abort_reason,
        history=tuple(out.history),
    )


def minimize(
    params: SystemParams, init: FourierLoop, cfg: DescentConfig
) -> MinimizeResult:
    """Descend the (rotating-frame) choreography action from ``init``.

    The action sequence is nonincreasing by construction; termination is by
    gradient tolerance, escape detection, step starvation or the iteration
    budget.  The symmetry projection, when a group is configured, is a
    coordinate mask, so masking the gradient keeps every iterate inside the
    constraint subspace (projected gradient descent).
    """
    obj = Objective(
        params,
        cutoff=max(cfg.cutoff, init.cutoff),
        grid_size=cfg.grid_size,
        guard=cfg.guard,
        symmetry=cfg.symmetry,
        pin_mean=cfg.pin_mean,
    )
    x0 = obj.pack(init if cfg.symmetry is None else project_symmetry(init, cfg.symmetry))
    out = descend(obj, x0, cfg)
    return _finish(obj, params, out, cfg)


def kepler_minimize(
    alpha: float, init: FourierLoop, cfg: DescentConfig
) -> MinimizeResult:
    """Descend the two-body functional (zero mean pinned throughout)."""
    obj = Objective(
        None,
        cutoff=max(cfg.cutoff, init.cutoff),
        grid_size=cfg.grid_size,
        guard=cfg.guard,
        alpha=alpha,
        dim=init.dim,
    )
    out = descend(obj, obj.pack(init), cfg)
    return _finish(obj, None, out, cfg)


# ---------------------------------------------------------------------------
# clusters


_GAP_THRESHOLD = 2.0


def detect_clusters(
    loop: FourierLoop, params: SystemParams, grid_size: int | None = None
) -> ClusterReport:
    """Group bodies by time-averaged pairwise distance.

    Sorts the n-1 lag-averaged distances and splits at the largest
    consecutive ratio when it exceeds the circle-safe threshold 2.  The
    intra-cluster lags must then be exactly the multiples of some divisor j
    of n; otherwise the split is rejected and a single cluster reported.
    """
    n = params.n
    M = resolve_grid_size(loop.cutoff, n, grid_size)
    X = loop.sample(M)
    stride = M // n
    profile = np.empty(n - 1)
    for h in range(1, n):
        diff = X - np.roll(X, -h * stride, axis=0)
        profile[h - 1] = float(np.mean(np.sqrt(np.sum(diff**2, axis=1))))

    order = np.argsort(profile)
    vals = profile[order]
    split_at = 0
    best_ratio = 0.0
    for i in range(len(vals) - 1):
        lo = max(vals[i], 1e-300)
        ratio = vals[i + 1] / lo
        if ratio > best_ratio:
            best_ratio = ratio
            split_at = i + 1

    def single() -> ClusterReport:
        return ClusterReport(
            count=1,
            size=n,
            assignment=tuple([0] * n),
            intra_lags=(),
            drift=(float(np.linalg.norm(loop.mean)),),
            lag_profile=tuple(profile.tolist()),
            matches_arithmetic_rule=True,
        )

    if best_ratio <= _GAP_THRESHOLD:
        return single()

    intra = sorted(int(order[i]) + 1 for i in range(split_at))
    j = math.gcd(n, math.gcd(*intra) if intra else n)
    expected = set(range(j, n, j))
    if j <= 1 or j >= n or set(intra) != expected:
        return single()

    k_tilde = n // j
    assignment = tuple(i % j for i in range(n))
    bodies = [loop.shift(i * params.tau).sample(M) for i in range(n)]
    drift = []
    for c in range(j):
        members = [bodies[i] for i in range(n) if i % j == c]
        centroid = np.mean(members, axis=0) - loop.mean
        drift.append(math.sqrt(float(np.mean(np.sum(centroid**2, axis=1)))))
    return ClusterReport(
        count=j,
        size=k_tilde,
        assignment=assignment,
        intra_lags=tuple(intra),
        drift=tuple(drift),
        lag_profile=tuple(profile.tolist()),
        matches_arithmetic_rule=True,
    )


# ---------------------------------------------------------------------------
# multistart


@dataclass(frozen=True)
class StartSpec:
    """One seeded circle start; radius None picks the restricted optimum."""

    winding: int
    radius: float | None = None
    noise: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class MultistartResult:
    best: MinimizeResult
    results: tuple[MinimizeResult, ...]
    starts: tuple


def _resolve_start(params: SystemParams, cfg: DescentConfig, spec) -> FourierLoop:
    if isinstance(spec, FourierLoop):
        return spec
    radius = spec.radius
    if radius is None:
        try:
            radius = circle_radius_for_winding(
                params.n, params.alpha, params.omega, spec.winding
            )
        except ValueError:
            radius = 1.0
    return init_circle(
        params, spec.winding, radius, noise=spec.noise, seed=spec.seed, cutoff=cfg.cutoff
    )


def multistart(
    params: SystemParams,
    cfg: DescentConfig,
    starts: Sequence[StartSpec | FourierLoop],
    workers: int = 1,
) -> MultistartResult:
    """Run minimize() per start and return the argmin by action.

    Starts are independent with isolated state, so they may run on a thread
    pool (``workers`` > 1); results are merged deterministically by
    (action, start index) either way.  The full table is kept for reporting.
    """
    if not starts:
        raise ValueError("need at least one start")
    inits = [_resolve_start(params, cfg, spec) for spec in starts]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda init: minimize(params, init, cfg), inits))
    else:
        results = [minimize(params, init, cfg) for init in inits]
    ordered = sorted(
        range(len(results)), key=lambda i: (results[i].action.total, i)
    )
    best = results[ordered[0]]
    return MultistartResult(best=best, results=tuple(results), starts=tuple(starts))
