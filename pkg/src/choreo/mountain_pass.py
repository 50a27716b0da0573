"""Minimax saddle search along discretised paths of loops.

The saddle between two local minimizers is characterised as the minimum,
over continuous paths joining them, of the maximal action along the path.
The search runs in three phases.

Path phase.  P loops (coefficient vectors) with the two endpoints pinned are
swept repeatedly: (1) recompute node actions; (2) apply one bounded,
backtracked descent step to the maximal interior node and its two
neighbours, descending only the gradient component orthogonal to the local
path tangent (a full steepest-descent step would also slide nodes along the
path, and the straight segments that reparametrisation re-bridges across the
ridge can cut below the barrier); (3) redistribute the nodes to near-uniform
coefficient spacing with the current maximal node kept as a knot, rejecting
the redistribution if it would raise the maximal action.  The maximal action
is nonincreasing across sweeps by construction.

Bracket phase.  Node actions sample the path coarsely, so the barrier
crossing is located directly: walking out from the maximal node, the first
pair of consecutive nodes whose bounded descent probes relax into different
endpoint basins brackets the basin boundary, and bisection of that segment
pins a point on the boundary to relative accuracy.

Refinement phase.  Eigenvector-following Newton from the boundary point: the
finite-difference Hessian is diagonalised, the lowest eigenvalue is kept (or
forced) negative and all remaining eigenvalues are replaced by their floored
absolute values, so the step moves toward an index-1 stationary point while
symmetry zero modes stay inert; a trust region adapted on gradient-norm
decrease stabilises the far field.  Near the saddle exactly one eigenvalue
is negative, the modification is the identity and the iteration is plain
Newton with quadratic convergence.  Starting on the basin boundary matters:
started inside a basin, the same iteration can drain to a minimum.

Interpolated nodes that would collide are repaired by escalating transverse
offsets; if the repair budget is exhausted the offending segment is
reported.  Endpoints are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .action import ActionValue, CollisionError, DEFAULT_GUARD
from .loops import (
    FourierLoop,
    LoopDiagnostics,
    SymmetryGroup,
    SystemParams,
    diagnostics as loop_diagnostics,
    pack_coefficients,
)
from .optimize import Objective


class MountainPassError(RuntimeError):
    pass


@dataclass(frozen=True)
class MountainPassConfig:
    nodes: int = 21
    cutoff: int = 16
    grid_size: int | None = None
    max_sweeps: int = 1500
    saddle_tol: float = 1e-6
    refine_trigger: float = 5e-3
    endpoint_tol: float = 1e-5
    step: float = 0.25
    armijo: float = 1e-4
    backtrack: float = 0.5
    guard: float = DEFAULT_GUARD
    symmetry: SymmetryGroup | None = None
    pin_mean: bool = False
    max_refine_iters: int = 120
    fd_step: float = 1e-6
    stagnation_window: int = 60
    stagnation_tol: float = 1e-8
    bulge: FourierLoop | None = None
    bulge_amplitude: float = 0.0
    repair_tries: int = 6
    probe_iters: int = 800
    probe_level: float = 0.3  # probe stop: endpoint action + this much
    bisect_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.nodes < 3:
            raise ValueError("a path needs at least 3 nodes")
        if self.saddle_tol <= 0 or self.refine_trigger <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class LoopPath:
    """P coefficient vectors with endpoints fixed and cached node actions."""

    nodes: list  # list of packed vectors
    actions: np.ndarray
    dim: int
    cutoff: int

    def max_interior(self) -> int:
        return 1 + int(np.argmax(self.actions[1:-1]))

    def to_loops(self) -> list[FourierLoop]:
        from .loops import unpack_coefficients

        return [unpack_coefficients(v, self.dim, self.cutoff) for v in self.nodes]


@dataclass(frozen=True)
class SaddleResult:
    loop: FourierLoop
    action: ActionValue
    grad_norm: float
    newton_residual: float
    sweeps: int
    refine_iters: int
    converged: bool
    diagnostics: LoopDiagnostics
    path: LoopPath
    max_action_history: tuple[float, ...]
    profile: tuple[float, ...]
    endpoint_actions: tuple[float, float]

    @property
    def above_endpoints(self) -> bool:
        return self.action.total > max(self.endpoint_actions) + 1e-9

    def as_dict(self) -> dict:
        return {
            "action": self.action.as_dict(),
            "grad_norm": self.grad_norm,
            "newton_residual": self.newton_residual,
            "sweeps": self.sweeps,
            "refine_iters": self.refine_iters,
            "converged": self.converged,
            "above_endpoints": self.above_endpoints,
            "endpoint_actions": list(self.endpoint_actions),
            "diagnostics": self.diagnostics.as_dict(),
            "profile": list(self.profile),
        }


# ---------------------------------------------------------------------------
# path construction


def _node_value(obj: Objective, vec: np.ndarray) -> float:
    try:
        return obj.value(vec)
    except CollisionError:
        return math.inf


def _repair(obj: Objective, path: list, i: int, tries: int) -> None:
    """Replace a colliding interior node by the neighbour midpoint plus an
    escalating deterministic transverse offset."""
    base = 0.5 * (path[i - 1] + path[i + 1])
    seg = path[i + 1] - path[i - 1]
    norm = np.linalg.norm(seg)
    if norm == 0.0:
        norm = 1.0
    rng = np.random.default_rng(1234 + i)
    direction = rng.standard_normal(base.size)
    direction = np.where(obj.mask, direction, 0.0)
    direction -= (direction @ seg) / norm**2 * seg
    dn = np.linalg.norm(direction)
    direction = direction / dn if dn > 0 else direction
    amp = 0.05 * norm
    for _ in range(tries):
        cand = base + amp * direction
        if math.isfinite(_node_value(obj, cand)):
            path[i] = cand
            return
        amp *= 2.0
    raise MountainPassError(f"could not repair colliding path segment around node {i}")


def initial_path(
    obj: Objective,
    end_a: np.ndarray,
    end_b: np.ndarray,
    cfg: MountainPassConfig,
) -> list:
    """Straight-line path in coefficient space with optional transverse bulge."""
    P = cfg.nodes
    s = np.linspace(0.0, 1.0, P)
    path = [(1.0 - si) * end_a + si * end_b for si in s]
    if cfg.bulge is not None and cfg.bulge_amplitude > 0.0:
        direction = np.where(
            obj.mask, pack_coefficients(cfg.bulge.padded(obj.cutoff)), 0.0
        )
        nrm = np.linalg.norm(direction)
        if nrm > 0:
            direction /= nrm
        for i in range(1, P - 1):
            path[i] = path[i] + cfg.bulge_amplitude * math.sin(math.pi * s[i]) * direction
    for i in range(1, P - 1):
        if not math.isfinite(_node_value(obj, path[i])):
            _repair(obj, path, i, cfg.repair_tries)
    return path


def _reparametrise(path: list, pin: int) -> list:
    """Uniform arclength resampling with node ``pin`` kept as a knot."""

    def resample(chunk: list, count: int) -> list:
        if count <= 2 or len(chunk) < 2:
            return chunk
        pts = np.stack(chunk)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        if arc[-1] <= 0.0:
            return chunk
        targets = np.linspace(0.0, arc[-1], count)
        out = []
        for tgt in targets:
            j = int(np.searchsorted(arc, tgt, side="right") - 1)
            j = min(max(j, 0), len(chunk) - 2)
            span = arc[j + 1] - arc[j]
            w = 0.0 if span <= 0 else (tgt - arc[j]) / span
            out.append((1.0 - w) * pts[j] + w * pts[j + 1])
        out[0] = chunk[0]
        out[-1] = chunk[-1]
        return out

    left = resample(path[: pin + 1], pin + 1)
    right = resample(path[pin:], len(path) - pin)
    return left + right[1:]


# ---------------------------------------------------------------------------
# node descent


def _descend_node(
    obj: Objective,
    vec: np.ndarray,
    f: float,
    mesh: float,
    tangent: np.ndarray | None,
    cfg: MountainPassConfig,
) -> tuple[np.ndarray, float]:
    """One backtracked descent step with displacement capped by the mesh,
    restricted to the gradient component orthogonal to the path tangent."""
    _, g = obj.value_and_grad(vec)
    if tangent is not None:
        tn = float(np.linalg.norm(tangent))
        if tn > 0.0:
            that = tangent / tn
            g = g - float(g @ that) * that
    gnorm = float(np.linalg.norm(g))
    if gnorm < 1e-15:
        return vec, f
    t = min(cfg.step, mesh / gnorm)
    gsq = gnorm * gnorm
    while t * gnorm > 1e-14:
        cand = vec - t * g
        try:
            fc = obj.value(cand)
        except CollisionError:
            fc = None
        if fc is not None and fc <= f - cfg.armijo * t * gsq:
            return cand, fc
        t *= cfg.backtrack
    return vec, f


# ---------------------------------------------------------------------------
# basin probes, bracket, bisection


def _probe_descend(
    obj: Objective, x0: np.ndarray, stop_action: float, max_iters: int
) -> np.ndarray | None:
    """Bounded plain descent used to classify which basin a point drains to.

    Descent is stopped once the action falls below ``stop_action`` (past the
    ridge shoulder, deep enough for a distance comparison) or the gradient
    is small.  Plain coefficient distance to the endpoints is meaningful
    afterwards because the flow is equivariant: it does not drift along the
    rotation and time-shift orbits.
    """
    x = x0.copy()
    try:
        f, g = obj.value_and_grad(x)
    except CollisionError:
        return None
    t = 0.02
    for _ in range(max_iters):
        gn = float(np.linalg.norm(g))
        if gn < 1e-4 or f < stop_action:
            break
        gsq = gn * gn
        accepted = False
        while t >= 1e-16:
            try:
                fn = obj.value(x - t * g)
            except CollisionError:
                fn = None
            if fn is not None and fn <= f - 1e-4 * t * gsq + 1e-13 * max(1.0, abs(f)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x = x - t * g
        f, g = obj.value_and_grad(x)
        t = min(t * 2.0, 1.0)
    return x


def _basin(
    obj: Objective,
    x: np.ndarray,
    ends: tuple[np.ndarray, np.ndarray],
    stop_action: float,
    max_iters: int,
) -> int | None:
    xe = _probe_descend(obj, x, stop_action, max_iters)
    if xe is None:
        return None
    da = float(np.linalg.norm(xe - ends[0]))
    db = float(np.linalg.norm(xe - ends[1]))
    if da == db:
        return None
    return 0 if da < db else 1


def _bisect_to_boundary(
    obj: Objective,
    p_a: np.ndarray,
    p_b: np.ndarray,
    basin_fn,
    rel_tol: float,
) -> np.ndarray | None:
    """Shrink a straddling segment onto the basin boundary; returns the
    midpoint, or None if classification breaks down."""
    p_a, p_b = p_a.copy(), p_b.copy()
    scale = max(1.0, float(np.linalg.norm(p_a)))
    for _ in range(80):
        if float(np.linalg.norm(p_a - p_b)) < rel_tol * scale:
            break
        mid = 0.5 * (p_a + p_b)
        side = basin_fn(mid)
        if side == 0:
            p_a = mid
        elif side == 1:
            p_b = mid
        else:
            return None
    return 0.5 * (p_a + p_b)


# ---------------------------------------------------------------------------
# eigenvector-following refinement


def _fd_hessian(obj: Objective, vec: np.ndarray, h: float) -> np.ndarray:
    idx = np.flatnonzero(obj.mask)
    H = np.zeros((idx.size, idx.size))
    for col, i in enumerate(idx):
        e = np.zeros_like(vec)
        e[i] = h
        _, gp = obj.value_and_grad(vec + e)
        _, gm = obj.value_and_grad(vec - e)
        H[:, col] = (gp - gm)[idx] / (2.0 * h)
    return 0.5 * (H + H.T)


def _refine(
    obj: Objective, vec: np.ndarray, cfg: MountainPassConfig
) -> tuple[np.ndarray, float, int]:
    """Eigenvector-following Newton toward an index-1 stationary point."""
    x = vec.copy()
    idx = np.flatnonzero(obj.mask)
    _, g = obj.value_and_grad(x)
    gnorm = float(np.linalg.norm(g))
    radius = max(cfg.step, 1e-3)
    for it in range(1, cfg.max_refine_iters + 1):
        if gnorm < cfg.saddle_tol:
            return x, gnorm, it - 1
        scale = max(1.0, float(np.linalg.norm(x)))
        H = _fd_hessian(obj, x, cfg.fd_step * scale)
        evals, evecs = np.linalg.eigh(H)
        floor = max(1e-4 * float(np.max(np.abs(evals))), 1e-10)
        lam = evals.copy()
        lam[0] = min(lam[0], -floor)  # kept negative: move toward the saddle
        lam[1:] = np.maximum(np.abs(lam[1:]), floor)  # all others: descend
        coeff = evecs.T @ g[idx]
        step_r = -(evecs @ (coeff / lam))
        norm = float(np.linalg.norm(step_r))
        if norm > radius:
            step_r *= radius / norm
        step = np.zeros_like(x)
        step[idx] = step_r
        try:
            _, gc = obj.value_and_grad(x + step)
            gcn = float(np.linalg.norm(gc))
        except CollisionError:
            gcn = math.inf
        if gcn < gnorm:
            x, g, gnorm = x + step, gc, gcn
            radius = min(radius * 2.0, 10.0 * cfg.step)
        else:
            radius *= 0.5
            if radius < 1e-12:
                break
    return x, gnorm, cfg.max_refine_iters


# ---------------------------------------------------------------------------
# the algorithm


def mountain_pass(
    end_a: FourierLoop,
    end_b: FourierLoop,
    params: SystemParams,
    cfg: MountainPassConfig,
) -> SaddleResult:
    """Saddle candidate between two local minimizers of the action.

    Preconditions: both endpoints are critical to ``endpoint_tol``.  If the
    endpoints coincide the degenerate path is returned immediately.
    """
    cutoff = max(cfg.cutoff, end_a.cutoff, end_b.cutoff)
    obj = Objective(
        params,
        cutoff=cutoff,
        grid_size=cfg.grid_size,
        guard=cfg.guard,
        symmetry=cfg.symmetry,
        pin_mean=cfg.pin_mean,
    )
    va = obj.pack(end_a)
    vb = obj.pack(end_b)
    act_a, act_b = _node_value(obj, va), _node_value(obj, vb)

    if np.array_equal(va, vb):
        act = obj.action_value(va)
        _, g = obj.value_and_grad(va)
        path = LoopPath([va, va.copy(), vb], np.full(3, act.total), obj.dim, obj.cutoff)
        return SaddleResult(
            loop=obj.unpack(va),
            action=act,
            grad_norm=float(np.linalg.norm(g)),
            newton_residual=obj.residual(va),
            sweeps=0,
            refine_iters=0,
            converged=True,
            diagnostics=loop_diagnostics(obj.unpack(va), params, obj.grid_size),
            path=path,
            max_action_history=(act.total,),
            profile=tuple(path.actions.tolist()),
            endpoint_actions=(act.total, act.total),
        )

    for name, v in (("first", va), ("second", vb)):
        _, g = obj.value_and_grad(v)
        gn = float(np.linalg.norm(g))
        if gn > cfg.endpoint_tol:
            raise ValueError(
                f"{name} endpoint is not a critical point: gradient norm {gn:.3e} "
                f"exceeds {cfg.endpoint_tol:.1e}"
            )

    # --- path phase -------------------------------------------------------
    nodes = initial_path(obj, va, vb, cfg)
    acts = np.array([_node_value(obj, v) for v in nodes])
    history: list[float] = []
    sweeps_done = 0
    for sweep in range(1, cfg.max_sweeps + 1):
        sweeps_done = sweep
        im = 1 + int(np.argmax(acts[1:-1]))
        mesh = 0.5 * (
            float(np.linalg.norm(nodes[im] - nodes[im - 1]))
            + float(np.linalg.norm(nodes[im + 1] - nodes[im]))
        )
        mesh = max(mesh, 1e-12)
        for idx in (im - 1, im, im + 1):
            if 0 < idx < len(nodes) - 1:
                tangent = nodes[idx + 1] - nodes[idx - 1]
                nodes[idx], acts[idx] = _descend_node(
                    obj, nodes[idx], acts[idx], mesh, tangent, cfg
                )
        current_max = float(np.max(acts[1:-1]))
        pin = 1 + int(np.argmax(acts[1:-1]))
        new_nodes = _reparametrise(nodes, pin)
        new_acts = np.array([_node_value(obj, v) for v in new_nodes])
        if float(np.max(new_acts[1:-1])) <= current_max + 1e-12:
            nodes, acts = new_nodes, new_acts
            current_max = float(np.max(acts[1:-1]))
        history.append(current_max)

        im = 1 + int(np.argmax(acts[1:-1]))
        _, g = obj.value_and_grad(nodes[im])
        if float(np.linalg.norm(g)) < cfg.refine_trigger:
            break
        w = cfg.stagnation_window
        if len(history) > w and history[-w - 1] - history[-1] < cfg.stagnation_tol:
            break

    # --- bracket phase ----------------------------------------------------
    level = max(act_a, act_b) + cfg.probe_level

    def basin_fn(x):
        return _basin(obj, x, (va, vb), level, cfg.probe_iters)

    im = 1 + int(np.argmax(acts[1:-1]))
    sides: dict[int, int | None] = {0: 0, len(nodes) - 1: 1}

    def side_of(i: int):
        if i not in sides:
            sides[i] = basin_fn(nodes[i])
        return sides[i]

    start = vec_candidate = nodes[im].copy()
    # walk outward from the max node for the nearest straddling segment
    found = None
    for offset in range(0, len(nodes)):
        for seg in ((im - 1 - offset, im - offset), (im + offset, im + 1 + offset)):
            i, j = seg
            if 0 <= i < j <= len(nodes) - 1:
                a, b = side_of(i), side_of(j)
                if a is not None and b is not None and a != b:
                    found = (i, j) if a == 0 else (j, i)
                    break
        if found:
            break
    if found:
        boundary = _bisect_to_boundary(
            obj, nodes[found[0]], nodes[found[1]], basin_fn, cfg.bisect_tol
        )
        if boundary is not None:
            vec_candidate = boundary

    # --- refinement phase ---------------------------------------------------
    refined, gnorm, refine_iters = _refine(obj, vec_candidate, cfg)
    if gnorm >= cfg.saddle_tol or obj.value(refined) <= max(act_a, act_b) + 1e-9:
        # drained to a minimum or stalled: retry once from the raw max node
        alt, alt_gn, alt_it = _refine(obj, start, cfg)
        refine_iters += alt_it
        if alt_gn < gnorm and obj.value(alt) > max(act_a, act_b) + 1e-9:
            refined, gnorm = alt, alt_gn

    loop = obj.unpack(refined)
    act = obj.action_value(refined)
    path = LoopPath(nodes, acts, obj.dim, obj.cutoff)
    return SaddleResult(
        loop=loop,
        action=act,
        grad_norm=gnorm,
        newton_residual=obj.residual(refined),
        sweeps=sweeps_done,
        refine_iters=refine_iters,
        converged=gnorm < cfg.saddle_tol,
        diagnostics=loop_diagnostics(loop, params, obj.grid_size),
        path=path,
        max_action_history=tuple(history),
        profile=tuple(acts.tolist()),
        endpoint_actions=(act_a, act_b),
    )


def path_energy_profile(path: LoopPath) -> list[tuple[int, float]]:
    """Cached per-node actions as (index, action) pairs; the maximal interior
    node is path.max_interior()."""
    return [(i, float(a)) for i, a in enumerate(path.actions)]


def second_difference(
    obj: Objective, vec: np.ndarray, direction: np.ndarray, eps: float = 1e-4
) -> float:
    """(A(x+eps v) - 2 A(x) + A(x-eps v)) / eps^2 along a unit direction."""
    d = np.where(obj.mask, direction, 0.0)
    nrm = float(np.linalg.norm(d))
    if nrm == 0.0:
        raise ValueError("probe direction vanishes under the mask")
    d = d / nrm
    f0 = obj.value(vec)
    fp = obj.value(vec + eps * d)
    fm = obj.value(vec - eps * d)
    return (fp - 2.0 * f0 + fm) / (eps * eps)
