import math

import numpy as np
import pytest

from choreo.loops import FourierLoop, SystemParams, pack_coefficients
from choreo.optimize import (
    DescentConfig,
    StartSpec,
    detect_clusters,
    init_circle,
    kepler_minimize,
    minimize,
    multistart,
)
from choreo.spectral import circle_radius_for_winding, predicted_circle

TWO_PI = 2.0 * math.pi


def noisy_circle(params, winding, seed, noise=0.06, cutoff=6, radius=None):
    if radius is None:
        radius = circle_radius_for_winding(
            params.n, params.alpha, params.omega, winding
        )
    return init_circle(params, winding, radius, noise=noise, seed=seed, cutoff=cutoff)


# ---------------------------------------------------------------------------
# init_circle


def test_init_circle_chord_formula():
    p = SystemParams(n=5)
    loop = init_circle(p, 1, 1.0, noise=0.0)
    from choreo.loops import min_separation

    assert abs(min_separation(loop, p) - 2 * math.sin(math.pi / 5)) < 1e-12


def test_init_circle_rejects_shared_factor_at_zero_noise():
    p = SystemParams(n=4)
    with pytest.raises(ValueError):
        init_circle(p, 2, 1.0, noise=0.0)
    with pytest.raises(ValueError):
        init_circle(p, 4, 1.0, noise=0.1)  # divisible by n: always rejected
    init_circle(p, 2, 1.0, noise=0.1)  # lifted by noise


def test_init_circle_deterministic():
    p = SystemParams(n=3)
    a = init_circle(p, -1, 1.0, noise=0.1, seed=42)
    b = init_circle(p, -1, 1.0, noise=0.1, seed=42)
    assert np.array_equal(pack_coefficients(a), pack_coefficients(b))


# ---------------------------------------------------------------------------
# minimize: inertial circle


def test_minimize_three_body_inertial():
    p = SystemParams(n=3, alpha=1.0)
    cfg = DescentConfig(cutoff=6, grad_tol=1e-8, log_every=10)
    res = minimize(p, noisy_circle(p, -1, seed=7), cfg)
    assert res.converged and not res.escaped_to_infinity
    assert res.grad_norm < 1e-8
    # force-balance oracle: R = 3^{-1/6}, action 3^{2/3} pi
    assert abs(res.diagnostics.radius - 3.0 ** (-1.0 / 6.0)) < 1e-4
    assert abs(res.action.total - 3.0 ** (2.0 / 3.0) * math.pi) < 1e-5
    assert res.newton_residual < 1e-6
    assert abs(res.diagnostics.winding) == 1
    assert res.history  # log_every produced a trace


def test_minimize_descent_monotone():
    p = SystemParams(n=3, alpha=1.0)
    cfg = DescentConfig(cutoff=6, log_every=1)
    res = minimize(p, noisy_circle(p, -1, seed=3), cfg)
    actions = [h[1] for h in res.history]
    for a, b in zip(actions, actions[1:]):
        assert b <= a + 1e-12


def test_minimize_gauge_invariance():
    # rotated/translated starts reach the same minimum value
    p = SystemParams(n=3, alpha=1.0)
    cfg = DescentConfig(cutoff=6)
    base = minimize(p, noisy_circle(p, -1, seed=1), cfg)
    start = noisy_circle(p, -1, seed=1)
    theta = 0.6
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    moved = FourierLoop(
        start.mean @ R.T + np.array([0.05, -0.02]),
        start.cos_coeffs @ R.T,
        start.sin_coeffs @ R.T,
    )
    other = minimize(p, moved, cfg)
    assert abs(base.action.total - other.action.total) < 1e-8


def test_minimize_criticality_consistency():
    # converged => the force residual co-vanishes (within 100x of grad tol)
    p = SystemParams(n=5, alpha=2.0)
    cfg = DescentConfig(cutoff=6, grad_tol=1e-8)
    res = minimize(p, noisy_circle(p, 1, seed=2), cfg)
    assert res.converged
    assert res.newton_residual < 1e-6


def test_minimize_kepler():
    cfg = DescentConfig(cutoff=6, grad_tol=1e-8)
    rng = np.random.default_rng(11)
    q0 = FourierLoop.circle(1.4, 1, cutoff=6)
    q0 = FourierLoop(
        q0.mean,
        q0.cos_coeffs + rng.uniform(-0.08, 0.08, (6, 2)),
        q0.sin_coeffs + rng.uniform(-0.08, 0.08, (6, 2)),
    )
    res = kepler_minimize(1.0, q0, cfg)
    assert res.converged
    assert abs(res.diagnostics.radius - 1.0) < 1e-4
    assert abs(res.action.total - 3 * math.pi) < 1e-5


# ---------------------------------------------------------------------------
# escape


def test_minimize_escape_at_coprime_integer():
    p = SystemParams(n=5, alpha=1.0, omega=3.0)
    cfg = DescentConfig(cutoff=4, grid_size=40, escape_factor=8.0)
    res = minimize(p, init_circle(p, -3, 1.2, noise=0.05, seed=1, cutoff=4), cfg)
    assert res.escaped_to_infinity
    assert not res.converged


def test_escape_and_converged_mutually_exclusive():
    p = SystemParams(n=3, alpha=1.0)
    res = minimize(p, noisy_circle(p, -1, seed=5), DescentConfig(cutoff=6))
    assert res.converged != res.escaped_to_infinity


# ---------------------------------------------------------------------------
# clusters


def test_clusters_single_for_circle():
    p = SystemParams(n=6, alpha=1.0)
    rep = detect_clusters(FourierLoop.circle(1.0, 1, cutoff=4), p)
    assert rep.count == 1
    assert rep.size == 6
    assert rep.matches_arithmetic_rule


def test_clusters_synthetic_pairs():
    # three far-apart pairs: bodies i and i+3 travel together
    p = SystemParams(n=6, alpha=1.0)
    m = -2
    base = FourierLoop.circle(0.2, m, cutoff=8)
    # add a large slow component of winding 2 (cluster centres far apart)
    cos = base.cos_coeffs.copy()
    sin = base.sin_coeffs.copy()
    cos[1, 0] += 5.0
    sin[1, 1] -= 5.0
    loop = FourierLoop(base.mean, cos, sin)
    rep = detect_clusters(loop, p)
    assert (rep.count, rep.size) == (3, 2)
    assert rep.assignment == (0, 1, 2, 0, 1, 2)
    assert rep.intra_lags == (3,)
    assert rep.matches_arithmetic_rule
    assert min(rep.drift) > 1.0


def test_clusters_nonrigid_minimizer_case():
    p = SystemParams(n=6, alpha=1.0, omega=1.8)
    cfg = DescentConfig(cutoff=12, grad_tol=1e-6)
    res = minimize(p, init_circle(p, -2, 1.0, noise=0.08, seed=5, cutoff=12), cfg)
    assert res.converged
    assert res.clusters is not None
    assert (res.clusters.count, res.clusters.size) == (3, 2)
    assert res.clusters.assignment == (0, 1, 2, 0, 1, 2)
    assert abs(res.diagnostics.winding) == 2
    assert res.diagnostics.radius_rms > 1e-2  # decisively non-rigid


# ---------------------------------------------------------------------------
# multistart


def test_multistart_single_start():
    p = SystemParams(n=3, alpha=1.0)
    cfg = DescentConfig(cutoff=6)
    out = multistart(p, cfg, [StartSpec(winding=-1, seed=0)])
    assert len(out.results) == 1
    assert out.best is out.results[0]


def test_multistart_tie_at_half_integer():
    # both winding classes carry minima of equal action at omega = 1.5
    p = SystemParams(n=3, alpha=1.0, omega=1.5)
    cfg = DescentConfig(cutoff=6)
    out = multistart(
        p, cfg, [StartSpec(winding=-1, seed=1), StartSpec(winding=-2, seed=2)]
    )
    a, b = (r.action.total for r in out.results)
    assert abs(a - b) < 1e-6
    windings = sorted(abs(r.diagnostics.winding) for r in out.results)
    assert windings == [1, 2]


def test_multistart_parallel_matches_serial():
    p = SystemParams(n=3, alpha=1.0)
    cfg = DescentConfig(cutoff=4)
    starts = [StartSpec(winding=-1, seed=s) for s in range(3)]
    serial = multistart(p, cfg, starts, workers=1)
    parallel = multistart(p, cfg, starts, workers=3)
    for a, b in zip(serial.results, parallel.results):
        assert a.action.total == b.action.total
