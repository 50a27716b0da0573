import math

import numpy as np
import pytest

from choreo.loops import EIGHT3D, FourierLoop, SystemParams
from choreo.mountain_pass import (
    MountainPassConfig,
    initial_path,
    mountain_pass,
    path_energy_profile,
    second_difference,
)
from choreo.optimize import Objective
from choreo.spectral import circle_radius_for_winding, restricted_circle_action

TWO_PI = 2.0 * math.pi


def tied_endpoints(cutoff=16):
    R1 = circle_radius_for_winding(3, 1.0, 1.5, -1)
    R2 = circle_radius_for_winding(3, 1.0, 1.5, -2)
    return (
        FourierLoop.circle(R1, -1, dim=2, cutoff=cutoff),
        FourierLoop.circle(R2, -2, dim=2, cutoff=cutoff),
    )


def tied_config(cutoff=16, **kw):
    bulge = FourierLoop.circle(1.0, 1, dim=2, cutoff=cutoff).shift(math.pi / 2)
    defaults = dict(
        nodes=21,
        cutoff=cutoff,
        saddle_tol=1e-6,
        bulge=bulge,
        bulge_amplitude=0.35,
        max_sweeps=800,
    )
    defaults.update(kw)
    return MountainPassConfig(**defaults)


@pytest.fixture(scope="module")
def tied_saddle():
    p = SystemParams(n=3, alpha=1.0, omega=1.5)
    end_a, end_b = tied_endpoints()
    return mountain_pass(end_a, end_b, p, tied_config()), p


# ---------------------------------------------------------------------------
# degenerate and error paths


def test_equal_endpoints_return_immediately():
    p = SystemParams(n=3, alpha=1.0, omega=1.5)
    end_a, _ = tied_endpoints()
    res = mountain_pass(end_a, end_a, p, tied_config(max_sweeps=5))
    assert res.converged
    assert res.sweeps == 0
    assert abs(res.action.total - res.endpoint_actions[0]) < 1e-12
    profile = path_energy_profile(res.path)
    vals = [a for _, a in profile]
    assert max(vals) - min(vals) < 1e-12  # flat profile


def test_noncritical_endpoint_rejected():
    p = SystemParams(n=3, alpha=1.0, omega=1.5)
    end_a, end_b = tied_endpoints()
    bad = FourierLoop.circle(2.0, -1, dim=2, cutoff=16)  # wrong radius
    with pytest.raises(ValueError):
        mountain_pass(bad, end_b, p, tied_config(max_sweeps=5))


def test_initial_linear_path_max_above_endpoints():
    p = SystemParams(n=3, alpha=1.0, omega=1.5)
    end_a, end_b = tied_endpoints()
    cfg = tied_config()
    obj = Objective(p, cutoff=cfg.cutoff)
    nodes = initial_path(obj, obj.pack(end_a), obj.pack(end_b), cfg)
    acts = [obj.value(v) for v in nodes]
    assert max(acts[1:-1]) > acts[0] + 0.5
    assert max(acts[1:-1]) > acts[-1] + 0.5


# ---------------------------------------------------------------------------
# the tied-circles saddle


def test_saddle_between_tied_circles(tied_saddle):
    res, p = tied_saddle
    assert res.converged
    assert res.grad_norm < 1e-6
    assert res.above_endpoints
    d = res.diagnostics
    assert d.min_separation > 0.05  # collisionless
    assert d.radius_rms > 1e-2  # decisively non-circular


def test_saddle_endpoints_unchanged(tied_saddle):
    res, p = tied_saddle
    end_a, end_b = tied_endpoints()
    obj = Objective(p, cutoff=res.path.cutoff)
    assert np.array_equal(res.path.nodes[0], obj.pack(end_a))
    assert np.array_equal(res.path.nodes[-1], obj.pack(end_b))


def test_saddle_max_history_monotone(tied_saddle):
    res, _ = tied_saddle
    hist = res.max_action_history
    for a, b in zip(hist, hist[1:]):
        assert b <= a + 1e-10


def test_saddle_signature(tied_saddle):
    # one negative curvature direction, nonnegative elsewhere
    res, p = tied_saddle
    obj = Objective(p, cutoff=res.path.cutoff)
    x = obj.pack(res.loop)
    from choreo.mountain_pass import _fd_hessian

    H = _fd_hessian(obj, x, 1e-6 * max(1.0, float(np.linalg.norm(x))))
    evals, evecs = np.linalg.eigh(H)
    assert evals[0] < -1e-3
    assert evals[1] > -1e-6  # index exactly one
    neg_dir = np.zeros_like(x)
    neg_dir[np.flatnonzero(obj.mask)] = evecs[:, 0]
    assert second_difference(obj, x, neg_dir) < -1e-3
    rng = np.random.default_rng(0)
    nd = neg_dir / np.linalg.norm(neg_dir)
    for _ in range(20):
        v = rng.standard_normal(x.size)
        v = np.where(obj.mask, v, 0.0)
        v -= (v @ nd) * nd
        assert second_difference(obj, x, v) >= -1e-4


def test_profile_reports_maximum(tied_saddle):
    res, _ = tied_saddle
    im = res.path.max_interior()
    assert 0 < im < len(res.path.nodes) - 1
    assert res.path.actions[im] == max(res.path.actions[1:-1])


# ---------------------------------------------------------------------------
# the symmetric three-dimensional saddle (figure eight)


@pytest.fixture(scope="module")
def eight_saddle():
    K = 20  # residual tail of the smooth saddle decays below 1e-3 by K=20
    p = SystemParams(n=3, d=3, alpha=1.0, omega=0.0)
    from choreo.bounds import bound_chain_minimum

    R = bound_chain_minimum(3, 1.0)["radius"]
    cos = np.zeros((K, 3))
    sin = np.zeros((K, 3))
    sin[0, 1] = R
    cos[0, 2] = R
    end_a = FourierLoop(np.zeros(3), cos, sin)
    cos2 = cos.copy()
    cos2[0, 2] = -R
    end_b = FourierLoop(np.zeros(3), cos2, sin)
    bc = np.zeros((K, 3))
    bs = np.zeros((K, 3))
    bs[1, 0] = 1.0  # sin 2t in the first component, allowed by the group
    bulge = FourierLoop(np.zeros(3), bc, bs)
    cfg = MountainPassConfig(
        nodes=21,
        cutoff=K,
        saddle_tol=1e-6,
        symmetry=EIGHT3D,
        bulge=bulge,
        bulge_amplitude=0.5 * R,
        max_sweeps=800,
    )
    return mountain_pass(end_a, end_b, p, cfg), p


def test_eight_is_planar_saddle(eight_saddle):
    res, p = eight_saddle
    assert res.converged
    assert res.grad_norm < 1e-6
    assert res.above_endpoints
    X = res.loop.sample(96)
    assert np.max(np.abs(X[:, 2])) < 1e-3  # the x3 = 0 outcome is emergent
    assert res.diagnostics.min_separation > 0.05


def test_eight_shape(eight_saddle):
    res, _ = eight_saddle
    X = res.loop.sample(96)
    x1 = X[:, 0]
    assert np.max(np.abs(x1)) > 0.1  # a genuine two-lobed shape, not a circle
    signs = np.sign(x1[np.abs(x1) > 1e-9])
    changes = int(np.sum(signs != np.roll(signs, 1)))
    assert changes == 4  # two sign changes per half-period
    # the first component is pi-periodic by construction of the group
    ts = np.linspace(0, TWO_PI, 33)
    assert np.allclose(
        res.loop.evaluate(ts)[:, 0], res.loop.evaluate(ts + math.pi)[:, 0], atol=1e-9
    )


def test_eight_newton_residual_covanishes(eight_saddle):
    # the smooth well-separated saddle has a small truncation tail
    res, _ = eight_saddle
    assert res.newton_residual < 1e-3


def test_eight_endpoint_action_is_inertial_circle_minimum(eight_saddle):
    res, _ = eight_saddle
    expected = 3.0 ** (2.0 / 3.0) * math.pi
    assert abs(res.endpoint_actions[0] - expected) < 1e-10
    assert abs(res.endpoint_actions[1] - expected) < 1e-10
