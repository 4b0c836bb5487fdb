"""Smoke test of the pydynmmd extension.

Build and install first:
    pip install maturin
    maturin develop -m crates/python/Cargo.toml
"""

import math
import os
import tempfile

import pydynmmd as dm


def check_kernel():
    assert dm.gaussian_kernel([0.0, 0.0], [3.0, 4.0], 5.0) == math.exp(-0.5)
    assert dm.median_heuristic([[0.0], [1.0], [3.0]]) == 2.0
    assert dm.mmd_biased([[1.0], [2.0]], [[1.0], [2.0]], 1.0) == 0.0


def check_tests():
    x = dm.simulate_lti("white-noise", 100, seed=1).states()
    y = dm.simulate_lti("white-noise", 100, seed=2).states()
    r = dm.two_sample_test(x, y, alpha=0.05, n_perm=200, seed=3)
    assert r.threshold > 0.0 and r.alpha == 0.05 and r.n_permutations == 200
    h = dm.independence_test(x, x, n_perm=200, seed=4)
    assert h.reject


def check_mixing():
    trajs = [dm.simulate_lti("white-noise", 30, seed=s) for s in range(60)]
    a_star, stats, thresholds = dm.estimate_mixing(trajs, 10, [1, 2, 3], n_perm=200, seed=5)
    assert a_star == 1 and len(stats) == len(thresholds) == 3
    circle = [dm.simulate_circle(2 * math.pi * k / 40, 60) for k in range(40)]
    p = dm.mixing_profile(circle, 0, 20, list(range(1, 21)), n_repeats=3, n_perm=200, seed=6)
    assert p.non_mixing and p.a_star is None


def check_systems():
    z = dm.stationary_covariance([[0.5]], [[1.0]])
    assert abs(z[0][0] - 1.0 / 0.75) < 1e-10
    lz = dm.simulate_lorenz(t_max=5.0, dt=0.1, seed=1)
    assert len(lz) == 51 and lz.dim == 3
    assert len(dm.features(lz)) == 19


def check_io_and_classify():
    a = [dm.simulate_lti("regime-a", 300, seed=s).with_label("a") for s in range(5)]
    b = [dm.simulate_lti("regime-b", 300, seed=100 + s).with_label("b") for s in range(5)]
    q = dm.simulate_lti("regime-b", 300, seed=999)
    label, nearest, score = dm.nearest_mmd(q, a + b, a_star=3, count=50, start=50)
    assert label == "b" and nearest.startswith("regime-b") and score >= 0.0
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "q.csv")
        q.write(path)
        back = dm.Trajectory.read(path)
        assert back.states() == q.states() and back.id == q.id


if __name__ == "__main__":
    check_kernel()
    check_tests()
    check_mixing()
    check_systems()
    check_io_and_classify()
    print("pydynmmd smoke test passed")
