import os
import subprocess
import sys

import numpy as np
import pytest

from manetq import _accel


def points(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1000, n), rng.uniform(0, 1000, n)


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
def test_numba_matches_numpy():
    for seed in range(5):
        x, y = points(60, seed)
        active = np.random.default_rng(seed).random(60) > 0.2
        a = _accel.adjacency_numba(x, y, active, 250.0)
        b = _accel.adjacency_numpy(x, y, active, 250.0)
        assert np.array_equal(a, b)
        assert _accel.count_pairs_numba(x, y, 500.0) == _accel.count_pairs_numpy(x, y, 500.0)
    ia = np.random.default_rng(1).exponential(2.0, 5000)
    s = np.random.default_rng(2).exponential(1.0, 5000)
    assert np.array_equal(_accel.lindley_numba(ia, s), _accel.lindley_numpy(ia, s))


def test_adjacency_properties():
    x, y = points(40, 7)
    adj = _accel.adjacency(x, y, np.ones(40, dtype=bool), 300.0)
    assert np.array_equal(adj, adj.T)
    assert not adj.diagonal().any()


def test_env_flag_selects_numpy():
    code = "from manetq import _accel; print(_accel.BACKEND)"
    env = dict(os.environ, MANETQ_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.strip()
    assert out == "numpy"


def test_simulation_identical_on_both_backends(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nodes: 15\nsim_time: 15\nprotocol: nfpqr\n")
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, MANETQ_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-m", "manetq", "simulate", str(cfg)],
                                   env=env, capture_output=True, text=True, check=True).stdout)
    assert outs[0] == outs[1]
