import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ed2lab.replay import (
    EreState,
    ReplayBuffer,
    adapted_eta,
    ere_eta_update,
    ere_min_window,
    ere_sample,
    ere_window,
)


def filled(n, capacity=None, **kw):
    buf = ReplayBuffer(capacity or n, 2, 1, **kw)
    for i in range(n):
        buf.store([i, -i], [0.5 * i], float(i), [i + 1, -i - 1], i % 7 == 0)
    return buf


def test_ring_overwrites_oldest():
    buf = filled(11, capacity=10)
    assert len(buf) == 10
    assert 0.0 not in buf.rew and 10.0 in buf.rew


def test_store_rejects_nan():
    buf = ReplayBuffer(4, 2, 1)
    with pytest.raises(ValueError):
        buf.store([0, np.nan], [0], 0.0, [0, 0], False)
    with pytest.raises(ValueError):
        buf.store([0, 0], [0], float("inf"), [0, 0], False)


def test_masks_absent_without_bootstrap():
    assert filled(5).gather(np.arange(5)).mask is None


def test_degenerate_inclusion_probability():
    buf = filled(50, ensemble_size=3, mask_prob=1.0, rng=np.random.default_rng(0))
    assert buf.masks[:50].all()


def test_bootstrap_inclusion_fraction():
    buf = ReplayBuffer(100_000, 1, 1, ensemble_size=5, mask_prob=0.5, rng=np.random.default_rng(1))
    zero = np.zeros(1)
    for _ in range(100_000):
        buf.store(zero, zero, 0.0, zero, False)
    frac = buf.masks.mean(axis=0)
    assert np.all(np.abs(frac - 0.5) < 0.01)


def test_round_trip_bit_identical():
    rng = np.random.default_rng(2)
    buf = ReplayBuffer(10, 3, 2)
    rows = [(rng.normal(size=3), rng.normal(size=2), rng.normal(), rng.normal(size=3), bool(i % 2)) for i in range(10)]
    for r in rows:
        buf.store(*r)
    batch = buf.gather(np.arange(10))
    for i, (s, a, r, s2, d) in enumerate(rows):
        assert batch.obs[i].tobytes() == s.tobytes()
        assert batch.act[i].tobytes() == a.tobytes()
        assert batch.rew[i] == r and batch.done[i] == float(d)
        assert batch.next_obs[i].tobytes() == s2.tobytes()


# -- ere_window ----------------------------------------------------------------


def test_unit_eta_keeps_whole_buffer():
    assert all(ere_window(10**6, 1.0, b, 1000) == 10**6 for b in range(1, 1001))


def test_window_high_precision_values():
    exact_end = mpmath.mpf(10) ** 6 * mpmath.mpf("0.995") ** 1000
    exact_mid = mpmath.mpf(10) ** 6 * mpmath.mpf("0.995") ** 500
    assert ere_window(10**6, 0.995, 1000, 1000) == int(mpmath.nint(exact_end)) == 6654
    assert ere_window(10**6, 0.995, 500, 1000) == int(mpmath.nint(exact_mid)) == 81572


def test_window_floor_and_ceiling():
    assert ere_window(1000, 0.5, 10, 10, c_min=256) == 256
    assert ere_window(100, 0.5, 10, 10, c_min=256) == 100
    assert ere_min_window(256, 10**6) == 5000
    assert ere_min_window(256, 10**5) == 500


def test_window_rejects_bad_arguments():
    with pytest.raises(ValueError):
        ere_window(100, 0.9, 0, 10)
    with pytest.raises(ValueError):
        ere_window(100, 1.5, 1, 10)


@given(st.integers(1, 10**6), st.floats(0.5, 0.9999), st.integers(1, 2000))
@settings(max_examples=60)
def test_window_non_increasing_in_b(size, eta, updates):
    windows = [ere_window(size, eta, b, updates) for b in range(1, updates + 1, max(1, updates // 50))]
    assert all(x >= y for x, y in zip(windows, windows[1:]))


# -- ere_sample ----------------------------------------------------------------


def test_full_window_is_uniform():
    buf = filled(200)
    rng = np.random.default_rng(3)
    idx = np.concatenate([ere_sample(buf, 10_000, 256, rng).index for _ in range(100)])
    counts = np.bincount(idx, minlength=200)
    assert stats.chisquare(counts).pvalue > 0.01


def test_single_point_window_returns_newest():
    buf = filled(30, capacity=20)
    batch = ere_sample(buf, 1, 64, np.random.default_rng(0))
    assert np.all(batch.rew == 29.0)


def test_half_window_never_touches_older_half():
    buf = filled(1000)
    rng = np.random.default_rng(4)
    rewards = np.concatenate([ere_sample(buf, 500, 100, rng).rew for _ in range(100)])
    assert rewards.size == 10_000 and rewards.min() >= 500


def test_sampling_empty_buffer_rejected():
    with pytest.raises(ValueError):
        ere_sample(ReplayBuffer(5, 1, 1), 5, 2, np.random.default_rng(0))


# -- eta adaptation ------------------------------------------------------------


def test_adapted_eta_cases():
    assert adapted_eta(0.995, 3.0, 3.0) == 0.995
    assert adapted_eta(0.995, -1.0, 3.0) == 1.0
    assert adapted_eta(0.995, 0.0, 3.0) == 1.0
    assert adapted_eta(0.995, 1.5, 3.0) == pytest.approx(0.9975, abs=1e-15)
    assert adapted_eta(0.995, -5.0, 0.0) == 0.995


def test_eta_update_constants_and_first_return():
    state = ere_eta_update(EreState.initial(0.995), -100.0, 200, 100_000)
    assert state.lambda_prev == pytest.approx(200 / 50_000)
    assert state.lambda_recent == pytest.approx(10 * state.lambda_prev)
    assert state.r_recent == state.r_prev == -100.0
    assert state.eta == 0.995


def test_eta_update_tracks_improvement():
    state = EreState.initial(0.99)
    ere_eta_update(state, 0.0, 10, 200)
    ere_eta_update(state, 10.0, 10, 200)
    # lambda_prev = 0.1, lambda_recent = 1.0 -> R_recent = 10, R_prev = 1, I = 9 = I_max
    assert state.r_recent == pytest.approx(10.0) and state.r_prev == pytest.approx(1.0)
    assert state.i_max == pytest.approx(9.0) and state.eta == pytest.approx(0.99)
    ere_eta_update(state, 10.0, 10, 200)
    # R_prev = 1.9, I = 8.1 -> ratio 0.9
    assert state.eta == pytest.approx(0.99 * 0.9 + 0.1)


@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=200), st.floats(0.9, 0.9999))
@settings(max_examples=50)
def test_eta_stays_in_range(returns, eta0):
    state = EreState.initial(eta0)
    for r in returns:
        ere_eta_update(state, r, 50, 10_000)
        assert eta0 <= state.eta <= 1.0
