import numpy as np
import pytest
from numpy.testing import assert_allclose

from beamsep import wpe
from beamsep.wpe import WpeConfig


def ar_reverb(rng, bins=64, frames=400, coeff=0.8, lag=3, density=0.05):
    """Sparse complex impulses run through x[f] = s[f] + coeff * x[f - lag]."""
    s = np.zeros((bins, frames), dtype=complex)
    mask = rng.random((bins, frames)) < density
    s[mask] = rng.normal(size=mask.sum()) + 1j * rng.normal(size=mask.sum())
    x = s.copy()
    for f in range(lag, frames):
        x[:, f] += coeff * x[:, f - lag]
    return s, x


class TestDelayedStack:
    def test_hand_example(self):
        x = np.arange(1, 6, dtype=complex)[None, :]  # one bin, frames 1..5
        st = wpe.delayed_stack(x, taps=2, delay=2)
        assert st.shape == (1, 2, 5)
        assert_allclose(st[0, 0], [0, 0, 1, 2, 3])  # f-2
        assert_allclose(st[0, 1], [0, 0, 0, 1, 2])  # f-3

    def test_taps_beyond_start_are_zero(self):
        x = np.ones((2, 4), dtype=complex)
        st = wpe.delayed_stack(x, taps=6, delay=1)
        assert_allclose(st[:, 4:, :], 0.0)  # delays 5,6 exceed the signal


class TestWpe:
    def test_ar_tail_suppressed_at_least_6db(self):
        rng = np.random.default_rng(0)
        s, x = ar_reverb(rng)
        d = wpe.wpe_single(x, WpeConfig(taps=10, delay=3, iterations=3))
        err_before = np.sum(np.abs(x - s) ** 2)
        err_after = np.sum(np.abs(d - s) ** 2)
        assert 10 * np.log10(err_before / err_after) >= 6.0

    def test_more_iterations_do_not_hurt(self):
        rng = np.random.default_rng(1)
        s, x = ar_reverb(rng)
        errs = []
        for iters in (1, 3):
            d = wpe.wpe_single(x, WpeConfig(iterations=iters))
            errs.append(np.sum(np.abs(d - s) ** 2))
        assert errs[1] <= errs[0] * 1.05

    def test_anechoic_nearly_untouched(self):
        # white per-bin trajectories have no linear structure at delay >= 3:
        # energy must change by less than 5%
        rng = np.random.default_rng(2)
        x = rng.normal(size=(64, 500)) + 1j * rng.normal(size=(64, 500))
        d = wpe.wpe_single(x)
        ratio = np.sum(np.abs(d) ** 2) / np.sum(np.abs(x) ** 2)
        assert abs(ratio - 1.0) < 0.05

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        _, x = ar_reverb(rng, bins=8, frames=100)
        a = wpe.wpe_single(x)
        b = wpe.wpe_single(x)
        assert np.array_equal(a, b)

    def test_all_zero_input_stays_zero(self):
        x = np.zeros((4, 64), dtype=complex)
        d = wpe.wpe_single(x)
        assert np.all(np.isfinite(d))
        assert_allclose(d, 0.0)

    def test_too_few_frames_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            wpe.wpe_single(np.ones((4, 13), dtype=complex), WpeConfig(taps=10, delay=3))

    def test_magnitude_input_rejected(self):
        with pytest.raises(ValueError, match="complex"):
            wpe.wpe_single(np.ones((4, 100)))

    def test_pair_processes_independently(self):
        rng = np.random.default_rng(4)
        _, x0 = ar_reverb(rng, bins=8, frames=120)
        _, x1 = ar_reverb(rng, bins=8, frames=120)
        d0, d1 = wpe.wpe_pair(x0, x1)
        assert np.array_equal(d0, wpe.wpe_single(x0))
        assert np.array_equal(d1, wpe.wpe_single(x1))

    def test_config_validation(self):
        with pytest.raises(ValueError, match="delay"):
            WpeConfig(delay=0)
        with pytest.raises(ValueError, match="taps"):
            WpeConfig(taps=0)
