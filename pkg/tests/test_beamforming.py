import numpy as np
import pytest
from numpy.testing import assert_allclose

from beamsep import beamforming as bf
from beamsep.beamforming import BeamformerConfig, KINECT_OFFSETS


class TestSteeringDelays:
    def test_endfire_outer_mic(self):
        # 0.113 m at 90 degrees: 0.113/343 s -> 5.2712 samples -> 5
        cfg = BeamformerConfig(look_aoi=np.pi / 2)
        d = bf.steering_delays(cfg)
        assert d.seconds[3] == pytest.approx(0.113 / 343.0)
        assert d.samples[3] == 5
        assert d.samples[0] == -5

    def test_thirty_degrees(self):
        # 0.113 * sin(30deg) / 343 * 16000 = 2.635 -> 3 samples
        cfg = BeamformerConfig(look_aoi=np.deg2rad(30.0))
        d = bf.steering_delays(cfg)
        assert d.samples[3] == 3

    def test_broadside_all_zero(self):
        d = bf.steering_delays(BeamformerConfig(look_aoi=0.0))
        assert_allclose(d.seconds, 0.0)
        assert np.all(d.samples == 0)

    def test_look_angle_validated(self):
        with pytest.raises(ValueError, match="look angle"):
            BeamformerConfig(look_aoi=2.0)


class TestDelayAndSum:
    def test_zero_delays_is_plain_sum(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4, 100))
        assert_allclose(bf.delay_and_sum(x, np.zeros(4, int)), x.sum(axis=0))

    def test_integer_shift(self):
        x = np.zeros((2, 10))
        x[0, 3] = 1.0
        x[1, 5] = 1.0
        # delay channel 0 by +2: its impulse lands at 5, adding to channel 1's
        out = bf.delay_and_sum(x, [2, 0])
        assert out[5] == 2.0
        assert out.sum() == 2.0

    def test_negative_shift_drops_head(self):
        x = np.zeros((1, 6))
        x[0, 0] = 1.0
        out = bf.delay_and_sum(x, [-1])
        assert_allclose(out, 0.0)  # impulse shifted before t=0 is dropped

    def test_output_length_matches_input(self):
        x = np.ones((3, 50))
        assert bf.delay_and_sum(x, [1, -2, 0]).size == 50

    def test_delay_count_mismatch(self):
        with pytest.raises(ValueError, match="delays"):
            bf.delay_and_sum(np.ones((3, 10)), [0, 1])

    def test_coherent_alignment_recovers_m_times_signal(self):
        # signal arriving with known per-channel integer advances: steering
        # by those delays re-aligns everything to a 4x coherent sum
        rng = np.random.default_rng(1)
        s = rng.normal(size=400)
        adv = np.array([3, -1, 0, 2])
        chans = np.zeros((4, 420))
        for m, a in enumerate(adv):
            chans[m, 10 - a : 410 - a] = s
        out = bf.delay_and_sum(chans, adv)
        assert_allclose(out[10 + 3 : 410 - 3], 4.0 * s[3:-3], rtol=1e-12)


class TestArrayGain:
    def test_coherent_target_in_independent_noise_gains_6db(self):
        # coherent signal + independent noise across M=4 channels:
        # expected SNR improvement 10*log10(M) = 6.02 dB
        rng = np.random.default_rng(42)
        gains = []
        for _ in range(50):
            s = rng.normal(size=16000)
            noise = rng.normal(size=(4, 16000))
            chans = s[None, :] + noise
            out = bf.delay_and_sum(chans, np.zeros(4, int))
            snr_in = np.mean(s ** 2) / np.mean(noise ** 2)
            out_noise = noise.sum(axis=0)
            snr_out = np.mean((4.0 * s) ** 2) / np.mean(out_noise ** 2)
            assert_allclose(out, 4.0 * s + out_noise, atol=1e-12)
            gains.append(10 * np.log10(snr_out / snr_in))
        assert np.mean(gains) == pytest.approx(10 * np.log10(4.0), abs=0.5)


class TestNarrowbandGain:
    def test_unity_at_look_direction(self):
        cfg = BeamformerConfig(look_aoi=np.deg2rad(45.0))
        for f in [200.0, 1000.0, 4000.0, 7900.0]:
            assert bf.narrowband_gain(cfg, np.deg2rad(45.0), f) == pytest.approx(1.0)

    def test_below_unity_off_look(self):
        cfg = BeamformerConfig(look_aoi=0.0)
        g = bf.narrowband_gain(cfg, np.deg2rad(60.0), 4000.0)
        assert g < 1.0

    def test_two_element_null(self):
        # two mics half a wavelength apart steer a perfect null:
        # phase difference pi when (sin(src) - sin(look)) * d * f / c = 1/2
        d = 0.1
        f = 343.0 / (2 * d)  # half wavelength across the aperture at endfire
        cfg = BeamformerConfig(mic_offsets=(0.0, d), look_aoi=0.0)
        g = bf.narrowband_gain(cfg, np.pi / 2, f)
        assert g == pytest.approx(0.0, abs=1e-12)

    def test_frequency_range_validated(self):
        cfg = BeamformerConfig()
        with pytest.raises(ValueError, match="Hz"):
            bf.narrowband_gain(cfg, 0.0, 0.0)
        with pytest.raises(ValueError, match="Hz"):
            bf.narrowband_gain(cfg, 0.0, 8000.0)

    def test_table_shape_and_order(self):
        cfg = BeamformerConfig()
        rows = bf.beampattern_table(cfg, [-90, 0, 90], [500.0, 1000.0])
        assert len(rows) == 6
        assert rows[0][:2] == (-90.0, 500.0)
        assert rows[1][:2] == (-90.0, 1000.0)
        assert rows[2][:2] == (0.0, 500.0)
        # broadside look at broadside source: unity
        assert rows[2][2] == pytest.approx(1.0)


def test_kinect_offsets_are_asymmetric():
    # deliberate: the hardware layout is not symmetric about the reference
    assert sum(KINECT_OFFSETS) != 0.0
    assert KINECT_OFFSETS == (-0.113, 0.036, 0.076, 0.113)
