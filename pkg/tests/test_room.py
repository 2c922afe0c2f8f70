import numpy as np
import pytest
from numpy.testing import assert_allclose

from beamsep import room as rm
from beamsep.room import ArrayGeometry, RoomSpec, SceneGeometry, ScenePriors


def _room(max_order, absorption=0.35):
    return RoomSpec(height=2.5, width=6.0, depth=4.0, absorption=absorption, max_order=max_order)


class TestImageEnumeration:
    # analytic lattice count: per axis 1 image with 0 reflections, 2 with any
    # count >= 1; total = sum over rx+ry+rz <= N of the per-axis products
    def test_count_order_0(self):
        pos, cnt = rm.enumerate_images(_room(0), (1.0, 2.0, 1.0))
        assert pos.shape == (1, 3)
        assert cnt.tolist() == [0]
        assert_allclose(pos[0], [1.0, 2.0, 1.0])

    def test_count_order_1(self):
        # direct + one reflection through each of the 6 walls
        pos, cnt = rm.enumerate_images(_room(1), (1.0, 2.0, 1.0))
        assert pos.shape == (7, 3)
        assert sorted(cnt.tolist()) == [0, 1, 1, 1, 1, 1, 1]

    def test_count_order_2(self):
        # 1 direct + 6 first order + (6 axis-doubled + 12 axis-pair) second order
        pos, cnt = rm.enumerate_images(_room(2), (1.0, 2.0, 1.0))
        assert pos.shape == (25, 3)
        assert np.sum(cnt == 2) == 18

    def test_first_order_positions(self):
        src = np.array([1.0, 2.0, 1.5])
        pos, cnt = rm.enumerate_images(_room(1), src)
        first = pos[cnt == 1]
        expected = np.array(
            [
                [-1.0, 2.0, 1.5],   # x = 0 wall
                [11.0, 2.0, 1.5],   # x = 6 wall
                [1.0, -2.0, 1.5],   # y = 0 wall
                [1.0, 6.0, 1.5],    # y = 4 wall
                [1.0, 2.0, -1.5],   # z = 0 wall
                [1.0, 2.0, 3.5],    # z = 2.5 wall
            ]
        )
        got = sorted(map(tuple, first.round(9)))
        want = sorted(map(tuple, expected))
        assert got == want


class TestImageSourceRir:
    def test_direct_path_only(self):
        src = (1.0, 2.0, 1.2)
        mic = (3.0, 1.0, 1.2)
        h = rm.image_source_rir(_room(0), src, mic)
        d = np.linalg.norm(np.subtract(src, mic))
        tap = int(round(d / 343.0 * 16000))
        assert h.size == tap + 1
        assert np.count_nonzero(h) == 1
        assert h[tap] == pytest.approx(1.0 / (4 * np.pi * d))

    def test_first_order_matches_hand_mirrors(self):
        src = np.array([1.0, 2.0, 1.2])
        mic = np.array([3.0, 1.0, 1.2])
        absorption = 0.35
        h = rm.image_source_rir(_room(1, absorption), src, mic)
        # independent construction: direct + six explicit mirror sources
        mirrors = [src.copy() for _ in range(6)]
        mirrors[0][0] = -src[0]
        mirrors[1][0] = 2 * 6.0 - src[0]
        mirrors[2][1] = -src[1]
        mirrors[3][1] = 2 * 4.0 - src[1]
        mirrors[4][2] = -src[2]
        mirrors[5][2] = 2 * 2.5 - src[2]
        ref = np.zeros_like(h)
        for p, r in [(src, 0)] + [(m, 1) for m in mirrors]:
            d = np.linalg.norm(p - mic)
            ref[int(round(d / 343.0 * 16000))] += (1 - absorption) ** (r / 2) / (4 * np.pi * d)
        assert_allclose(h, ref, rtol=1e-12)

    def test_direct_tap_timing_over_random_scenes(self):
        # direct-path arrival equals round(distance / c * fs) in 100 scenes
        rng = np.random.default_rng(11)
        for trial in range(100):
            scene = rm.sample_scene(rng)
            mic = scene.array.mic_positions()[trial % 4]
            d = np.linalg.norm(np.asarray(scene.src_speech) - mic)
            h = rm.image_source_rir(scene.room, scene.src_speech, mic)
            assert np.flatnonzero(h)[0] == int(np.round(d / 343.0 * 16000))

    def test_energy_decreases_with_absorption(self):
        src, mic = (1.0, 2.0, 1.2), (3.0, 1.0, 1.3)
        energies = [
            np.sum(rm.image_source_rir(_room(8, a), src, mic) ** 2)
            for a in (0.1, 0.3, 0.5, 0.9)
        ]
        assert all(e1 > e2 for e1, e2 in zip(energies, energies[1:]))

    def test_full_absorption_keeps_only_direct(self):
        src, mic = (1.0, 2.0, 1.2), (3.0, 1.0, 1.3)
        h = rm.image_source_rir(_room(6, 1.0), src, mic)
        assert np.count_nonzero(h) == 1

    def test_outside_room_rejected(self):
        with pytest.raises(ValueError, match="inside"):
            rm.image_source_rir(_room(1), (7.0, 2.0, 1.0), (3.0, 1.0, 1.0))
        with pytest.raises(ValueError, match="inside"):
            rm.image_source_rir(_room(1), (1.0, 2.0, 1.0), (3.0, 0.0, 1.0))

    def test_coincident_points_rejected(self):
        with pytest.raises(ValueError, match="coincide"):
            rm.image_source_rir(_room(1), (1.0, 2.0, 1.0), (1.0, 2.0, 1.0))

    def test_absorption_range_validated(self):
        with pytest.raises(ValueError, match="absorption"):
            RoomSpec(absorption=0.0)
        with pytest.raises(ValueError, match="absorption"):
            RoomSpec(absorption=1.2)


class TestSceneSampling:
    def test_invariants_over_200_draws(self):
        rng = np.random.default_rng(5)
        priors = ScenePriors()
        for _ in range(200):
            s = rm.sample_scene(rng, priors)
            dims = s.room.dims
            for nominal, actual in [
                (6.0, s.room.width),
                (6.0, s.room.depth),
                (2.5, s.room.height),
            ]:
                assert 0.8 * nominal <= actual <= 1.2 * nominal
            assert 1.6 <= s.dist_speech <= 2.4
            assert 15.0 <= np.rad2deg(s.aoi_speech) <= 75.0
            assert -75.0 <= np.rad2deg(s.aoi_noise) <= -15.0
            for point in [s.src_speech, s.src_noise, *s.array.mic_positions()]:
                p = np.asarray(point)
                assert np.all(p >= 1.0 - 1e-9) and np.all(p <= dims - 1.0 + 1e-9)

    def test_deterministic_given_seed(self):
        a = rm.sample_scene(123)
        b = rm.sample_scene(123)
        assert a.to_dict() == b.to_dict()

    def test_impossible_constraints_error(self):
        priors = ScenePriors(clearance=3.5, max_rejects=50)
        with pytest.raises(RuntimeError, match="reject"):
            rm.sample_scene(0, priors)

    def test_mean_scene_is_nominal(self):
        s = rm.mean_scene()
        assert (s.room.width, s.room.depth, s.room.height) == (6.0, 6.0, 2.5)
        assert_allclose(s.array.center, [3.0, 3.0, 1.25])
        assert np.rad2deg(s.aoi_speech) == pytest.approx(45.0)
        assert np.rad2deg(s.aoi_noise) == pytest.approx(-45.0)
        assert s.dist_speech == s.dist_noise == 2.0
        # placement matches angle/distance bookkeeping
        d = np.linalg.norm(np.asarray(s.src_speech) - np.asarray(s.array.center))
        assert d == pytest.approx(2.0)


class TestQuadruple:
    def test_speech_look_aligns_direct_taps(self):
        # anechoic mean scene: h00 piles the four direct taps onto (nearly)
        # one sample, so the 3-tap neighborhood around the peak holds the
        # whole sum and the peak beats any single mic's amplitude
        priors = ScenePriors(max_order=0)
        scene = rm.mean_scene(priors)
        quad = rm.render_quadruple(scene)
        mics = scene.array.mic_positions()
        amps = np.array(
            [
                1.0 / (4 * np.pi * np.linalg.norm(np.asarray(scene.src_speech) - m))
                for m in mics
            ]
        )
        k = int(np.argmax(quad.h00))
        neighborhood = quad.h00[max(0, k - 1) : k + 2].sum()
        assert neighborhood == pytest.approx(amps.sum(), rel=1e-6)
        assert quad.h00.max() >= 1.9 * amps.max()

    def test_wrong_look_spreads_taps(self):
        priors = ScenePriors(max_order=0)
        scene = rm.mean_scene(priors)
        quad = rm.render_quadruple(scene)
        # steering at the noise side leaves the speech taps misaligned
        assert quad.h10.max() < 0.6 * quad.h00.max()

    def test_all_four_nonzero_and_reverberant_tails(self):
        scene = rm.mean_scene()
        quad = rm.render_quadruple(scene)
        for h in (quad.h00, quad.h01, quad.h10, quad.h11):
            assert np.any(h != 0.0)
            # energy beyond 50 ms after the direct tap: actual reverberation
            first = np.flatnonzero(h)[0]
            assert np.sum(h[first + 800 :] ** 2) > 0.0

    def test_shift_sum_extends_tail(self):
        rirs = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        out = rm.shift_sum(rirs, [0, 2])
        assert_allclose(out, [1.0, 2.0, 7.0, 5.0, 6.0])

    def test_shift_sum_negative_delay(self):
        rirs = np.array([[0.0, 1.0, 2.0]])
        assert_allclose(rm.shift_sum(rirs, [-1]), [1.0, 2.0, 0.0])
