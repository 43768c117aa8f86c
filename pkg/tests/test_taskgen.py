import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viewfinder.taskgen import (
    Design, TechniqueKind, index_of_difficulty, layout_targets, make_conditions, target_order,
)

PAPER_IDS = [2.27, 3.11, 3.64, 4.58]

odd_n = st.integers(2, 30).map(lambda k: 2 * k + 1)


class TestLayout:
    def test_default_layout(self):
        lay = layout_targets(11, 1.0, 0.2619, 5.0)
        assert lay.centers.shape == (11, 3)
        np.testing.assert_allclose(lay.centers[:, 2], 5.0)
        np.testing.assert_allclose(np.linalg.norm(lay.centers_2d(), axis=1), 0.5, atol=1e-12)

    def test_radius_is_half_diameter(self):
        lay = layout_targets(11, 2.0, 0.0873, 5.0)
        assert lay.radius == 1.0
        np.testing.assert_allclose(np.linalg.norm(lay.centers_2d(), axis=1), 1.0, atol=1e-12)

    def test_five_targets_72_degrees_apart(self):
        c = layout_targets(5, 1.0, 0.1, 5.0).centers_2d()
        ang = np.degrees(np.arctan2(c[:, 1], c[:, 0]))
        np.testing.assert_allclose(np.diff(ang) % 360, 360 - 72, atol=1e-9)

    def test_target_zero_at_twelve_then_clockwise(self):
        c = layout_targets(11, 1.0, 0.1, 5.0).centers_2d()
        np.testing.assert_allclose(c[0], [0, 0.5], atol=1e-12)
        assert c[1, 0] > 0  # next target is to the right

    @given(odd_n, st.floats(0.1, 5))
    def test_centroid_is_layout_center(self, n, d):
        lay = layout_targets(n, d, 0.05, 5.0)
        np.testing.assert_allclose(lay.centers.mean(axis=0), lay.center, atol=1e-9)

    @pytest.mark.parametrize("n,d,w,z", [(4, 1, .1, 5), (11, 0, .1, 5), (11, 1, -1, 5), (11, 1, .1, 0)])
    def test_invalid(self, n, d, w, z):
        with pytest.raises(ValueError):
            layout_targets(n, d, w, z)


class TestOrder:
    def test_eleven(self):
        assert target_order(11) == [0, 6, 1, 7, 2, 8, 3, 9, 4, 10, 5]

    def test_five(self):
        assert target_order(5) == [0, 3, 1, 4, 2]

    @given(odd_n)
    def test_permutation(self, n):
        assert sorted(target_order(n)) == list(range(n))

    @given(odd_n, st.floats(0.1, 5))
    def test_all_steps_equal(self, n, d):
        lay = layout_targets(n, d, 0.05, 5.0)
        order = target_order(n)
        c = lay.centers_2d()
        steps = np.linalg.norm(c[order] - c[np.roll(order, 1)], axis=1)
        np.testing.assert_allclose(steps, lay.step_length, rtol=1e-12)

    def test_eleven_step_ratio(self):
        assert layout_targets(11, 1.0, 0.1).step_length == pytest.approx(0.98982, abs=1e-5)


class TestIndexOfDifficulty:
    @pytest.mark.parametrize("D,W,expect", [(1.0, 0.2619, 2.27), (2.0, 0.2619, 3.11),
                                            (1.0, 0.0873, 3.64), (2.0, 0.0873, 4.58)])
    def test_paper_ids(self, D, W, expect):
        assert index_of_difficulty(D, W) == pytest.approx(expect, abs=0.005)

    def test_unit(self):
        assert index_of_difficulty(1.0, 1.0) == 1.0

    @given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 100))
    def test_scale_invariant(self, D, W, k):
        assert index_of_difficulty(k * D, k * W) == pytest.approx(index_of_difficulty(D, W), rel=1e-12)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            index_of_difficulty(1.0, 0.0)


class TestConditions:
    def test_default_design(self):
        conds = make_conditions()
        assert len(conds) == 12
        ids = sorted({round(c.id_nominal, 2) for c in conds})
        assert ids == PAPER_IDS
        assert len({c.key for c in conds}) == 12

    def test_single_technique(self):
        conds = make_conditions(Design(techniques=(TechniqueKind.Raycasting,)))
        assert len(conds) == 4
        assert all(c.technique is TechniqueKind.Raycasting for c in conds)

    def test_small_short_id(self):
        c = next(c for c in make_conditions() if c.size_class == "Small" and c.distance_class == "Short")
        assert c.id_nominal == pytest.approx(3.64, abs=0.005)
        assert c.id_nominal == pytest.approx(math.log2(1 / 0.0873 + 1), abs=1e-12)

    def test_technique_flags(self):
        assert not TechniqueKind.Raycasting.is_viewfinder
        assert TechniqueKind.ViewfinderRay.pinch_triggered
        assert not TechniqueKind.ViewfinderTouch.pinch_triggered
