import json
import math

import numpy as np
import pytest

from onlinemg.game import random_game
from onlinemg.matrix import solve_zero_sum
from onlinemg.qol import QOLearner, QolHyper, QolState, qol_act, qol_observe


def fresh(sizes_S=(2, 2, 1), sizes_A=(2, 2), sizes_B=(3, 3)):
    return QolState.fresh(list(sizes_S), list(sizes_A), list(sizes_B))


class TestInit:
    def test_tables(self):
        st = fresh()
        assert st.Q[0].shape == (2, 2, 3) and np.all(st.Q[0] == 2.0)
        assert np.all(st.V[0] == 2.0) and st.V[2].tolist() == [0.0]
        assert np.all(st.mu[1] == 0.5) and np.allclose(st.nu[1], 1 / 3)

    def test_memory_linear_in_B(self):
        sizes = [fresh(sizes_B=(B, B)).nbytes() for B in (1, 2, 4, 8)]
        diffs = np.diff(sizes) / np.diff([1, 2, 4, 8])
        assert np.allclose(diffs, diffs[0]) and diffs[0] > 0


class TestAct:
    def test_uniform_and_point_mass(self):
        st = fresh(sizes_A=(3, 3))
        rng = np.random.default_rng(0)
        n = 10**5
        counts = np.bincount([qol_act(st, 0, 0, rng) for _ in range(n)], minlength=3)
        assert np.all(np.abs(counts - n / 3) <= 3 * math.sqrt(n * 2 / 9))
        st.mu[0][1] = [0, 0, 1]
        assert {qol_act(st, 0, 1, rng) for _ in range(100)} == {2}


class TestObserve:
    def test_first_visit(self):
        hp = QolHyper(2, 2, 2, 100)
        st = fresh()
        qol_observe(st, hp, 1, 0, 1, 2, 0.3, 0)
        assert st.Q[1][0, 1, 2] == pytest.approx(0.3 + 0.0 + 2 * math.sqrt(8 * hp.iota), rel=1e-15)
        assert st.N[1][0].sum() == 1 and st.N[1][0, 1, 2] == 1
        # only that entry changed
        mask = np.ones((2, 3), bool)
        mask[1, 2] = False
        assert np.all(st.Q[1][0][mask] == 2.0)

    def test_single_action_degenerates(self):
        hp = QolHyper(1, 1, 1, 10)
        st = QolState.fresh([1, 1], [1], [1])
        qol_observe(st, hp, 0, 0, 0, 0, 0.6, 0)
        assert st.V[0][0] == st.Q[0][0, 0, 0]

    def test_value_is_certified_slice_value(self):
        g = random_game(2, 2, 3, 3, np.random.default_rng(0))
        learner = QOLearner.for_game(g, 500)
        rng = np.random.default_rng(1)
        for _ in range(300):
            s = 0
            for h in range(2):
                a = learner.act(h, s, rng)
                b = int(rng.integers(3))
                r, s_next = g.step_from_uniforms(h, s, a, b, rng.random(), rng.random())
                learner.observe(h, s, a, r, s_next, b=b)
                tight = solve_zero_sum(learner.state.Q[h][s], tol=1e-12)
                assert learner.state.V[h][s] == pytest.approx(tight.value, abs=2e-6)
                s = s_next

    def test_missing_b_is_an_error(self):
        hp = QolHyper(2, 2, 2, 10)
        with pytest.raises(ValueError, match="informed"):
            qol_observe(fresh(), hp, 0, 0, 0, None, 0.1, 0)
        learner = QOLearner(*([2, 2, 1], [2, 2], [2, 2]), hp)
        with pytest.raises(ValueError, match="informed"):
            learner.observe(0, 0, 0, 0.1, 0)

    def test_snapshot_json(self):
        g = random_game(2, 2, 2, 2, np.random.default_rng(0))
        learner = QOLearner.for_game(g, 10)
        snap = json.loads(learner.snapshot_json())
        assert set(snap["state"]) == {"Q", "N", "V", "mu", "nu"}
        assert learner.informed
