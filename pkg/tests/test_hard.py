import itertools

import numpy as np
import pytest

from onlinemg.hard import (
    HardInstanceSpec,
    bandit_reduction_run,
    combination_lock_mdp,
    deviating_lock_policy,
    direct_atoms,
    epsilon_hk,
    hard_markov_game,
    optimal_lock_policy,
    reduction_atoms,
    successor,
)
from onlinemg.oracle import evaluate_pair, minimax_values
from onlinemg.vol import UniformLearner

bits = lambda H: list(itertools.product((0, 1), repeat=H))  # noqa: E731


def induced(g, nu):
    """Collapse the min player into the dynamics: (P, r) with a single b."""
    P = [np.einsum("sab,sabt->sat", np.broadcast_to(nu[h][:, None, :], g.r[h].shape), g.P[h])[:, :, None, :] for h in range(g.H)]
    r = [np.einsum("sab,sab->sa", np.broadcast_to(nu[h][:, None, :], g.r[h].shape), g.r[h])[:, :, None] for h in range(g.H)]
    return P, r


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            HardInstanceSpec(2, (0, 1, 1), (0, 1), 0.1)
        with pytest.raises(ValueError):
            HardInstanceSpec(2, (0, 2), (0, 1), 0.1)
        with pytest.raises(ValueError):
            HardInstanceSpec(2, (0, 1), (0, 1), 1.0)
        with pytest.raises(ValueError):
            HardInstanceSpec(0, (), (), 0.1)

    def test_epsilon_schedule(self):
        assert epsilon_hk(4, 16) == 0.25
        assert epsilon_hk(4, 1024) == 0.125
        assert epsilon_hk(8, 512) == 0.25
        with pytest.raises(ValueError):
            epsilon_hk(0, 5)


class TestLockMdp:
    def test_layout(self):
        g = combination_lock_mdp(HardInstanceSpec(3, (1, 0, 1), (0, 1, 1), 0.1))
        assert g.sizes_S == [1, 2, 2, 2, 1] and g.sizes_B == [1] * 4
        assert np.all(g.P[0] == 0.5)
        assert g.bernoulli[3].all() and not g.bernoulli[1].any()

    def test_good_transition_and_absorbing_bad_path(self):
        X, Y = (1, 0, 1), (0, 1, 1)
        g = combination_lock_mdp(HardInstanceSpec(3, X, Y, 0.1))
        for h in (1, 2):
            good = Y[h - 1]
            for a in (0, 1):
                target = Y[h] if a == X[h - 1] ^ good else 1 - Y[h]
                assert g.P[h][good, a, 0, target] == 1.0
                assert g.P[h][1 - good, a, 0, 1 - Y[h]] == 1.0

    def test_ground_truth_values(self):
        rng = np.random.default_rng(0)
        one = lambda g: [np.ones((n, 1)) for n in g.sizes_S[:-1]]  # noqa: E731
        for _ in range(20):
            H = int(rng.integers(2, 5))
            X, Y = tuple(rng.integers(0, 2, H)), tuple(rng.integers(0, 2, H))
            eps = float(rng.uniform(0.01, 0.49))
            g = combination_lock_mdp(HardInstanceSpec(H, X, Y, eps))
            assert minimax_values(g)[0][0][0] == pytest.approx(0.5, abs=1e-9)
            assert evaluate_pair(g, optimal_lock_policy(X), one(g))[0][0] == pytest.approx(0.5, abs=1e-9)
            for step in range(1, H + 1):
                dev = deviating_lock_policy(X, step)
                assert evaluate_pair(g, dev, one(g))[0][0] == pytest.approx(0.5 - eps, abs=1e-9)

    def test_optimal_policy_rule(self):
        pol = optimal_lock_policy((1, 0))
        assert pol[1].tolist() == [[0, 1], [1, 0]] and pol[2].tolist() == [[1, 0], [0, 1]]


class TestWrapper:
    def test_table_rows(self):
        for i in (0, 1):
            for a in (0, 1):
                assert successor(i, a, 0) == i
                assert successor(i, a, 1) == 1 - i
            assert successor(i, 0, 2) == i and successor(i, 1, 2) == 1 - i
            assert successor(i, 0, 3) == 1 - i and successor(i, 1, 3) == i

    def test_game_shape(self):
        g, _ = hard_markov_game(3, (0, 1, 1), 0.2)
        assert g.sizes_S == [1, 2, 2, 2, 1] and g.sizes_B == [4] * 4

    def test_nu_uses_steering_rows_at_the_right_states(self):
        H, X = 3, (1, 1, 0)
        _, nu_for = hard_markov_game(H, X, 0.2)
        for Y in bits(H):
            nu = nu_for(Y)
            for h in range(1, H + 1):
                assert nu[h][Y[h - 1]].argmax() in (2, 3)
                assert nu[h][1 - Y[h - 1]].argmax() in (0, 1)
                assert np.all(nu[h].max(axis=1) == 1.0)

    @pytest.mark.parametrize("H", [1, 2, 3])
    def test_tensor_equivalence(self, H):
        cases = 0
        for X in bits(H):
            g, nu_for = hard_markov_game(H, X, 0.15)
            for Y in bits(H):
                lock = combination_lock_mdp(HardInstanceSpec(H, X, Y, 0.15))
                P, r = induced(g, nu_for(Y))
                for h in range(H + 1):
                    assert np.array_equal(P[h], lock.P[h])
                    assert np.array_equal(r[h], lock.r[h])
                cases += 1
        assert cases == 4**H

    def test_wrapper_value(self):
        g, _ = hard_markov_game(3, (0, 1, 0), 0.2)
        assert minimax_values(g)[0][0][0] == pytest.approx(0.3, abs=1e-12)

    def test_bad_lengths(self):
        with pytest.raises(ValueError):
            hard_markov_game(2, (0,), 0.1)
        _, nu_for = hard_markov_game(2, (0, 1), 0.1)
        with pytest.raises(ValueError):
            nu_for((0, 1, 1))


class LockFollower:
    """Plays a = x_h xor w, i.e. pulls arm X every episode."""

    def __init__(self, X):
        self.policy = optimal_lock_policy(X)

    def begin_episode(self, k):
        pass

    def act(self, h, s, rng):
        return int(self.policy[h][s].argmax())

    def observe(self, h, s, a, r, s_next):
        pass


def atom_mean(atoms):
    return sum(p for (w, a, r), p in atoms.items() if r == 1)


class TestReduction:
    def test_following_X_xor_Y_pays_half(self):
        X = (1, 0, 1)
        K = 20000
        res = bandit_reduction_run(LockFollower(X), X, 3, K, np.random.default_rng(0), eps=0.25)
        assert np.all(res.arms == np.array(X))
        assert np.all(res.actions == np.array(X) ^ res.ys)
        assert abs(res.rewards.mean() - 0.5) <= 3 * np.sqrt(0.25 / K)
        assert atom_mean(reduction_atoms(optimal_lock_policy(X), X, 0.25)) == pytest.approx(0.5, abs=1e-15)

    def test_uniform_learner_mean(self):
        H, X, eps, K = 2, (0, 1), 0.25, 40000
        expected = 0.5 - eps * (1 - 2.0**-H)
        uni = [np.full((n, 2), 0.5) for n in (1, 2, 2)]
        assert atom_mean(reduction_atoms(uni, X, eps)) == pytest.approx(expected, abs=1e-15)
        res = bandit_reduction_run(UniformLearner([1, 2, 2, 1], [2, 2, 2]), X, H, K, np.random.default_rng(1), eps=eps)
        assert abs(res.rewards.mean() - expected) <= 3 * np.sqrt(expected * (1 - expected) / K)
        hit = np.all(res.arms == np.array(X), axis=1).mean()
        assert abs(hit - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / K)

    def test_ys_are_uniform(self):
        res = bandit_reduction_run(LockFollower((0, 0)), (0, 0), 2, 8000, np.random.default_rng(2), eps=0.1)
        codes = np.bincount(res.ys[:, 0] * 2 + res.ys[:, 1], minlength=4)
        assert np.all(np.abs(codes - 2000) <= 3 * np.sqrt(8000 * 0.25 * 0.75))

    def test_one_bit_has_eight_atoms(self):
        pol = [np.array([[0.4, 0.6]]), np.array([[0.3, 0.7], [0.8, 0.2]])]
        red, direct = reduction_atoms(pol, (1,), 0.2), direct_atoms(pol, (1,), 0.2)
        assert len(red) == 8 and set(red) == set(direct)
        for key in red:
            assert red[key] == pytest.approx(direct[key], abs=1e-12)

    @pytest.mark.parametrize("H", [1, 2])
    def test_atom_equivalence(self, H):
        rng = np.random.default_rng(H)
        for X in bits(H):
            for _ in range(5):
                pol = [rng.dirichlet(np.ones(2), size=n) for n in [1] + [2] * H]
                eps = float(rng.uniform(0.01, 0.49))
                red, direct = reduction_atoms(pol, X, eps), direct_atoms(pol, X, eps)
                assert set(red) == set(direct)
                assert max(abs(red[k] - direct[k]) for k in red) <= 1e-12
                assert sum(red.values()) == pytest.approx(1.0, abs=1e-12)
