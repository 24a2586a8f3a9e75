"""Acceptance criteria, each at its stated tolerance.

Every test logs one PASS/FAIL line (collected in the terminal summary) and
then asserts the criterion.  The long empirical runs dominate the runtime
(several minutes in total on one core).
"""

import json

import numpy as np
import pytest

from onlinemg.cli import main
from onlinemg.game import random_game, random_general_sum_game, to_player1_view, uniform_policy
from onlinemg.hard import (
    HardInstanceSpec,
    combination_lock_mdp,
    deviating_lock_policy,
    direct_atoms,
    reduction_atoms,
)
from onlinemg.harness import ExperimentConfig, fit_loglog_slope, run_experiment
from onlinemg.matrix import ORACLE_TOL, certify, solve_zero_sum
from onlinemg.oracle import best_policy_in_hindsight, best_response_value, evaluate_pair, minimax_values
from onlinemg.vol import VOLearner, alpha, alpha_weights
from oracles import brute_best_response, brute_hindsight

pytestmark = pytest.mark.acceptance

SLOPE_GAME = {"kind": "random", "H": 3, "S": 3, "A": 2, "B": 2, "seed": 0}
VOL = {"kind": "vol", "clip_values": True}


def slopes(configs):
    return [fit_loglog_slope(run_experiment(ExperimentConfig(**c)).weak_cum) for c in configs]


def fmt(xs):
    return "[" + ", ".join(f"{x:.3f}" for x in xs) + "]"


def test_c1_step_size_weights(record):
    failures = []
    for G in (1, 2, 8):
        for H in (1, 3, 10):
            for t in range(1, 10**4 + 1):
                _, w = alpha_weights(t, G, H)
                i = np.arange(1, t + 1)
                if abs(w.sum() - 1) > 1e-12:
                    failures.append(("sum", G, H, t))
                if (w**2).sum() > 2 * G * H / t * (1 + 1e-12):
                    failures.append(("squares", G, H, t))
                s = (w / np.sqrt(i)).sum() * np.sqrt(t)
                if not 1 - 1e-12 <= s <= 2 + 1e-12:
                    failures.append(("sqrt", G, H, t))
            # partial sums over t of alpha_t^i for fixed i
            T = 10**5
            a = np.array([alpha(t, G, H) for t in range(1, T + 1)])
            limit = 1 + 1 / (G * H)
            for i in range(1, 11):
                terms = a[i - 1] * np.concatenate(([1.0], np.cumprod(1 - a[i:])))
                partial = np.cumsum(terms)
                if np.any(np.diff(partial) < 0) or partial.max() > limit + 1e-12:
                    failures.append(("partial-bound", G, H, i))
                if abs(partial[-1] - limit) > 5e-2:
                    failures.append(("partial-limit", G, H, i))
    ok = not failures
    record("C1 step-size weights", ok, f"9 (G,H) pairs, t <= 1e4, T = 1e5; failures={failures[:5]}")
    assert ok


def test_c2_matrix_solver(record):
    rng = np.random.default_rng(2024)
    worst_gap = worst_anti = worst_shift = 0.0
    for _ in range(1000):
        m, n = rng.integers(1, 9, size=2)
        M = rng.uniform(-1, 1, size=(m, n))
        cert = solve_zero_sum(M)
        worst_gap = max(worst_gap, cert.gap if cert.converged else np.inf)
        swapped = solve_zero_sum(-M.T)
        worst_anti = max(worst_anti, abs(swapped.value + cert.value), certify(M, swapped.y, swapped.x).gap)
        scale, shift = rng.uniform(0.1, 10), rng.uniform(-5, 5)
        moved = solve_zero_sum(scale * M + shift)
        worst_shift = max(worst_shift, abs(moved.value - (scale * cert.value + shift)) / max(1.0, scale))
    mp = solve_zero_sum([[1, -1], [-1, 1]])
    rps = solve_zero_sum([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
    exact = (
        mp.value == 0.0 and mp.x.tolist() == [0.5, 0.5] and mp.y.tolist() == [0.5, 0.5]
        and abs(rps.value) <= 1e-15 and np.allclose(rps.x, 1 / 3, atol=1e-15) and np.allclose(rps.y, 1 / 3, atol=1e-15)
    )
    ok = worst_gap <= 1e-9 and worst_anti <= 2 * ORACLE_TOL and worst_shift <= 2 * ORACLE_TOL and exact
    record("C2 matrix solver", ok,
           f"max gap {worst_gap:.2e}, antisymmetry {worst_anti:.2e}, shift/scale {worst_shift:.2e}, MP/RPS exact={exact}")
    assert ok


def test_c3_oracle_equivalence(record):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(50):
        g = random_game(2, 2, 2, 2, rng, terminal_states=2)
        K = int(rng.integers(1, 4))
        nus = [[rng.dirichlet(np.ones(2), size=2) for _ in range(2)] for _ in range(K)]
        initials = rng.integers(0, 2, size=K).tolist()
        V, _ = best_response_value(g, nus[0])
        for s in range(2):
            worst = max(worst, abs(V[0][s] - brute_best_response(g, nus[0], s)))
        _, total = best_policy_in_hindsight(g, nus, initials)
        worst = max(worst, abs(total - brute_hindsight(g, nus, initials)))
    ok = worst <= 1e-9
    record("C3 oracle equivalence", ok, f"50 instances, max deviation from enumeration {worst:.2e}")
    assert ok


def test_c4_combination_lock(record):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        H = int(rng.integers(2, 5))
        X, Y = rng.integers(0, 2, H).tolist(), rng.integers(0, 2, H).tolist()
        eps = float(rng.uniform(0.01, 0.99))
        g = combination_lock_mdp(HardInstanceSpec(H, X, Y, eps))
        one = uniform_policy(g.sizes_S, g.sizes_B)
        v_star = minimax_values(g)[0][0][0]
        v_dev = evaluate_pair(g, deviating_lock_policy(X), one)[0][0]
        worst = max(worst, abs(v_star - 0.5), abs(v_dev - (0.5 - eps)))
    ok = worst <= 1e-9
    record("C4 combination-lock ground truth", ok, f"20 specs, max error {worst:.2e}")
    assert ok


def test_c5_vol_sublinear(record):
    configs = [dict(game=SLOPE_GAME, learner=VOL, opponent={"kind": "nash"}, K=2**17, seed=s,
                    metrics=["weak_regret"]) for s in range(20)]
    sl = slopes(configs)
    n_ok = sum(s <= 0.90 for s in sl)
    ok = n_ok >= 18
    record("C5 V-OL weak-regret slope", ok, f"{n_ok}/20 seeds <= 0.90, median {np.median(sl):.3f}, slopes {fmt(sl)}")
    assert ok


def test_c6_b_independence(record):
    shapes, blobs = [], []
    for B in (2, 8, 32):
        g = random_game(3, 3, 2, B, np.random.default_rng(6))
        st = VOLearner.for_game(g, 2**15, clip_values=True).state
        shapes.append(st.nbytes())
        blobs.append(json.dumps(st.to_dict()))
    structural = len(set(shapes)) == 1 and len(set(blobs)) == 1
    medians = {}
    for factor in (1, 4, 16):
        finals = [
            run_experiment(ExperimentConfig(game=dict(SLOPE_GAME, dup_b=factor), learner=VOL, K=2**15, seed=s,
                                            metrics=["weak_regret"])).weak_regret
            for s in range(10)
        ]
        medians[2 * factor] = float(np.median(finals))
    ratio = max(medians.values()) / min(medians.values())
    ok = structural and ratio <= 2.0
    record("C6 B-independence", ok,
           f"state identical across B={{2,8,32}}: {structural}; median final weak regret "
           + ", ".join(f"B={b}: {v:.1f}" for b, v in medians.items()) + f"; max/min {ratio:.3f}")
    assert ok


def test_c7_qol_sublinear(record):
    configs = [dict(game=SLOPE_GAME, learner={"kind": "qol"}, mode="informed", K=2**16, seed=s,
                    metrics=["weak_regret"]) for s in range(20)]
    sl = slopes(configs)
    n_ok = sum(s <= 0.80 for s in sl)
    ok = n_ok >= 18
    record("C7 Q-OL weak-regret slope", ok, f"{n_ok}/20 seeds <= 0.80, median {np.median(sl):.3f}, slopes {fmt(sl)}")
    assert ok


def test_c8_ucb(record):
    out = {}
    for name, learner, mode in (("V-OL", dict(VOL, c=2.0, p=0.01), "unknown"),
                                ("Q-OL", {"kind": "qol", "c": 2.0, "p": 0.01}, "informed")):
        step1 = anywhere = 0
        for s in range(20):
            led = run_experiment(ExperimentConfig(game=SLOPE_GAME, learner=learner, mode=mode, K=2**14, seed=s,
                                                  metrics=["ucb_gap", "ucb_violations"]))
            v1 = led.ucb_gap + led.v_pair
            step1 += bool(np.any(v1 < led.v_star - 1e-9))
            anywhere += bool(np.any(led.ucb_violations > 0))
        out[name] = (step1 / 20, anywhere / 20)
    ok = all(f <= 0.10 for f, _ in out.values())
    record("C8 UCB property", ok, "; ".join(
        f"{k}: seeds with a step-1 violation {a:.2f}, with any-step violation {b:.2f}" for k, (a, b) in out.items()))
    assert ok


def test_c9_lower_bound(record):
    eps, K = 0.25, 512
    counts = {}
    for learner in ("vol", "uniform"):
        regrets = [
            run_experiment(ExperimentConfig(game={"kind": "hard_lock", "H": 8, "eps": eps, "x_seed": 0},
                                            learner={"kind": learner}, opponent={"kind": "hard_lock"}, K=K, seed=s,
                                            metrics=["strong_regret"])).strong_regret
            for s in range(20)
        ]
        counts[learner] = (sum(r >= 0.5 * eps * K for r in regrets), float(np.median(regrets)))
    rng = np.random.default_rng(9)
    worst = 0.0
    for H in (1, 2):
        for _ in range(10):
            X = rng.integers(0, 2, H).tolist()
            pol = [rng.dirichlet(np.ones(2), size=n) for n in [1] + [2] * H]
            e = float(rng.uniform(0.01, 0.49))
            red, direct = reduction_atoms(pol, X, e), direct_atoms(pol, X, e)
            worst = max(worst, max(abs(red[k] - direct[k]) for k in red), float(set(red) != set(direct)))
    ok = all(n >= 18 for n, _ in counts.values()) and worst <= 1e-12
    record("C9 lower-bound exhibit", ok, "; ".join(
        f"{k}: {n}/20 seeds >= {0.5 * eps * K:.0f} (median {m:.1f})" for k, (n, m) in counts.items())
        + f"; reduction atoms max error {worst:.1e}")
    assert ok


def test_c10_multiplayer(record):
    sizes = []
    for m in (2, 3, 4):
        gs = random_general_sum_game(3, 3, [2] * m, np.random.default_rng(10))
        g, _ = to_player1_view(gs)
        sizes.append(VOLearner.for_game(g, 2**16).state.nbytes())
    memory_ok = len(set(sizes)) == 1
    game = {"kind": "random_general_sum", "H": 3, "S": 3, "action_sizes": [2, 2, 2], "seed": 0}
    configs = [dict(game=game, learner=VOL, K=2**16, seed=s, metrics=["weak_regret"]) for s in range(10)]
    sl = slopes(configs)
    n_ok = sum(s <= 0.90 for s in sl)
    ok = memory_ok and n_ok >= 9
    record("C10 multi-player reduction", ok,
           f"learner bytes for m=2,3,4: {sizes}; {n_ok}/10 seeds <= 0.90, median {np.median(sl):.3f}, slopes {fmt(sl)}")
    assert ok


def test_c11_cli_determinism(record, tmp_path):
    cfg = {"game": {"kind": "random", "H": 3, "S": 3, "A": 2, "B": 2, "seed": 0},
           "learner": {"kind": "vol"}, "opponent": {"kind": "adaptive_best_response", "period": 7},
           "K": 500, "metrics": ["ucb_gap", "ucb_violations", "strong_regret"]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    codes = [main(["run", "--config", str(path), "--seed", "11", "--out", str(tmp_path / d)]) for d in ("a", "b")]
    same = (tmp_path / "a" / "ledger.csv").read_bytes() == (tmp_path / "b" / "ledger.csv").read_bytes()
    ok = codes == [0, 0] and same
    record("C11 CLI determinism", ok, f"exit codes {codes}, ledger.csv byte-identical: {same}")
    assert ok
