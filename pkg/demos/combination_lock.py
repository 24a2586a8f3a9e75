"""The combination-lock game: with few episodes every learner pays linear regret."""

import numpy as np

from onlinemg.hard import (
    HardInstanceSpec,
    bandit_reduction_run,
    combination_lock_mdp,
    direct_atoms,
    epsilon_hk,
    optimal_lock_policy,
    reduction_atoms,
)
from onlinemg.harness import ExperimentConfig, run_experiment
from onlinemg.oracle import minimax_values
from onlinemg.vol import UniformLearner

X, Y = (1, 0, 1), (0, 0, 1)
g = combination_lock_mdp(HardInstanceSpec(3, X, Y, 0.2))
print("V* of the lock:", minimax_values(g)[0][0][0])
print("optimal actions per step (rows are states):", [p.argmax(axis=1).tolist() for p in optimal_lock_policy(X)[1:]])

# the bandit reduction and direct play agree atom by atom
rng = np.random.default_rng(0)
pol = [rng.dirichlet(np.ones(2), size=n) for n in (1, 2, 2)]
red, direct = reduction_atoms(pol, (1, 0), 0.1), direct_atoms(pol, (1, 0), 0.1)
print("max atom difference:", max(abs(red[k] - direct[k]) for k in red))

# a uniform player pulls the right arm with probability 2^-H
res = bandit_reduction_run(UniformLearner([1, 2, 2, 2, 1], [2, 2, 2, 2]), X, 3, 4000, rng, eps=0.25)
print(f"uniform reward {res.rewards.mean():.3f} vs 1/2 - eps(1 - 2^-H) = {0.5 - 0.25 * (1 - 1 / 8):.3f}")

# H = 8 and K = 512: eps stays at 1/4 and strong regret grows linearly
H, K = 8, 512
eps = epsilon_hk(H, K)
for learner in ("vol", "uniform"):
    regrets = [run_experiment(ExperimentConfig(game={"kind": "hard_lock", "H": H, "eps": eps},
                                               learner={"kind": learner}, opponent={"kind": "hard_lock"},
                                               K=K, seed=s, metrics=["strong_regret"])).strong_regret
               for s in range(5)]
    print(f"{learner}: strong regret {np.round(regrets, 1)} (threshold {0.5 * eps * K:.0f})")
