"""Three players reduced to a two-player view: the others act as one coalition."""

import numpy as np

from onlinemg.game import random_general_sum_game, to_player1_view
from onlinemg.harness import ExperimentConfig, fit_loglog_slope, run_experiment
from onlinemg.vol import VOLearner

for m in (2, 3, 4):
    gs = random_general_sum_game(3, 3, [2] * m, np.random.default_rng(0))
    g, codec = to_player1_view(gs)
    learner = VOLearner.for_game(g, 1000)
    print(f"m = {m}: coalition actions {g.sizes_B[0]}, learner state {learner.state.nbytes()} bytes")

# joint actions are encoded mixed-radix over players 2..m
print("joint index 5 ->", codec.decode(0, 5))

game = {"kind": "random_general_sum", "H": 3, "S": 3, "action_sizes": [2, 2, 2], "seed": 0}
led = run_experiment(ExperimentConfig(game=game, learner={"kind": "vol", "clip_values": True}, K=2**13, seed=0))
print(f"weak regret {led.weak_regret:.1f}, slope {fit_loglog_slope(led.weak_cum):.3f}")
