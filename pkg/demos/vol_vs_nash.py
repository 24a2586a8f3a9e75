"""V-OL against a Nash opponent, without ever seeing the opponent's actions."""

import numpy as np

from onlinemg.harness import ExperimentConfig, emit_outputs, fit_loglog_slope, run_experiment

game = {"kind": "random", "H": 3, "S": 3, "A": 2, "B": 2, "seed": 0}
K = 2**14

for clip in (False, True):
    cfg = ExperimentConfig(game=game, learner={"kind": "vol", "clip_values": clip}, K=K, seed=0)
    ledger = run_experiment(cfg)
    print(f"clip_values={clip}: weak regret {ledger.weak_regret:.1f}, "
          f"slope {fit_loglog_slope(ledger.weak_cum):.3f}, strong regret {ledger.strong_regret:.1f}")

# per-episode regret shrinks as the policy settles
inc = ledger.weak_inc
for lo, hi in [(0, 100), (K // 2, K // 2 + 100), (K - 100, K)]:
    print(f"episodes {lo + 1}-{hi}: mean increment {inc[lo:hi].mean():.4f}")

# the same run again, written to disk with a plot
cfg = ExperimentConfig(game=game, learner={"kind": "vol", "clip_values": True}, K=K, seed=0,
                       outputs={"svg": True})
print(emit_outputs(run_experiment(cfg), cfg, "vol_vs_nash_out"))

# B never enters the learner: duplicating the opponent's columns changes nothing it stores
for dup in (1, 8):
    led = run_experiment(ExperimentConfig(game=dict(game, dup_b=dup), learner={"kind": "vol", "clip_values": True},
                                          K=4096, seed=3, metrics=["weak_regret"]))
    print(f"B = {2 * dup}: weak regret {led.weak_regret:.2f}")
