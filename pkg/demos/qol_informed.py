"""Q-OL sees the opponent's action and keeps a joint-action Q table."""

from onlinemg.harness import ExperimentConfig, fit_loglog_slope, run_experiment

game = {"kind": "random", "H": 3, "S": 3, "A": 2, "B": 2, "seed": 0}

for learner, mode in [({"kind": "vol", "clip_values": True}, "unknown"), ({"kind": "qol"}, "informed")]:
    cfg = ExperimentConfig(game=game, learner=learner, mode=mode, K=2**13, seed=1,
                           metrics=["ucb_gap", "ucb_violations"])
    led = run_experiment(cfg)
    print(f"{learner['kind']}: weak regret {led.weak_regret:.1f}, slope {fit_loglog_slope(led.weak_cum):.3f}, "
          f"episodes with a value below V*: {(led.ucb_violations > 0).sum()}")

# asking Q-OL to run without the opponent's actions is a configuration error
try:
    ExperimentConfig(game=game, learner={"kind": "qol"})
except Exception as e:
    print(type(e).__name__, e)
