"""Weak and strong regret of V-OL against each kind of opponent."""

from onlinemg.harness import ExperimentConfig, run_experiment

game = {"kind": "random", "H": 2, "S": 3, "A": 2, "B": 3, "seed": 4}
opponents = [
    {"kind": "nash"},
    {"kind": "uniform"},
    {"kind": "adaptive_best_response", "period": 50},
    {"kind": "adaptive_best_response"},  # frozen after episode 1
    {"kind": "self_play_mirror"},
]

print(f"{'opponent':34s} {'weak':>9s} {'strong':>9s}")
for opp in opponents:
    cfg = ExperimentConfig(game=game, learner={"kind": "vol", "clip_values": True}, opponent=opp, K=2000, seed=0,
                           metrics=["weak_regret", "strong_regret"])
    led = run_experiment(cfg)
    label = opp["kind"] + (f" (period {opp['period']})" if opp.get("period") else "")
    print(f"{label:34s} {led.weak_regret:9.2f} {led.strong_regret:9.2f}")

# weak regret can go negative when the opponent is exploitable; strong regret never falls below it
