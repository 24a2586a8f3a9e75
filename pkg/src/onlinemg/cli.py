"""Command-line entry points: run, sweep, oracle, solve-matrix, hard-lb."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .errors import CapacityError, ConfigError, InvalidGameError, SolverError
from .game import load_game
from .harness import ExperimentConfig, emit_outputs, fit_loglog_slope, run_experiment, sweep
from .hard import epsilon_hk
from .matrix import ORACLE_TOL, solve_zero_sum
from .oracle import minimax_values

EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_CAPACITY = 4


def parse_seeds(text):
    """``"5"`` -> [5]; ``"0-19"`` -> 0..19 inclusive; ``"1,4,9"`` -> list."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError(f"no seeds in {text!r}")
    return seeds


def parse_grid(items):
    grid = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"grid entry {item!r} is not KEY=V1,V2,...")
        key, values = item.split("=", 1)
        grid[key] = [json.loads(v) if _is_json(v) else v for v in values.split(",")]
    return grid


def _is_json(text):
    try:
        json.loads(text)
        return True
    except json.JSONDecodeError:
        return False


def read_matrix(path):
    if path.endswith(".csv"):
        with open(path, newline="") as f:
            rows = [[float(x) for x in row] for row in csv.reader(f) if row]
        return np.array(rows)
    with open(path) as f:
        obj = json.load(f)
    if isinstance(obj, dict):
        obj = obj["M"]
    return np.array(obj, dtype=float)


def cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    ledger = run_experiment(cfg)
    paths = emit_outputs(ledger, cfg, args.out)
    summary = {
        "weak_regret": ledger.weak_regret,
        "strong_regret": ledger.strong_regret,
        "loglog_slope": fit_loglog_slope(ledger.weak_cum),
        "outputs": paths,
    }
    print(json.dumps(summary))


def cmd_sweep(args):
    with open(args.config) as f:
        base = json.load(f)
    rows = sweep(base, parse_seeds(args.seeds), parse_grid(args.grid), args.out, args.workers)
    for row in rows:
        print(json.dumps(row))


def cmd_oracle(args):
    g = load_game(args.game)
    V, mu, nu = minimax_values(g, args.tol)
    print(json.dumps({
        "V": [v.tolist() for v in V],
        "mu": [m.tolist() for m in mu],
        "nu": [n.tolist() for n in nu],
    }))


def cmd_solve_matrix(args):
    M = read_matrix(args.matrix)
    cert = solve_zero_sum(M, args.tol)
    print(json.dumps({
        "x": cert.x.tolist(),
        "y": cert.y.tolist(),
        "value": cert.value,
        "gap": cert.gap,
        "converged": cert.converged,
    }))
    if not cert.converged:
        return EXIT_SOLVER
    return 0


def cmd_hard_lb(args):
    eps = epsilon_hk(args.H, args.K) if args.eps is None else args.eps
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["seed", "learner", "H", "K", "eps", "strong_regret", "weak_regret", "threshold"])
        for seed in parse_seeds(args.seeds):
            cfg = ExperimentConfig(
                game={"kind": "hard_lock", "H": args.H, "eps": eps, "x_seed": args.x_seed},
                learner={"kind": args.learner},
                opponent={"kind": "hard_lock"},
                K=args.K,
                seed=seed,
                metrics=["strong_regret"],
            )
            ledger = run_experiment(cfg)
            w.writerow([seed, args.learner, args.H, args.K, repr(eps), repr(ledger.strong_regret),
                        repr(ledger.weak_regret), repr(0.5 * eps * args.K)])
    finally:
        if out is not sys.stdout:
            out.close()


def build_parser():
    p = argparse.ArgumentParser(prog="onlinemg", description="Online learning in episodic Markov games.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a config over seeds and a parameter grid")
    s.add_argument("--config", required=True)
    s.add_argument("--seeds", default="0", help="e.g. 0-19 or 1,3,5")
    s.add_argument("--grid", action="append", help="dotted.key=v1,v2 (repeatable), e.g. game.dup_b=1,4,16")
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", help="minimax values and policies of a game file")
    o.add_argument("game")
    o.add_argument("--tol", type=float, default=ORACLE_TOL)
    o.set_defaults(func=cmd_oracle)

    m = sub.add_parser("solve-matrix", help="Nash equilibrium of a zero-sum matrix game (JSON or CSV)")
    m.add_argument("matrix")
    m.add_argument("--tol", type=float, default=ORACLE_TOL)
    m.set_defaults(func=cmd_solve_matrix)

    h = sub.add_parser("hard-lb", help="strong regret on the combination-lock game, one row per seed")
    h.add_argument("--H", type=int, required=True)
    h.add_argument("--K", type=int, required=True)
    h.add_argument("--seeds", default="0-19")
    h.add_argument("--learner", choices=("vol", "uniform"), default="vol")
    h.add_argument("--eps", type=float)
    h.add_argument("--x-seed", type=int, default=0)
    h.add_argument("--out")
    h.set_defaults(func=cmd_hard_lb)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except SolverError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except CapacityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, InvalidGameError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
