"""Episode loop, regret accounting, configuration and outputs.

A run is fully determined by its config and seed.  The root seed feeds
independent named streams (learner, opponent, environment, initial state,
script), so switching metrics on or off never changes a trajectory.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .game import (
    MarkovGame,
    duplicate_columns,
    load_game,
    random_game,
    random_general_sum_game,
    split_policy,
    to_player1_view,
    uniform_policy,
)
from .hard import epsilon_hk, hard_markov_game
from .oracle import PairEvaluator, best_policy_in_hindsight, minimax_values
from .opponents import (
    FixedOpponent,
    NashOpponent,
    hard_lock_script,
    load_script,
    make_adaptive_best_response,
    make_self_play_mirror,
)
from .qol import QOLearner
from .vol import UniformLearner, VOLearner, VolHyper, choose_G, doubling_wrapper

STREAMS = {"learner": 0, "opponent": 1, "env": 2, "initial": 3, "script": 4}
METRICS = ("weak_regret", "strong_regret", "ucb_gap", "ucb_violations")
STRONG_REGRET_AUTO_LIMIT = 10**7


def stream(seed, name):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name],)))


@dataclass
class ExperimentConfig:
    game: dict
    learner: dict = field(default_factory=lambda: {"kind": "vol"})
    opponent: dict = field(default_factory=lambda: {"kind": "nash"})
    K: int = 1000
    mode: str = "unknown"
    initial: dict = field(default_factory=lambda: {"kind": "fixed", "state": 0})
    seed: int = 0
    metrics: list | None = None  # None: weak regret, plus strong regret when cheap
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.K, int) or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if self.mode not in ("unknown", "informed"):
            raise ConfigError(f"mode must be 'unknown' or 'informed', got {self.mode!r}")
        lk = self.learner.get("kind")
        if lk not in ("vol", "qol", "uniform"):
            raise ConfigError(f"unknown learner kind {lk!r}")
        if lk == "qol" and self.mode != "informed":
            raise ConfigError("the qol learner needs the opponent's actions: set mode to 'informed'")
        if lk == "vol" and self.learner.get("G_mode", "auto") not in ("auto", "fixed", "doubling"):
            raise ConfigError(f"G_mode must be auto, fixed or doubling, got {self.learner.get('G_mode')!r}")
        if self.game.get("kind") not in ("random", "file", "hard_lock", "random_general_sum"):
            raise ConfigError(f"unknown game kind {self.game.get('kind')!r}")
        ok = ("nash", "uniform", "fixed", "scripted", "hard_lock", "adaptive_best_response", "self_play_mirror")
        if self.opponent.get("kind") not in ok:
            raise ConfigError(f"unknown opponent kind {self.opponent.get('kind')!r}")
        if self.opponent.get("kind") == "hard_lock" and self.game.get("kind") != "hard_lock":
            raise ConfigError("the hard_lock opponent needs the hard_lock game")
        if self.initial.get("kind") not in ("fixed", "cycle", "random"):
            raise ConfigError(f"unknown initial-state schedule {self.initial.get('kind')!r}")
        if self.metrics is not None:
            bad = set(self.metrics) - set(METRICS)
            if bad:
                raise ConfigError(f"unknown metrics {sorted(bad)}")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        if "game" not in d:
            raise ConfigError("config needs a 'game' entry")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            try:
                return cls.from_dict(json.load(f))
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e

    def to_dict(self):
        return asdict(self)


@dataclass
class Setup:
    """Everything built from a config before the first episode."""

    game: MarkovGame
    learner: object
    opponent: object
    V_star: list
    metrics: tuple
    notes: dict = field(default_factory=dict)


# ---------------------------------------------------------------- construction


def build_game(cfg: ExperimentConfig):
    spec = cfg.game
    kind = spec["kind"]
    notes = {}
    if kind == "random":
        g = random_game(
            spec["H"], spec["S"], spec["A"], spec.get("B", 2),
            np.random.default_rng(spec.get("seed", 0)),
            spec.get("return_mode", "deterministic"), spec.get("terminal_states", 1),
        )
        factor = int(spec.get("dup_b", 1))
        if factor > 1:
            notes["base_game"] = g
            notes["dup_b"] = factor
            g = duplicate_columns(g, factor)
    elif kind == "file":
        g = load_game(spec["path"])
    elif kind == "random_general_sum":
        gs = random_general_sum_game(
            spec["H"], spec["S"], spec["action_sizes"], np.random.default_rng(spec.get("seed", 0))
        )
        g, codec = to_player1_view(gs)
        notes["codec"] = codec
    else:  # hard_lock
        H = spec["H"]
        if "X" in spec:
            X = [int(x) for x in spec["X"]]
        else:
            X = np.random.default_rng(spec.get("x_seed", 0)).integers(0, 2, size=H).tolist()
        eps = spec.get("eps")
        eps = epsilon_hk(H, cfg.K) if eps is None else float(eps)
        g, nu_for = hard_markov_game(H, X, eps)
        notes.update(X=X, eps=eps, nu_for=nu_for, bits=H)
    return g, notes


def build_learner(cfg: ExperimentConfig, g: MarkovGame):
    spec = cfg.learner
    kind = spec["kind"]
    c = float(spec.get("c", 2.0))
    p = float(spec.get("p", 0.01))
    if kind == "uniform":
        return UniformLearner(g.sizes_S, g.sizes_A)
    if kind == "qol":
        return QOLearner.for_game(g, cfg.K, c=c, p=p)
    clip = bool(spec.get("clip_values", False))
    mode = spec.get("G_mode", "auto")
    if mode == "doubling":
        return doubling_wrapper(
            lambda K, G: VOLearner(g.sizes_S, g.sizes_A, VolHyper(g.H, g.S, g.A, K, G, c, p, clip)),
            g.H, g.S, g.A,
        )
    if mode == "fixed":
        G = float(spec.get("G", 1.0))
    else:
        G = max(1.0, choose_G(cfg.K, g.H, g.S, g.A))
    return VOLearner(g.sizes_S, g.sizes_A, VolHyper(g.H, g.S, g.A, cfg.K, G, c, p, clip))


def build_opponent(cfg: ExperimentConfig, g: MarkovGame, notes, V_nash):
    spec = cfg.opponent
    kind = spec["kind"]
    if kind == "nash":
        if "base_game" in notes:
            # duplicated columns: split the base game's minimax policy evenly
            nu = split_policy(minimax_values(notes["base_game"])[2], notes["dup_b"])
        else:
            nu = V_nash[2]
        return NashOpponent(g, nu)
    if kind == "uniform":
        return FixedOpponent(uniform_policy(g.sizes_S, g.sizes_B))
    if kind == "fixed":
        pol = spec["policy"]
        if isinstance(pol, str):
            return FixedOpponent(load_script(pol, g).snapshot(1))
        return FixedOpponent(load_script({"policies": [pol]}, g).snapshot(1))
    if kind == "scripted":
        return load_script(spec["path"] if "path" in spec else {"policies": spec["policies"]}, g)
    if kind == "hard_lock":
        return hard_lock_script(notes["nu_for"], notes["bits"], stream(cfg.seed, "script"))
    if kind == "adaptive_best_response":
        return make_adaptive_best_response(g, spec.get("period"))
    hyper = {k: spec[k] for k in ("G", "c", "p", "clip_values") if k in spec}
    return make_self_play_mirror(g, cfg.K, **hyper)


def resolve_metrics(cfg: ExperimentConfig, g: MarkovGame):
    if cfg.metrics is not None:
        metrics = set(cfg.metrics) | {"weak_regret"}
    else:
        metrics = {"weak_regret"}
        if cfg.K * g.H * g.S * g.A <= STRONG_REGRET_AUTO_LIMIT:
            metrics.add("strong_regret")
    return tuple(m for m in METRICS if m in metrics)


def setup(cfg: ExperimentConfig) -> Setup:
    g, notes = build_game(cfg)
    nash = minimax_values(g)
    learner = build_learner(cfg, g)
    opponent = build_opponent(cfg, g, notes, nash)
    return Setup(g, learner, opponent, nash[0], resolve_metrics(cfg, g), notes)


# ---------------------------------------------------------------- ledger


@dataclass
class RegretLedger:
    s1: np.ndarray
    v_star: np.ndarray
    v_pair: np.ndarray
    weak_inc: np.ndarray
    weak_cum: np.ndarray
    ucb_gap: np.ndarray | None = None
    ucb_violations: np.ndarray | None = None
    opponent_snapshots: list | None = None
    strong_regret: float | None = None
    hindsight_policy: list | None = None

    @property
    def K(self):
        return len(self.s1)

    @property
    def weak_regret(self):
        return float(self.weak_cum[-1]) if self.K else 0.0


def _initial_schedule(cfg, g):
    spec = cfg.initial
    n0 = g.sizes_S[0]
    if spec["kind"] == "fixed":
        s = int(spec.get("state", 0))
        if not 0 <= s < n0:
            raise ConfigError(f"initial state {s} out of range [0, {n0})")
        return lambda k: s
    if spec["kind"] == "cycle":
        return lambda k: (k - 1) % n0
    rng = stream(cfg.seed, "initial")
    return lambda k: int(rng.integers(n0))


def run_experiment(cfg: ExperimentConfig, prepared: Setup | None = None) -> RegretLedger:
    """Play ``cfg.K`` episodes and return the ledger.

    Each episode's ``mu^k`` and ``nu^k`` are scored before any update, which
    is exact because an episode visits every step once and a learner only
    changes the policy at a step after acting there.
    """
    st = prepared or setup(cfg)
    g, learner, opponent, V_star = st.game, st.learner, st.opponent, st.V_star
    K, H = cfg.K, g.H
    informed = cfg.mode == "informed"
    want_gap = "ucb_gap" in st.metrics
    want_viol = "ucb_violations" in st.metrics
    keep = "strong_regret" in st.metrics
    copy_nu = getattr(opponent, "learns", False)

    rng_l, rng_o, rng_e = stream(cfg.seed, "learner"), stream(cfg.seed, "opponent"), stream(cfg.seed, "env")
    initial = _initial_schedule(cfg, g)
    evaluator = PairEvaluator(g)

    s1 = np.zeros(K, dtype=np.int64)
    v_star = np.zeros(K)
    v_pair = np.zeros(K)
    gap = np.full(K, np.nan) if want_gap else None
    viol = np.zeros(K, dtype=np.int64) if want_viol else None
    snaps = [] if keep else None
    V_thresh = [v - 1e-9 for v in V_star]

    step = g.step_from_uniforms
    learner_act, learner_obs = learner.act, learner.observe
    opp_act, opp_obs = opponent.act, opponent.observe
    uniforms = rng_e.random

    for k in range(1, K + 1):
        s = initial(k)
        learner.begin_episode(k)
        opponent.begin_episode(k, learner.policy())
        mu = learner.policy()
        nu = opponent.snapshot(k)
        if copy_nu:
            nu = [p.copy() for p in nu]
        i = k - 1
        s1[i] = s
        v_star[i] = V_star[0][s]
        v_pair[i] = evaluator.value(mu, nu, s)
        if keep:
            snaps.append(nu)
        if want_gap:
            gap[i] = learner.value(0, s) - v_pair[i]
        for h in range(H):
            if want_viol and learner.value(h, s) < V_thresh[h][s]:
                viol[i] += 1
            a = learner_act(h, s, rng_l)
            b = opp_act(k, h, s, rng_o)
            u = uniforms(2)
            r, s_next = step(h, s, a, b, u[0], u[1])
            if informed:
                learner_obs(h, s, a, r, s_next, b=b)
            else:
                learner_obs(h, s, a, r, s_next)
            opp_obs(h, s, b, r, s_next)
            s = s_next

    weak_inc = v_star - v_pair
    ledger = RegretLedger(s1, v_star, v_pair, weak_inc, np.cumsum(weak_inc), gap, viol, snaps)
    if keep:
        compute_strong_regret(ledger, g)
    return ledger


def compute_strong_regret(ledger: RegretLedger, g: MarkovGame, snapshots=None) -> float:
    """Best fixed Markov policy in hindsight minus the realised ``sum_k V^{mu^k, nu^k}``."""
    snapshots = ledger.opponent_snapshots if snapshots is None else snapshots
    if snapshots is None:
        raise ConfigError("strong regret needs the opponent snapshots: add 'strong_regret' to metrics")
    mu_hat, total = best_policy_in_hindsight(g, snapshots, ledger.s1.tolist())
    ledger.strong_regret = total - float(ledger.v_pair.sum())
    ledger.hindsight_policy = mu_hat
    return ledger.strong_regret


# ---------------------------------------------------------------- outputs


def fit_loglog_slope(cum, start_fraction=0.5):
    """Least-squares slope of ``log cum[k]`` against ``log k`` over the last part of the run.

    ``cum[i]`` belongs to episode ``k = i + 1``; non-positive entries are dropped.
    """
    cum = np.asarray(cum, dtype=float)
    K = cum.shape[0]
    k = np.arange(1, K + 1)
    sel = (k > int(K * start_fraction)) & (cum > 0)
    if sel.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(k[sel]), np.log(cum[sel]), 1)[0])


def ledger_csv(ledger: RegretLedger) -> str:
    cols = ["k", "s1", "v_star", "v_pair", "weak_inc", "weak_cum"]
    if ledger.ucb_gap is not None:
        cols.append("ucb_gap")
    if ledger.ucb_violations is not None:
        cols.append("ucb_violations")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i in range(ledger.K):
        row = [i + 1, int(ledger.s1[i])] + [
            repr(float(x)) for x in (ledger.v_star[i], ledger.v_pair[i], ledger.weak_inc[i], ledger.weak_cum[i])
        ]
        if ledger.ucb_gap is not None:
            row.append(repr(float(ledger.ucb_gap[i])))
        if ledger.ucb_violations is not None:
            row.append(int(ledger.ucb_violations[i]))
        w.writerow(row)
    return buf.getvalue()


def summarize(ledger: RegretLedger, cfg: ExperimentConfig) -> dict:
    out = {
        "config": cfg.to_dict(),
        "K": ledger.K,
        "weak_regret": ledger.weak_regret,
        "loglog_slope": fit_loglog_slope(ledger.weak_cum),
        "strong_regret": ledger.strong_regret,
    }
    if ledger.ucb_violations is not None:
        out["episodes_with_ucb_violation"] = int((ledger.ucb_violations > 0).sum())
    if ledger.ucb_gap is not None:
        out["ucb_gap_total"] = float(np.nansum(ledger.ucb_gap))
    return out


def svg_plot(y, title="cumulative weak regret", width=640, height=400, max_points=2000):
    """Minimal self-contained SVG line chart of ``y`` against episode number."""
    y = np.asarray(y, dtype=float)
    idx = np.unique(np.linspace(0, len(y) - 1, min(len(y), max_points)).astype(int))
    lo, hi = min(0.0, float(y.min())), float(y.max())
    hi = hi if hi > lo else lo + 1.0
    pad = 40
    xs = pad + (width - 2 * pad) * idx / max(1, len(y) - 1)
    ys = height - pad - (height - 2 * pad) * (y[idx] - lo) / (hi - lo)
    pts = " ".join(f"{x:.2f},{v:.2f}" for x, v in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<text x="{pad}" y="20" font-family="sans-serif" font-size="14">{title}</text>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width - pad}" y="{height - pad + 16}" font-size="11" text-anchor="end">k = {len(y)}</text>\n'
        f'<text x="{pad - 4}" y="{pad}" font-size="11" text-anchor="end">{hi:.3g}</text>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>\n'
        "</svg>\n"
    )


def emit_outputs(ledger: RegretLedger, cfg: ExperimentConfig, out_dir=None) -> dict:
    """Write the CSV, the summary JSON and (if requested) the SVG; returns the paths."""
    outs = cfg.outputs or {}
    out_dir = out_dir or outs.get("dir", ".")
    paths = {
        "csv": os.path.join(out_dir, outs.get("csv", "ledger.csv")),
        "summary": os.path.join(out_dir, outs.get("summary", "summary.json")),
    }
    if outs.get("svg"):
        paths["svg"] = os.path.join(out_dir, outs["svg"] if isinstance(outs["svg"], str) else "weak_regret.svg")
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(paths["csv"], "w", newline="") as f:
            f.write(ledger_csv(ledger))
        with open(paths["summary"], "w") as f:
            json.dump(summarize(ledger, cfg), f, indent=2, default=_json_default)
            f.write("\n")
        if "svg" in paths:
            with open(paths["svg"], "w") as f:
                f.write(svg_plot(ledger.weak_cum))
    except OSError as e:
        raise OSError(f"cannot write outputs to {e.filename or out_dir}: {e.strerror}") from e
    return paths


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


# ---------------------------------------------------------------- sweeps


def _set_path(d, dotted, value):
    keys = dotted.split(".")
    for key in keys[:-1]:
        d = d.setdefault(key, {})
    d[keys[-1]] = value


def expand_grid(base: dict, seeds, grid: dict | None = None):
    """Cartesian product of ``grid`` (dotted config paths -> value lists) and seeds."""
    grid = grid or {}
    names = list(grid)
    cells = [{}]
    for name in names:
        cells = [dict(c, **{name: v}) for c in cells for v in grid[name]]
    out = []
    for cell in cells:
        for seed in seeds:
            d = copy.deepcopy(base)
            for name, v in cell.items():
                _set_path(d, name, v)
            d["seed"] = int(seed)
            out.append((cell, d))
    return out


def _run_cell(args):
    cell, cfg_dict, out_dir = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    ledger = run_experiment(cfg)
    if out_dir is not None:
        emit_outputs(ledger, cfg, out_dir)
    return {
        **cell,
        "seed": cfg.seed,
        "K": ledger.K,
        "weak_regret": ledger.weak_regret,
        "loglog_slope": fit_loglog_slope(ledger.weak_cum),
        "strong_regret": ledger.strong_regret,
    }


def sweep(base: dict, seeds, grid=None, out_dir=None, workers=1):
    """Run every (grid cell, seed) in isolation; returns one summary row per run."""
    jobs = []
    for i, (cell, d) in enumerate(expand_grid(base, seeds, grid)):
        ExperimentConfig.from_dict(d)  # fail fast before spawning
        sub = None if out_dir is None else os.path.join(out_dir, f"run_{i:04d}")
        jobs.append((cell, d, sub))
    if workers <= 1:
        rows = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run_cell, jobs))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        names = list(rows[0]) if rows else []
        with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as f:
            w = csv.DictWriter(f, names, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return rows


def median(xs):
    xs = [x for x in xs if not (isinstance(x, float) and math.isnan(x))]
    return float(np.median(xs)) if xs else float("nan")
