"""Episodic two-player zero-sum Markov games.

Conventions used throughout the package:

* Steps are 0-based: an episode visits steps ``h = 0, ..., H-1`` and ends in
  layer ``H``, whose value is zero by definition.
* Cardinalities may differ per step, so every tensor is a tuple indexed by step:
  ``P[h]`` has shape ``(S_h, A_h, B_h, S_{h+1})`` and ``r[h]`` has shape
  ``(S_h, A_h, B_h)``.
* Returns lie in ``[0, 1]`` per step, so the total return of an episode is at
  most ``H``.
* ``bernoulli[h][s, a, b]`` marks entries whose realised return is a
  ``Bernoulli(r[h][s, a, b])`` draw instead of the deterministic value.
  Everything exact (oracles, evaluation) uses the mean ``r``.
* A Markov policy is a sequence of arrays ``pi[h]`` of shape ``(S_h, n_h)``
  whose rows are distributions over that player's actions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, InvalidGameError

STOCHASTIC_TOL = 1e-12

Policy = Sequence[np.ndarray]


def _frozen(x, dtype=float):
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


class Violation(NamedTuple):
    kind: str  # "shape" | "stochastic" | "negative" | "range" | "nonfinite"
    h: int
    index: tuple
    detail: str


@dataclass(frozen=True, eq=False)
class MarkovGame:
    P: tuple
    r: tuple
    bernoulli: tuple | None = None

    def __post_init__(self):
        if len(self.P) != len(self.r) or len(self.P) == 0:
            raise InvalidGameError("P and r must be non-empty and have one entry per step")
        object.__setattr__(self, "P", tuple(_frozen(p) for p in self.P))
        object.__setattr__(self, "r", tuple(_frozen(x) for x in self.r))
        if self.bernoulli is not None:
            flags = tuple(_frozen(f, dtype=bool) for f in self.bernoulli)
            object.__setattr__(self, "bernoulli", flags if any(f.any() for f in flags) else None)

    @property
    def H(self) -> int:
        return len(self.P)

    @property
    def sizes_S(self) -> list[int]:
        return [p.shape[0] for p in self.P] + [self.P[-1].shape[-1]]

    @property
    def sizes_A(self) -> list[int]:
        return [p.shape[1] for p in self.P]

    @property
    def sizes_B(self) -> list[int]:
        return [p.shape[2] for p in self.P]

    @property
    def S(self) -> int:
        return max(self.sizes_S[:-1])

    @property
    def A(self) -> int:
        return max(self.sizes_A)

    @property
    def B(self) -> int:
        return max(self.sizes_B)

    @cached_property
    def _cum_P(self):
        return tuple(np.cumsum(p, axis=-1) for p in self.P)

    @cached_property
    def _step_tables(self):
        # plain nested lists: per-call numpy overhead dominates at tabular sizes
        flags = self.bernoulli or tuple(np.zeros(x.shape, dtype=bool) for x in self.r)
        return tuple(
            (c.tolist(), x.tolist(), f.tolist()) for c, x, f in zip(self._cum_P, self.r, flags)
        )

    def is_bernoulli(self, h, s, a, b) -> bool:
        return self.bernoulli is not None and bool(self.bernoulli[h][s, a, b])

    def step_from_uniforms(self, h, s, a, b, u_next, u_return):
        """Transition driven by two externally drawn U[0,1) numbers.

        The next state is the first index whose cumulative probability exceeds
        ``u_next``; a Bernoulli return is 1 iff ``u_return < mean``.
        """
        cum_t, r_t, flag_t = self._step_tables[h]
        mean = r_t[s][a][b]
        ret = (1.0 if u_return < mean else 0.0) if flag_t[s][a][b] else mean
        cum = cum_t[s][a][b]
        for i, c in enumerate(cum):
            if u_next < c:
                return ret, i
        return ret, len(cum) - 1


@dataclass(frozen=True, eq=False)
class GeneralSumGame:
    """m-player game; ``P[h]`` has shape ``(S_h, A_1h, ..., A_mh, S_{h+1})``
    and ``r[i][h]`` has shape ``(S_h, A_1h, ..., A_mh)``."""

    P: tuple
    r: tuple
    bernoulli: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "P", tuple(_frozen(p) for p in self.P))
        object.__setattr__(self, "r", tuple(tuple(_frozen(x) for x in ri) for ri in self.r))
        if self.bernoulli is not None:
            object.__setattr__(self, "bernoulli", tuple(_frozen(f, dtype=bool) for f in self.bernoulli))

    @property
    def H(self) -> int:
        return len(self.P)

    @property
    def m(self) -> int:
        return self.P[0].ndim - 2

    def action_sizes(self, h) -> tuple[int, ...]:
        return tuple(self.P[h].shape[1:-1])


@dataclass
class EpisodeRecord:
    k: int
    s1: int
    steps: list  # (s_h, a_h, b_h, r_h, s_{h+1})
    informed: bool = False

    def learner_view(self):
        """What the max player is allowed to see: b_h is dropped unless informed."""
        if self.informed:
            return list(self.steps)
        return [(s, a, r, s_next) for s, a, _, r, s_next in self.steps]


# ---------------------------------------------------------------- validation


def validate_game(g: MarkovGame, tol=STOCHASTIC_TOL) -> list[Violation]:
    out = []
    for h in range(g.H):
        P, r = g.P[h], g.r[h]
        if P.ndim != 4 or r.ndim != 3 or P.shape[:3] != r.shape:
            out.append(Violation("shape", h, (), f"P{P.shape} vs r{r.shape}"))
            continue
        if h + 1 < g.H and P.shape[-1] != g.P[h + 1].shape[0]:
            out.append(Violation("shape", h, (), f"next layer {P.shape[-1]} != {g.P[h + 1].shape[0]}"))
        if g.bernoulli is not None and g.bernoulli[h].shape != r.shape:
            out.append(Violation("shape", h, (), f"bernoulli{g.bernoulli[h].shape} vs r{r.shape}"))
        if not np.all(np.isfinite(P)):
            for idx in zip(*np.nonzero(~np.isfinite(P))):
                out.append(Violation("nonfinite", h, tuple(int(i) for i in idx), "transition"))
            continue
        for idx in zip(*np.nonzero((P < 0).any(axis=-1))):
            out.append(Violation("negative", h, tuple(int(i) for i in idx), "negative probability"))
        sums = P.sum(axis=-1)
        for idx in zip(*np.nonzero(np.abs(sums - 1.0) > tol)):
            out.append(Violation("stochastic", h, tuple(int(i) for i in idx), f"row sums to {sums[idx]!r}"))
        bad = ~np.isfinite(r) | (r < 0) | (r > 1)
        for idx in zip(*np.nonzero(bad)):
            out.append(Violation("range", h, tuple(int(i) for i in idx), f"return {r[idx]!r}"))
    return out


def check_game(g: MarkovGame) -> MarkovGame:
    violations = validate_game(g)
    if violations:
        raise InvalidGameError(f"invalid game: {len(violations)} violation(s), first: {violations[0]}", violations)
    return g


def validate_policy(pi: Policy, sizes_S, sizes_n, tol=1e-9) -> list[str]:
    problems = []
    if len(pi) != len(sizes_n):
        return [f"policy has {len(pi)} steps, expected {len(sizes_n)}"]
    for h, p in enumerate(pi):
        p = np.asarray(p)
        if p.shape != (sizes_S[h], sizes_n[h]):
            problems.append(f"step {h}: shape {p.shape} != {(sizes_S[h], sizes_n[h])}")
            continue
        if (p < 0).any():
            problems.append(f"step {h}: negative entries")
        sums = p.sum(axis=1)
        if np.any(np.abs(sums - 1) > tol):
            problems.append(f"step {h}: rows sum to {sums.tolist()}")
    return problems


def uniform_policy(sizes_S, sizes_n) -> list[np.ndarray]:
    return [np.full((sizes_S[h], n), 1.0 / n) for h, n in enumerate(sizes_n)]


def deterministic_policy(actions, sizes_n) -> list[np.ndarray]:
    """``actions[h][s]`` is the chosen action index."""
    out = []
    for h, acts in enumerate(actions):
        acts = np.asarray(acts, dtype=int)
        p = np.zeros((acts.shape[0], sizes_n[h]))
        p[np.arange(acts.shape[0]), acts] = 1.0
        out.append(p)
    return out


# ---------------------------------------------------------------- sampling


def sample_step(g: MarkovGame, h, s, a, b, rng):
    """Draw ``(return, next_state)`` for one step of the game."""
    if not 0 <= h < g.H:
        raise IndexError(f"step h={h} out of range [0, {g.H})")
    S, A, B = g.r[h].shape
    for name, v, n in (("s", s, S), ("a", a, A), ("b", b, B)):
        if not 0 <= v < n:
            raise IndexError(f"{name}={v} out of range [0, {n}) at step {h}")
    u_next, u_ret = rng.random(2)
    return g.step_from_uniforms(h, s, a, b, u_next, u_ret)


def random_game(H, S, A, B, rng, return_mode="deterministic", terminal_states=1) -> MarkovGame:
    """Random game with flat-Dirichlet transition rows and uniform returns.

    ``S``, ``A`` and ``B`` may be ints or per-step lists.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    if return_mode not in ("deterministic", "bernoulli"):
        raise ValueError(f"unknown return_mode {return_mode!r}")

    def per_step(x, n, name):
        xs = [x] * n if np.isscalar(x) else list(x)
        if len(xs) != n or min(xs) < 1:
            raise ValueError(f"{name} sizes must be >= 1 with {n} entries, got {x!r}")
        return [int(v) for v in xs]

    sizes_S = per_step(S, H, "S") + [int(terminal_states)]
    sizes_A, sizes_B = per_step(A, H, "A"), per_step(B, H, "B")
    P, r, flags = [], [], []
    for h in range(H):
        shape = (sizes_S[h], sizes_A[h], sizes_B[h])
        P.append(rng.dirichlet(np.ones(sizes_S[h + 1]), size=shape))
        r.append(rng.random(shape))
        flags.append(np.full(shape, return_mode == "bernoulli"))
    return MarkovGame(tuple(P), tuple(r), tuple(flags))


# ---------------------------------------------------------------- transforms


def swap_roles(g: MarkovGame) -> MarkovGame:
    """The same game seen by the min player: axes swapped, returns ``1 - r``."""
    P = tuple(p.transpose(0, 2, 1, 3) for p in g.P)
    r = tuple(1.0 - x.transpose(0, 2, 1) for x in g.r)
    flags = None if g.bernoulli is None else tuple(f.transpose(0, 2, 1) for f in g.bernoulli)
    return MarkovGame(P, r, flags)


def duplicate_columns(g: MarkovGame, factor: int) -> MarkovGame:
    """Repeat each min-player action ``factor`` times (column ``b`` -> ``b*factor + j``)."""
    P = tuple(np.repeat(p, factor, axis=2) for p in g.P)
    r = tuple(np.repeat(x, factor, axis=2) for x in g.r)
    flags = None if g.bernoulli is None else tuple(np.repeat(f, factor, axis=2) for f in g.bernoulli)
    return MarkovGame(P, r, flags)


def split_policy(nu: Policy, factor: int) -> list[np.ndarray]:
    """Lift a min-player policy to the duplicated game by splitting mass evenly."""
    return [np.repeat(p, factor, axis=1) / factor for p in nu]


def induced_mdp(g: MarkovGame, nu: Policy) -> MarkovGame:
    """Average out the min player under ``nu``; the result has B = 1."""
    P, r, flags = [], [], []
    for h in range(g.H):
        w = np.asarray(nu[h])
        P.append(np.einsum("sabt,sb->sat", g.P[h], w)[:, :, None, :])
        r.append(np.einsum("sab,sb->sa", g.r[h], w)[:, :, None])
        if g.bernoulli is not None:
            support = (w > 0)[:, None, :]
            flags.append((g.bernoulli[h] & support).any(axis=2)[:, :, None])
    return MarkovGame(tuple(P), tuple(r), tuple(flags) if flags else None)


class JointActionCodec:
    """Mixed-radix codec for the opponents' joint action.

    Player 2 is the least significant digit: for radices ``(A_2, ..., A_m)``
    the tuple ``(b_2, ..., b_m)`` maps to ``b_2 + A_2 * (b_3 + A_3 * (...))``.
    """

    def __init__(self, radices_per_step):
        self.radices = [tuple(int(x) for x in rs) for rs in radices_per_step]

    def size(self, h) -> int:
        return math.prod(self.radices[h])

    def encode(self, h, actions) -> int:
        flat, scale = 0, 1
        for b, n in zip(actions, self.radices[h]):
            if not 0 <= b < n:
                raise IndexError(f"opponent action {b} out of range [0, {n}) at step {h}")
            flat += b * scale
            scale *= n
        return flat

    def decode(self, h, flat) -> tuple[int, ...]:
        if not 0 <= flat < self.size(h):
            raise IndexError(f"joint index {flat} out of range [0, {self.size(h)}) at step {h}")
        out = []
        for n in self.radices[h]:
            flat, b = divmod(flat, n)
            out.append(b)
        return tuple(out)


def to_player1_view(g: GeneralSumGame, max_joint=10**7) -> tuple[MarkovGame, JointActionCodec]:
    """Collapse players 2..m into one min player over the joint action space.

    Only player 1's return is kept; the result is the two-player zero-sum game
    player 1 effectively faces when all opponents collude.
    """
    if g.m < 2:
        raise ValueError("need at least two players")
    codec = JointActionCodec([g.action_sizes(h)[1:] for h in range(g.H)])
    P, r, flags = [], [], []
    for h in range(g.H):
        n_joint = codec.size(h)
        if n_joint > max_joint:
            raise CapacityError(f"joint opponent action space {n_joint} exceeds {max_joint} at step {h}")
        m = g.m
        # reverse opponent axes so a C-order reshape makes player 2 least significant
        order_p = (0, 1) + tuple(range(m, 1, -1)) + (m + 1,)
        order_r = (0, 1) + tuple(range(m, 1, -1))
        S, A1 = g.P[h].shape[:2]
        P.append(g.P[h].transpose(order_p).reshape(S, A1, n_joint, -1))
        r.append(g.r[0][h].transpose(order_r).reshape(S, A1, n_joint))
        if g.bernoulli is not None:
            flags.append(g.bernoulli[h].transpose(order_r).reshape(S, A1, n_joint))
    return MarkovGame(tuple(P), tuple(r), tuple(flags) if flags else None), codec


def random_general_sum_game(H, S, action_sizes, rng, terminal_states=1) -> GeneralSumGame:
    sizes_S = [int(S)] * H + [int(terminal_states)]
    P, rs = [], [[] for _ in action_sizes]
    for h in range(H):
        shape = (sizes_S[h], *action_sizes)
        P.append(rng.dirichlet(np.ones(sizes_S[h + 1]), size=shape))
        for ri in rs:
            ri.append(rng.random(shape))
    return GeneralSumGame(tuple(P), tuple(tuple(ri) for ri in rs))


# ---------------------------------------------------------------- JSON files


def game_to_dict(g: MarkovGame) -> dict:
    d = {
        "horizon": g.H,
        "sizes": {"S": g.sizes_S, "A": g.sizes_A, "B": g.sizes_B},
        "transitions": [p.tolist() for p in g.P],
        "returns": [x.tolist() for x in g.r],
    }
    if g.bernoulli is not None:
        d["bernoulli_flags"] = [f.tolist() for f in g.bernoulli]
    return d


def game_from_dict(d: dict, validate=True) -> MarkovGame:
    try:
        P = [np.asarray(p, dtype=float) for p in d["transitions"]]
        r = [np.asarray(x, dtype=float) for x in d["returns"]]
    except KeyError as e:
        raise InvalidGameError(f"game file missing field {e}") from None
    flags = d.get("bernoulli_flags")
    g = MarkovGame(tuple(P), tuple(r), None if flags is None else tuple(np.asarray(f, bool) for f in flags))
    if d.get("horizon", g.H) != g.H:
        raise InvalidGameError(f"horizon {d['horizon']} does not match {g.H} transition layers")
    sizes = d.get("sizes")
    if sizes is not None:
        for key, actual in (("S", g.sizes_S), ("A", g.sizes_A), ("B", g.sizes_B)):
            if key in sizes and list(sizes[key]) != actual:
                raise InvalidGameError(f"sizes.{key}={sizes[key]} does not match tensors {actual}")
    return check_game(g) if validate else g


def save_game(g: MarkovGame, path):
    with open(path, "w") as f:
        json.dump(game_to_dict(g), f)


def load_game(path) -> MarkovGame:
    with open(path) as f:
        return game_from_dict(json.load(f))
