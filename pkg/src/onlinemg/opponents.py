"""Min-player strategies.

Every opponent publishes a Markov policy ``snapshot(k)`` for episode ``k``
(1-based) and samples its actions from exactly that policy, so the oracle can
score each episode exactly.  The harness calls, per episode::

    begin_episode(k, learner_policy)   # learner snapshot, boundary only
    act(k, h, s, rng) ...              # once per step
    observe(h, s, b, r, s_next)        # own action and the max player's return
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .game import MarkovGame, swap_roles, uniform_policy, validate_policy
from .oracle import best_response_value, minimax_values
from .vol import VOLearner, sample_action


class Opponent:
    kind = "base"
    learns = False  # True if snapshots change between episodes

    def begin_episode(self, k, learner_policy=None):
        pass

    def snapshot(self, k):
        raise NotImplementedError

    def act(self, k, h, s, rng):
        return sample_action(self.snapshot(k)[h][s], rng.random())

    def observe(self, h, s, b, r, s_next):
        pass


def opponent_act(o: Opponent, k, h, s, rng):
    return o.act(k, h, s, rng)


class FixedOpponent(Opponent):
    kind = "fixed"

    def __init__(self, policy):
        self.policy = [np.asarray(p, dtype=float) for p in policy]

    def snapshot(self, k):
        return self.policy


class NashOpponent(FixedOpponent):
    """Plays a minimax policy of the game, computed once."""

    kind = "nash"

    def __init__(self, g: MarkovGame, policy=None):
        if policy is None:
            policy = minimax_values(g)[2]
        super().__init__(policy)


class ScriptedOpponent(Opponent):
    """Replays ``nu^k`` from a list (cycled if shorter than the run) or a callable ``k -> policy``."""

    kind = "scripted"
    learns = True

    def __init__(self, script):
        self._script = script
        self._k = None
        self._current = None

    def begin_episode(self, k, learner_policy=None):
        self._current = self._lookup(k)
        self._k = k

    def _lookup(self, k):
        if callable(self._script):
            return self._script(k)
        return self._script[(k - 1) % len(self._script)]

    def snapshot(self, k):
        if k != self._k:
            return self._lookup(k)
        return self._current


class AdaptiveBestResponse(Opponent):
    """Best-responds to the learner's policy, refreshed at episodes ``1, m+1, 2m+1, ...``.

    ``period=None`` means the response is computed at episode 1 and kept.
    """

    kind = "adaptive_best_response"
    learns = True

    def __init__(self, g: MarkovGame, period=None):
        if period is not None and period < 1:
            raise ValueError("refresh period must be >= 1")
        self._swapped = swap_roles(g)
        self.period = period
        self.policy = uniform_policy(g.sizes_S, g.sizes_B)
        self.refreshes = 0

    def begin_episode(self, k, learner_policy=None):
        due = k == 1 if self.period is None else (k - 1) % self.period == 0
        if due:
            if learner_policy is None:
                raise ValueError("adaptive opponent needs the learner's policy snapshot")
            # in the swapped game the learner is the column player; returns 1 - r
            _, br = best_response_value(self._swapped, learner_policy)
            self.policy = br
            self.refreshes += 1

    def snapshot(self, k):
        return self.policy


def make_adaptive_best_response(g: MarkovGame, period=None) -> AdaptiveBestResponse:
    return AdaptiveBestResponse(g, period)


class SelfPlayMirror(Opponent):
    """A V-OL instance playing the min seat on complemented returns ``1 - r``.

    It only ever sees the state, its own action and the return, never ``a``.
    """

    kind = "self_play_mirror"
    learns = True

    def __init__(self, g: MarkovGame, K, G=None, c=2.0, p=0.01, clip_values=False):
        self.learner = VOLearner.for_game(swap_roles(g), K, G=G, c=c, p=p, clip_values=clip_values)

    def snapshot(self, k):
        return self.learner.policy()

    def act(self, k, h, s, rng):
        return self.learner.act(h, s, rng)

    def observe(self, h, s, b, r, s_next):
        self.learner.observe(h, s, b, 1.0 - r, s_next)


def make_self_play_mirror(g: MarkovGame, K, **hyper) -> SelfPlayMirror:
    return SelfPlayMirror(g, K, **hyper)


def hard_lock_script(nu_for, H, rng):
    """Scripted opponent drawing a fresh ``Y ~ Unif({0,1}^H)`` each episode.

    ``nu_for`` maps a bit array ``Y`` to the min-player policy; the drawn
    ``Y`` sequence is kept on ``.ys``.
    """
    ys = []

    def script(k):
        while len(ys) < k:
            ys.append(rng.integers(0, 2, size=H))
        return nu_for(ys[k - 1])

    o = ScriptedOpponent(script)
    o.ys = ys
    return o


@dataclass
class OpponentSpec:
    kind: str
    options: dict


def load_script(path_or_obj, g: MarkovGame) -> ScriptedOpponent:
    """Read a scripted opponent: ``{"policies": [nu^1, nu^2, ...]}`` (JSON file or dict)."""
    if isinstance(path_or_obj, (str, bytes)) or hasattr(path_or_obj, "__fspath__"):
        with open(path_or_obj) as f:
            obj = json.load(f)
    else:
        obj = path_or_obj
    policies = []
    for i, raw in enumerate(obj["policies"]):
        pol = [np.asarray(p, dtype=float) for p in raw]
        problems = validate_policy(pol, g.sizes_S, g.sizes_B)
        if problems:
            raise ValueError(f"scripted policy {i}: {problems[0]}")
        policies.append(pol)
    if not policies:
        raise ValueError("script has no policies")
    return ScriptedOpponent(policies)
