"""Optimistic Nash Q-learning for online play in informed Markov games.

Unlike V-OL this learner needs the opponent's action every step: it keeps a
joint-action table ``Q[h][s, a, b]`` and re-solves the stage matrix game at
the visited state after each update.  Memory grows linearly in ``B``.

Schedules: ``alpha_t = (H + 1) / (H + t)``, ``beta_t = c * sqrt(H^3 iota / t)``
with ``iota = log(H S A K / p)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .matrix import LEARNER_TOL, solve_zero_sum
from .vol import sample_action


@dataclass
class QolHyper:
    H: int
    S: int
    A: int
    K: int
    c: float = 2.0
    p: float = 0.01
    solver_tol: float = LEARNER_TOL

    @property
    def iota(self):
        return math.log(self.H * self.S * self.A * self.K / self.p)


@dataclass
class QolState:
    Q: list  # Q[h] (S_h, A_h, B_h)
    N: list  # N[h] (S_h, A_h, B_h) int
    V: list  # V[h] (S_h,), plus zero terminal layer
    mu: list  # mu[h] (S_h, A_h)
    nu: list  # nu[h] (S_h, B_h); uniform before the first solve at a state

    @classmethod
    def fresh(cls, sizes_S, sizes_A, sizes_B):
        H = len(sizes_A)
        shape = [(sizes_S[h], sizes_A[h], sizes_B[h]) for h in range(H)]
        return cls(
            [np.full(sh, float(H)) for sh in shape],
            [np.zeros(sh, dtype=np.int64) for sh in shape],
            [np.full(sizes_S[h], float(H)) for h in range(H)] + [np.zeros(sizes_S[H])],
            [np.full((sizes_S[h], sizes_A[h]), 1.0 / sizes_A[h]) for h in range(H)],
            [np.full((sizes_S[h], sizes_B[h]), 1.0 / sizes_B[h]) for h in range(H)],
        )

    def nbytes(self):
        return sum(x.nbytes for tab in (self.Q, self.N, self.V, self.mu, self.nu) for x in tab)

    def to_dict(self):
        return {name: [x.tolist() for x in getattr(self, name)] for name in ("Q", "N", "V", "mu", "nu")}


def qol_act(state: QolState, h, s, rng):
    return sample_action(state.mu[h][s], rng.random())


def qol_observe(state: QolState, hyper: QolHyper, h, s, a, b, r, s_next):
    if b is None:
        raise ValueError("Q-OL only works in informed games: the opponent's action b is required")
    H = hyper.H
    N = state.N[h][s]
    N[a, b] += 1
    t = int(N[a, b])
    alpha_t = (H + 1) / (H + t)
    beta_t = hyper.c * math.sqrt(H**3 * hyper.iota / t)
    Q = state.Q[h][s]
    Q[a, b] = (1 - alpha_t) * Q[a, b] + alpha_t * (r + state.V[h + 1][s_next] + beta_t)

    warm = (state.mu[h][s], state.nu[h][s])
    cert = solve_zero_sum(Q, hyper.solver_tol, warm=warm)
    state.mu[h][s] = cert.x
    state.nu[h][s] = cert.y
    state.V[h][s] = float(cert.x @ Q @ cert.y)
    return state


class QOLearner:
    informed = True

    def __init__(self, sizes_S, sizes_A, sizes_B, hyper: QolHyper):
        self.hyper = hyper
        self.state = QolState.fresh(sizes_S, sizes_A, sizes_B)

    @classmethod
    def for_game(cls, g, K, c=2.0, p=0.01, solver_tol=LEARNER_TOL):
        return cls(g.sizes_S, g.sizes_A, g.sizes_B, QolHyper(g.H, g.S, g.A, K, c, p, solver_tol))

    def begin_episode(self, k):
        pass

    def act(self, h, s, rng):
        return sample_action(self.state.mu[h][s], rng.random())

    def observe(self, h, s, a, r, s_next, b=None):
        qol_observe(self.state, self.hyper, h, s, a, b, r, s_next)

    def policy(self):
        return self.state.mu

    def value(self, h, s):
        return float(self.state.V[h][s])

    def snapshot_json(self):
        return json.dumps({"hyper": vars(self.hyper), "state": self.state.to_dict()})
