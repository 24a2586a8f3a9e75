"""Optimistic V-learning for online play in unknown Markov games.

The learner keeps, per step and state, a value estimate ``V``, an
importance-weighted cumulative loss ``L`` over its own actions, a visit count
``N`` and a policy ``mu``.  Nothing is indexed by the opponent's action, so
memory and updates depend only on ``(H, S, A)``.

Schedules, with ``t`` the post-increment visit count of ``(h, s)``::

    alpha_t = (G H + 1) / (G H + t)
    beta_t  = c * sqrt(G H^3 A iota / t)
    eta_t   = sqrt(G H log(A) / (A t))
    iota    = log(H S A K / p)        (natural log)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def alpha(t, G, H):
    if t < 1:
        raise ValueError("t must be >= 1")
    return (G * H + 1) / (G * H + t)


def beta(t, G, H, A, iota, c):
    if t < 1:
        raise ValueError("t must be >= 1")
    return c * math.sqrt(G * H**3 * A * iota / t)


def eta(t, G, H, A):
    if t < 1:
        raise ValueError("t must be >= 1")
    return math.sqrt(G * H * math.log(A) / (A * t))


def alpha_weights(t, G, H):
    """Effective weights of past samples after ``t`` updates.

    Returns ``(alpha_t^0, w)`` with ``w[i-1] = alpha_i * prod_{j=i+1}^t (1 - alpha_j)``.
    For ``t = 0`` there are no samples and ``alpha_0^0 = 1`` (empty product);
    for ``t >= 1`` the weights sum to one and ``alpha_t^0 = 0``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 1.0, np.zeros(0)
    j = np.arange(1, t + 1, dtype=float)
    a = (G * H + 1) / (G * H + j)
    keep = 1.0 - a
    # suffix[i] = prod_{j > i} (1 - alpha_j) for 0-based i
    suffix = np.ones(t)
    suffix[:-1] = np.cumprod(keep[::-1])[::-1][1:]
    return float(np.prod(keep)), a * suffix


def choose_G(K, H, S, A):
    """Aggressiveness that balances the two regret terms for a known ``K``."""
    if K >= H**3 * S * A:
        return (K / (S * A)) ** (1.0 / 3.0) / H
    return K ** (1.0 / 3.0)


@dataclass
class VolHyper:
    H: int
    S: int
    A: int
    K: int
    G: float = 1.0
    c: float = 2.0
    p: float = 0.01
    clip_values: bool = False

    def __post_init__(self):
        if self.G < 1:
            raise ValueError(f"G must be >= 1, got {self.G}")
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")

    @property
    def iota(self):
        return math.log(self.H * self.S * self.A * self.K / self.p)


@dataclass
class VolState:
    V: list  # V[h] (S_h,), plus a zero terminal layer V[H]
    L: list  # L[h] (S_h, A_h)
    N: list  # N[h] (S_h,) int
    mu: list  # mu[h] (S_h, A_h)

    @classmethod
    def fresh(cls, sizes_S, sizes_A):
        H = len(sizes_A)
        V = [np.full(sizes_S[h], float(H)) for h in range(H)] + [np.zeros(sizes_S[H])]
        L = [np.zeros((sizes_S[h], sizes_A[h])) for h in range(H)]
        N = [np.zeros(sizes_S[h], dtype=np.int64) for h in range(H)]
        mu = [np.full((sizes_S[h], sizes_A[h]), 1.0 / sizes_A[h]) for h in range(H)]
        return cls(V, L, N, mu)

    def nbytes(self):
        return sum(x.nbytes for tab in (self.V, self.L, self.N, self.mu) for x in tab)

    def to_dict(self):
        return {name: [x.tolist() for x in getattr(self, name)] for name in ("V", "L", "N", "mu")}

    @classmethod
    def from_dict(cls, d):
        return cls(
            [np.asarray(x, float) for x in d["V"]],
            [np.asarray(x, float) for x in d["L"]],
            [np.asarray(x, np.int64) for x in d["N"]],
            [np.asarray(x, float) for x in d["mu"]],
        )


def sample_action(probs, u):
    """Inverse-CDF draw from a small probability vector given ``u ~ U[0, 1)``."""
    acc = 0.0
    last = len(probs) - 1
    for a, p in enumerate(probs):
        acc += p
        if u < acc:
            return a
    return last


def act(state: VolState, h, s, rng):
    return sample_action(state.mu[h][s], rng.random())


def observe(state: VolState, hyper: VolHyper, h, s, a, r, s_next):
    """Apply one V-OL update at ``(h, s)`` after playing ``a``.

    The opponent's action is deliberately not a parameter.
    """
    H = hyper.H
    GH = hyper.G * H
    A = hyper.A
    N = state.N[h]
    N[s] += 1
    t = int(N[s])
    alpha_t = (GH + 1) / (GH + t)
    beta_t = hyper.c * math.sqrt(GH * H * H * A * hyper.iota / t)
    eta_t = math.sqrt(GH * math.log(A) / (A * t)) if A > 1 else 0.0

    v_next = float(state.V[h + 1][s_next])
    V = state.V[h]
    V[s] = (1 - alpha_t) * V[s] + alpha_t * (r + v_next + beta_t)
    if hyper.clip_values:
        V[s] = min(max(V[s], 0.0), H - h)

    mu = state.mu[h][s]
    L = state.L[h][s]
    loss = (H - r - v_next) / (mu[a] + eta_t)
    keep = 1 - alpha_t
    scale = -eta_t / alpha_t
    # python floats: tabular rows are short and numpy call overhead dominates
    Ls = [x * keep for x in L.tolist()]
    Ls[a] += alpha_t * loss
    z = [scale * x for x in Ls]
    top = max(z)
    w = [math.exp(v - top) for v in z]
    total = sum(w)
    L[:] = Ls
    mu[:] = [x / total for x in w]
    return state


class VOLearner:
    """Stateful wrapper used by the experiment harness."""

    informed = False

    def __init__(self, sizes_S, sizes_A, hyper: VolHyper):
        self.hyper = hyper
        self.state = VolState.fresh(sizes_S, sizes_A)

    @classmethod
    def for_game(cls, g, K, G=None, c=2.0, p=0.01, clip_values=False):
        G = choose_G(K, g.H, g.S, g.A) if G is None else G
        hyper = VolHyper(g.H, g.S, g.A, K, max(1.0, G), c, p, clip_values)
        return cls(g.sizes_S, g.sizes_A, hyper)

    def begin_episode(self, k):
        pass

    def act(self, h, s, rng):
        return sample_action(self.state.mu[h][s], rng.random())

    def observe(self, h, s, a, r, s_next):
        observe(self.state, self.hyper, h, s, a, r, s_next)

    def policy(self):
        return self.state.mu

    def value(self, h, s):
        return float(self.state.V[h][s])

    def snapshot_json(self):
        return json.dumps({"hyper": vars(self.hyper), "state": self.state.to_dict()})


@dataclass
class DoublingLearner:
    """Anytime V-OL: epoch ``j`` covers episodes ``2^j .. 2^{j+1}-1`` (1-based)
    and runs a fresh learner tuned for ``K_j = 2^j``."""

    factory: object  # K_j -> learner
    epoch: int = -1
    inner: object = field(default=None, repr=False)

    informed = False

    @staticmethod
    def epoch_of(k):
        return k.bit_length() - 1

    def begin_episode(self, k):
        j = self.epoch_of(k)
        if j != self.epoch:
            self.epoch = j
            self.inner = self.factory(2**j)
        self.inner.begin_episode(k)

    def act(self, h, s, rng):
        return self.inner.act(h, s, rng)

    def observe(self, h, s, a, r, s_next):
        self.inner.observe(h, s, a, r, s_next)

    def policy(self):
        return self.inner.policy()

    def value(self, h, s):
        return self.inner.value(h, s)

    @property
    def hyper(self):
        return self.inner.hyper


def doubling_wrapper(factory, H=None, S=None, A=None):
    """Wrap ``factory(K, G)`` into an anytime learner using ``choose_G`` per epoch.

    If ``H``, ``S``, ``A`` are given, ``factory`` receives ``(K_j, choose_G(K_j, H, S, A))``;
    otherwise it receives ``K_j`` alone.
    """
    if H is None:
        return DoublingLearner(factory)
    return DoublingLearner(lambda K: factory(K, max(1.0, choose_G(K, H, S, A))))


class UniformLearner:
    """Baseline that ignores all feedback."""

    informed = False

    def __init__(self, sizes_S, sizes_A):
        self._mu = [np.full((sizes_S[h], n), 1.0 / n) for h, n in enumerate(sizes_A)]

    def begin_episode(self, k):
        pass

    def act(self, h, s, rng):
        return sample_action(self._mu[h][s], rng.random())

    def observe(self, h, s, a, r, s_next):
        pass

    def policy(self):
        return self._mu

    def value(self, h, s):
        return float("nan")
