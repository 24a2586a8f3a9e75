"""Combination-lock hard instances and the bandit reduction.

Indexing.  A spec with ``H`` bits builds a game with ``H + 1`` steps,
indexed ``0..H``.  Step 0 has the single start state; steps ``1..H`` have two
states ``w in {0, 1}``; the final transition leads to a single terminal state.
So internal step ``h`` is exactly the ``h``-th bit position (``x_h = X[h-1]``).

Returns are zero except at step ``H``, where they are Bernoulli with mean
``1/2 + eps`` on the good path and ``1/2 - eps`` otherwise.  Staying on the
good path at step ``H`` also requires ``a_H = x_H xor y_H``, the same rule as
every earlier step, so the optimal action sequence is exactly ``X xor Y``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .game import MarkovGame


@dataclass(frozen=True)
class HardInstanceSpec:
    H: int
    X: tuple
    Y: tuple
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "X", tuple(int(x) for x in self.X))
        object.__setattr__(self, "Y", tuple(int(y) for y in self.Y))
        if self.H < 1:
            raise ValueError("H must be >= 1")
        for name, bits in (("X", self.X), ("Y", self.Y)):
            if len(bits) != self.H or any(b not in (0, 1) for b in bits):
                raise ValueError(f"{name} must be a bit string of length {self.H}")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")


def epsilon_hk(H, K):
    if H < 1 or K < 1:
        raise ValueError("H and K must be >= 1")
    return min(math.sqrt(2.0**H / K), 0.25)


def _layer_sizes(H):
    return [1] + [2] * H + [1]


def _terminal_returns(eps, high):
    return np.where(high, 0.5 + eps, 0.5 - eps)


def combination_lock_mdp(spec: HardInstanceSpec) -> MarkovGame:
    """The lock MDP as a game with a single min-player action."""
    H, X, Y, eps = spec.H, spec.X, spec.Y, spec.eps
    sizes = _layer_sizes(H)
    P, r, flags = [], [], []
    # step 0: uniform over the first layer whatever the action
    P.append(np.full((1, 2, 1, 2), 0.5))
    r.append(np.zeros((1, 2, 1)))
    flags.append(np.zeros((1, 2, 1), dtype=bool))
    for h in range(1, H + 1):
        x, y = X[h - 1], Y[h - 1]
        n_next = sizes[h + 1]
        Ph = np.zeros((2, 2, 1, n_next))
        high = np.zeros((2, 2, 1), dtype=bool)
        for w in range(2):
            for a in range(2):
                good = w == y and a == x ^ y
                if h < H:
                    y_next = Y[h]
                    Ph[w, a, 0, y_next if good else 1 - y_next] = 1.0
                else:
                    Ph[w, a, 0, 0] = 1.0
                    high[w, a, 0] = good
        P.append(Ph)
        if h < H:
            r.append(np.zeros((2, 2, 1)))
            flags.append(np.zeros((2, 2, 1), dtype=bool))
        else:
            r.append(_terminal_returns(eps, high))
            flags.append(np.ones((2, 2, 1), dtype=bool))
    return MarkovGame(tuple(P), tuple(r), tuple(flags))


# Min-player moves from state i given max action a (b indexed 0..3):
#   0 keeps i, 1 flips i, 2 gives i xor a, 3 gives i xor a xor 1.
def successor(i, a, b):
    return (i, 1 - i, i ^ a, i ^ a ^ 1)[b]


def hard_markov_game(H, X, eps):
    """Two-player wrapper where the min player's ``b`` steers every transition.

    Returns ``(game, nu_for)`` with ``nu_for(Y)`` the deterministic min-player
    policy under which the max player faces ``combination_lock_mdp`` with
    that ``Y``.  The last step routes to a virtual target ``0``: its return is
    high iff the move would land there.
    """
    X = tuple(int(x) for x in X)
    if len(X) != H:
        raise ValueError(f"X must have {H} bits")
    sizes = _layer_sizes(H)
    P, r, flags = [], [], []
    P.append(np.full((1, 2, 4, 2), 0.5))
    r.append(np.zeros((1, 2, 4)))
    flags.append(np.zeros((1, 2, 4), dtype=bool))
    succ = np.array([[[successor(i, a, b) for b in range(4)] for a in range(2)] for i in range(2)])
    for h in range(1, H + 1):
        if h < H:
            Ph = np.zeros((2, 2, 4, 2))
            for idx in np.ndindex(2, 2, 4):
                Ph[idx + (succ[idx],)] = 1.0
            P.append(Ph)
            r.append(np.zeros((2, 2, 4)))
            flags.append(np.zeros((2, 2, 4), dtype=bool))
        else:
            P.append(np.ones((2, 2, 4, 1)))
            r.append(_terminal_returns(eps, succ == 0))
            flags.append(np.ones((2, 2, 4), dtype=bool))
    game = MarkovGame(tuple(P), tuple(r), tuple(flags))
    assert game.sizes_S == sizes

    def nu_for(Y):
        Y = [int(y) for y in Y]
        if len(Y) != H:
            raise ValueError(f"Y must have {H} bits")
        pol = [np.zeros((1, 4))]
        pol[0][0, 0] = 1.0
        for h in range(1, H + 1):
            x, y = X[h - 1], Y[h - 1]
            target = Y[h] if h < H else 0
            p = np.zeros((2, 4))
            # good state: successor is the target iff a == x xor y
            p[y, 3 if x ^ target else 2] = 1.0
            # bad state: always the non-target successor
            bad = 1 - y
            p[bad, 0 if bad == 1 - target else 1] = 1.0
            pol.append(p)
        return pol

    return game, nu_for


def optimal_lock_policy(X):
    """``a = x_h xor w`` at state ``w`` of step ``h``; action 0 at the start."""
    H = len(X)
    pol = [np.array([[1.0, 0.0]])]
    for h in range(1, H + 1):
        p = np.zeros((2, 2))
        for w in range(2):
            p[w, X[h - 1] ^ w] = 1.0
        pol.append(p)
    return pol


def deviating_lock_policy(X, step=1):
    """The optimal policy with every action flipped at ``step``."""
    pol = optimal_lock_policy(X)
    pol[step] = pol[step][:, ::-1].copy()
    return pol


# ---------------------------------------------------------------- bandit reduction


@dataclass
class ReductionResult:
    rewards: np.ndarray  # (K,)
    arms: np.ndarray  # (K, H) bits A xor Y
    actions: np.ndarray  # (K, H) learner actions at steps 1..H
    ys: np.ndarray  # (K, H)


def bandit_reduction_run(learner, X, H, K, rng, eps=None) -> ReductionResult:
    """Drive an episodic learner with a ``2^H``-armed bandit.

    Each episode draws ``Y``, shows the learner the path ``s_0, y_1, ..., y_H``,
    pulls arm ``A xor Y`` (mean 1/2 if it equals ``X``, else ``1/2 - eps``)
    and hands the reward back as the last step's return.  ``learner`` must
    follow the ``begin_episode / act / observe`` protocol on the lock's state
    layout.
    """
    X = np.asarray(X, dtype=int)
    eps = epsilon_hk(H, K) if eps is None else eps
    rewards = np.zeros(K)
    arms = np.zeros((K, H), dtype=int)
    acts = np.zeros((K, H), dtype=int)
    ys = np.zeros((K, H), dtype=int)
    for k in range(K):
        Y = rng.integers(0, 2, size=H)
        ys[k] = Y
        learner.begin_episode(k + 1)
        a0 = learner.act(0, 0, rng)
        learner.observe(0, 0, a0, 0.0, int(Y[0]))
        for h in range(1, H + 1):
            s = int(Y[h - 1])
            acts[k, h - 1] = learner.act(h, s, rng)
            if h < H:
                learner.observe(h, s, acts[k, h - 1], 0.0, int(Y[h]))
        arm = acts[k] ^ Y
        arms[k] = arm
        mean = 0.5 if np.array_equal(arm, X) else 0.5 - eps
        rewards[k] = float(rng.random() < mean)
        learner.observe(H, int(Y[H - 1]), acts[k, H - 1], rewards[k], 0)
    return ReductionResult(rewards, arms, acts, ys)


def reduction_atoms(policy, X, eps):
    """Exact law of ``(w_1..w_H, a_1..a_H, reward)`` under the reduction.

    ``policy`` is a Markov policy on the lock layout; the step-0 action is
    marginalised out.  Returns ``{(w, a, r): probability}``.
    """
    H = len(X)
    X = tuple(X)
    atoms = {}
    for w in itertools.product((0, 1), repeat=H):
        for a in itertools.product((0, 1), repeat=H):
            p = 0.5**H
            for h in range(H):
                p *= policy[h + 1][w[h], a[h]]
            arm = tuple(ai ^ wi for ai, wi in zip(a, w))
            mean = 0.5 if arm == X else 0.5 - eps
            atoms[(w, a, 1)] = p * mean
            atoms[(w, a, 0)] = p * (1 - mean)
    return atoms


def direct_atoms(policy, X, eps):
    """Same law under direct play of ``combination_lock_mdp`` with ``Y`` uniform.

    Computed by forward enumeration through the game tensors.
    """
    H = len(X)
    atoms = {}
    for Y in itertools.product((0, 1), repeat=H):
        g = combination_lock_mdp(HardInstanceSpec(H, X, Y, eps))
        # forward over (states seen, actions taken); step 0 action marginalised
        paths = {((), ()): 0.0}
        start = {}
        for a0 in range(2):
            for w1 in range(2):
                start[w1] = start.get(w1, 0.0) + policy[0][0, a0] * g.P[0][0, a0, 0, w1]
        paths = {((w1,), ()): pr for w1, pr in start.items()}
        for h in range(1, H + 1):
            nxt = {}
            for (ws, as_), pr in paths.items():
                w = ws[-1]
                for a in range(2):
                    pa = pr * policy[h][w, a]
                    if h < H:
                        for w2 in range(2):
                            q = pa * g.P[h][w, a, 0, w2]
                            if q:
                                key = (ws + (w2,), as_ + (a,))
                                nxt[key] = nxt.get(key, 0.0) + q
                    else:
                        mean = g.r[h][w, a, 0]
                        for rew, q in ((1, pa * mean), (0, pa * (1 - mean))):
                            key = (ws, as_ + (a,), rew)
                            nxt[key] = nxt.get(key, 0.0) + q
            paths = nxt
        for key, pr in paths.items():
            atoms[key] = atoms.get(key, 0.0) + pr * 0.5**H
    return atoms
