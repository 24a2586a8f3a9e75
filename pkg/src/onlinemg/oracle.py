"""Exact ground truth by backward induction.

Value tables are lists ``V[0..H]`` with ``V[H] == 0``.  Bernoulli returns are
always taken in expectation, so nothing here is random.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError, SolverError
from .game import MarkovGame, Policy
from .matrix import ORACLE_TOL, solve_zero_sum


def _check_policy(g: MarkovGame, pi: Policy, sizes_n, who):
    if len(pi) != g.H:
        raise ValueError(f"{who} policy has {len(pi)} steps, game has {g.H}")
    for h in range(g.H):
        shape = np.shape(pi[h])
        if shape != (g.sizes_S[h], sizes_n[h]):
            raise ValueError(f"{who} policy at step {h} has shape {shape}, expected {(g.sizes_S[h], sizes_n[h])}")


def zero_values(g: MarkovGame) -> list[np.ndarray]:
    return [np.zeros(n) for n in g.sizes_S]


def minimax_values(g: MarkovGame, tol=ORACLE_TOL):
    """Minimax values ``V*`` and a Nash policy pair ``(mu*, nu*)``.

    Each stage game ``r_h + P_h V*_{h+1}`` is solved to duality gap ``tol``,
    so ``V*`` is accurate to ``H * tol``.
    """
    V = zero_values(g)
    mu = [None] * g.H
    nu = [None] * g.H
    for h in reversed(range(g.H)):
        Q = g.r[h] + g.P[h] @ V[h + 1]
        S = Q.shape[0]
        mu[h] = np.zeros(Q.shape[:2])
        nu[h] = np.zeros((S, Q.shape[2]))
        for s in range(S):
            cert = solve_zero_sum(Q[s], tol)
            if not cert.converged:
                raise SolverError(f"stage game at h={h}, s={s} stuck at gap {cert.gap:.3g}", h, s, cert)
            V[h][s] = cert.value
            mu[h][s] = cert.x
            nu[h][s] = cert.y
    return V, mu, nu


def q_values(g: MarkovGame, V, h) -> np.ndarray:
    """``Q_h(s, a, b) = r_h + P_h V_{h+1}`` for a given next-step value table."""
    return g.r[h] + g.P[h] @ V[h + 1]


def evaluate_pair(g: MarkovGame, mu: Policy, nu: Policy) -> list[np.ndarray]:
    """Exact ``V^{mu, nu}`` from the Bellman equations."""
    _check_policy(g, mu, g.sizes_A, "max-player")
    _check_policy(g, nu, g.sizes_B, "min-player")
    V = zero_values(g)
    for h in reversed(range(g.H)):
        Q = g.r[h] + g.P[h] @ V[h + 1]
        V[h] = np.einsum("sa,sab,sb->s", mu[h], Q, nu[h])
    return V


def best_response_value(g: MarkovGame, nu: Policy):
    """Max-player best response to a fixed ``nu``: ``(V^{dagger, nu}, mu_dagger)``.

    ``mu_dagger`` is deterministic; ties go to the lowest action index.
    """
    _check_policy(g, nu, g.sizes_B, "min-player")
    V = zero_values(g)
    mu = []
    for h in reversed(range(g.H)):
        Qa = np.einsum("sab,sb->sa", g.r[h] + g.P[h] @ V[h + 1], nu[h])
        best = np.argmax(Qa, axis=1)
        V[h] = Qa[np.arange(Qa.shape[0]), best]
        onehot = np.zeros_like(Qa)
        onehot[np.arange(Qa.shape[0]), best] = 1.0
        mu.append(onehot)
    return V, mu[::-1]


class PairEvaluator:
    """Fast repeated ``V_1^{mu, nu}(s)`` for a fixed game.

    The min player is marginalised out once per distinct ``nu`` object, so a
    stationary opponent costs one small matrix-vector product per step.
    """

    def __init__(self, g: MarkovGame):
        self.g = g
        self._nu = None
        self._marg = None

    def _marginals(self, nu):
        if nu is not self._nu:
            g = self.g
            self._marg = [
                (np.einsum("sab,sb->sa", g.r[h], nu[h]), np.einsum("sabt,sb->sat", g.P[h], nu[h]))
                for h in range(g.H)
            ]
            self._nu = nu
        return self._marg

    def values(self, mu, nu):
        marg = self._marginals(nu)
        V = np.zeros(self.g.sizes_S[-1])
        out = [V]
        for h in reversed(range(self.g.H)):
            R, P = marg[h]
            V = ((R + P @ V) * mu[h]).sum(axis=1)
            out.append(V)
        return out[::-1]

    def value(self, mu, nu, s):
        return float(self.values(mu, nu)[0][s])


def best_policy_in_hindsight(g: MarkovGame, nus, initials, max_nodes=2_000_000, max_entries=5 * 10**7):
    """Best fixed Markov policy against a realised opponent sequence.

    Maximises ``sum_k V_1^{mu, nu^k}(s_1^k)`` over all Markov policies ``mu``.
    The objective is multilinear in the per-state action distributions, so a
    deterministic maximiser exists; we find it by depth-first branch and bound
    over the (step, state) decisions in forward order.  A node's bound lets
    every episode play its own best response from the undecided decisions on,
    which is exact for the remaining value of each episode individually.

    Episodes that share both the opponent policy and the initial state are
    merged first, so a stationary opponent costs the same as ``K = 1``.

    Returns ``(mu_hat, total)``.  Raises ``CapacityError`` when the per-episode
    tables would exceed ``max_entries`` floats or the search exceeds
    ``max_nodes`` nodes.
    """
    K = len(nus)
    if K == 0 or len(initials) != K:
        raise ValueError("need one initial state per opponent policy and K >= 1")
    for k, nu in enumerate(nus):
        _check_policy(g, nu, g.sizes_B, f"opponent {k}")
    H, sizes_S, sizes_A = g.H, g.sizes_S, g.sizes_A
    # identical (nu, s_1) episodes collapse into one weighted episode
    groups = {}
    for nu, s1 in zip(nus, initials):
        key = (int(s1), tuple(np.asarray(p, dtype=float).tobytes() for p in nu))
        if key in groups:
            groups[key][2] += 1.0
        else:
            groups[key] = [nu, int(s1), 1.0]
    nus = [v[0] for v in groups.values()]
    initials = [v[1] for v in groups.values()]
    counts = np.array([v[2] for v in groups.values()])
    K = len(nus)
    if sum(sizes_S[:-1]) > 500:
        raise CapacityError("hindsight search supports at most 500 (step, state) decisions")
    entries = K * sum(sizes_S[h] * sizes_A[h] * (sizes_S[h + 1] + 1) for h in range(H))
    if entries > max_entries:
        raise CapacityError(f"hindsight tables need {entries} floats (> {max_entries}); reduce K or the game size")

    # per-episode marginals: R[h] (K, S, A), P[h] (K, S, A, S')
    R, P = [], []
    for h in range(H):
        nu_h = np.stack([np.asarray(nu[h]) for nu in nus])
        R.append(np.einsum("sab,ksb->ksa", g.r[h], nu_h))
        P.append(np.einsum("sabt,ksb->ksat", g.P[h], nu_h))
    # per-episode best-response values, the bound ingredient
    BR = [None] * (H + 1)
    BR[H] = np.zeros((K, sizes_S[H]))
    for h in reversed(range(H)):
        BR[h] = (R[h] + np.einsum("ksat,kt->ksa", P[h], BR[h + 1])).max(axis=2)

    d0 = np.zeros((K, sizes_S[0]))
    d0[np.arange(K), np.asarray(initials, dtype=int)] = counts

    actions = [np.zeros(n, dtype=int) for n in sizes_S[:-1]]
    best = {"value": -np.inf, "actions": None}
    nodes = [0]
    scale_tol = 1e-12 * max(1.0, counts.sum() * H)

    def layer(h, d, acc):
        if h == H:
            if acc > best["value"]:
                best["value"] = acc
                best["actions"] = [a.copy() for a in actions]
            return
        reach = d.sum(axis=0)
        # undecided bound for each state of this layer
        state_bound = (d * BR[h]).sum(axis=0)
        nxt = np.zeros((K, sizes_S[h + 1]))
        decide(h, 0, d, reach, state_bound, state_bound.sum(), nxt, acc)

    def decide(h, s, d, reach, state_bound, rest_bound, nxt, acc):
        nodes[0] += 1
        if nodes[0] > max_nodes:
            raise CapacityError(f"hindsight search exceeded {max_nodes} nodes")
        if s == sizes_S[h]:
            layer(h + 1, nxt, acc)
            return
        rest_bound -= state_bound[s]
        if reach[s] == 0.0:
            actions[h][s] = 0
            decide(h, s + 1, d, reach, state_bound, rest_bound, nxt, acc)
            return
        w = d[:, s]
        gains = w @ R[h][:, s, :]  # (A,)
        flows = w[:, None, None] * P[h][:, s, :, :]  # (K, A, S')
        cont = np.einsum("kat,kt->a", flows, BR[h + 1])
        nxt_bound = (nxt * BR[h + 1]).sum()
        bounds = acc + gains + cont + nxt_bound + rest_bound
        for a in np.argsort(-bounds, kind="stable"):
            if bounds[a] <= best["value"] + scale_tol:
                break
            actions[h][s] = a
            decide(h, s + 1, d, reach, state_bound, rest_bound, nxt + flows[:, a, :], acc + gains[a])

    layer(0, d0, 0.0)
    mu_hat = [np.eye(sizes_A[h])[actions_h] for h, actions_h in enumerate(best["actions"])]
    return mu_hat, float(best["value"])
