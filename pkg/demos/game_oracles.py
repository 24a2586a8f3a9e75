"""Minimax values, best responses and the best policy in hindsight."""

import numpy as np

from onlinemg.game import random_game
from onlinemg.oracle import best_policy_in_hindsight, best_response_value, evaluate_pair, minimax_values

rng = np.random.default_rng(1)
g = random_game(3, 3, 2, 2, rng)
print("layer sizes", g.sizes_S, "actions", g.sizes_A, g.sizes_B)

V, mu, nu = minimax_values(g)
print("V* at step 0:", np.round(V[0], 4))

# the Nash pair attains V*; a best response to nu* cannot beat it
print("value of (mu*, nu*):", np.round(evaluate_pair(g, mu, nu)[0], 4))
V_br, _ = best_response_value(g, nu)
print("best response to nu*:", np.round(V_br[0], 4))

# a weaker opponent: uniform play leaves room above V*
uniform = [np.full((n, 2), 0.5) for n in g.sizes_S[:-1]]
V_u, mu_u = best_response_value(g, uniform)
print("best response to uniform:", np.round(V_u[0], 4))

# one Markov policy against several opponents at once
opponents = [nu, uniform, nu]
mu_hat, total = best_policy_in_hindsight(g, opponents, [0, 1, 2])
print(f"best fixed policy over 3 episodes earns {total:.4f}")
