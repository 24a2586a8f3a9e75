"""Zero-sum matrix games: exact equilibria with a duality-gap certificate."""

import numpy as np

from onlinemg.matrix import best_response_row, solve_zero_sum

# matching pennies and rock-paper-scissors have uniform equilibria
for name, M in [
    ("matching pennies", [[1, -1], [-1, 1]]),
    ("rock-paper-scissors", [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]),
]:
    cert = solve_zero_sum(M)
    print(f"{name}: value {cert.value:+.3f}, x {cert.x}, y {cert.y}, gap {cert.gap:.1e}")

# a random 6x4 game; the certificate brackets the value
rng = np.random.default_rng(0)
M = rng.random((6, 4))
cert = solve_zero_sum(M)
print(f"random 6x4: value {cert.value:.6f} in [{cert.lower:.6f}, {cert.upper:.6f}]")
print("support of x:", np.flatnonzero(cert.x > 1e-12))

# against the min player's equilibrium mix no row does better than the value
a, v = best_response_row(M, cert.y)
print(f"best row vs y: {a} earns {v:.6f}")
