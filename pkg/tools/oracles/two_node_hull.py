"""Brute-force oracle for the two-node one-step reachable interval.

Model: two nodes, u1 = stay (deterministic), u2 = move with success probability
0.5*(1 + (rho*mu(current) - (1-rho)*nu(current))). At mu=[1,0], nu=[0.5,0.5],
rho=0.5 the move probability from node 1 is 0.625.

Sweeps 10^4 random mixed local policies and records the min/max of the next
mu(x1); also reports the smallest achievable residual for the off-hull target
mu'(x1)=0.2 by interval arithmetic.
"""
import numpy as np

rng = np.random.default_rng(0)
rho = 0.5
mu = np.array([1.0, 0.0])
nu = np.array([0.5, 0.5])

# success probabilities for a move out of node 1 / node 2
p_move_1 = 0.5 * (1 + (rho * mu[0] - (1 - rho) * nu[0]))
p_move_2 = 0.5 * (1 + (rho * mu[1] - (1 - rho) * nu[1]))
assert p_move_1 == 0.625

lo, hi = 2.0, -1.0
for _ in range(10_000):
    a = rng.random()  # P(move | x1)
    b = rng.random()  # P(move | x2)
    # next mu(x1) = mass staying at 1 + mass arriving from 2
    nxt = mu[0] * ((1 - a) + a * (1 - p_move_1)) + mu[1] * b * p_move_2
    lo, hi = min(lo, nxt), max(hi, nxt)

print("sweep interval for mu'(x1):", (lo, hi))
# all mass sits on node 1, so the exact interval endpoints are
#   a=0 -> 1 (nobody moves), a=1 -> 1-0.625 = 0.375 (everyone tries)
assert abs(lo - 0.375) < 1e-3 and abs(hi - 1.0) < 1e-3

target = 0.2
residual = max(0.375 - target, target - 1.0, 0.0)
print("min residual for target 0.2:", residual)
assert residual == 0.175
