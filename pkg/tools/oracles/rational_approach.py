"""How close can a small-team empirical distribution get to 1/sqrt(3)?

The discontinuous-reward fixture pays on a TV ball of radius 0.005 around
(1/sqrt3, 1-1/sqrt3). This oracle verifies the radius is strictly below the
closest rational approach k/N for every team size N <= 16, so the exact
finite-population value is 0 there, and reports which G=100 grid points fall
inside the ball (the discretized solver must see exactly one).
"""
import math

target = 1 / math.sqrt(3)

best = min(
    (abs(k / n - target), k, n) for n in range(1, 17) for k in range(n + 1)
)
print("closest rational approach for N<=16:", best)
assert best[0] > 0.005, "fixture radius must separate all N<=16 EDs"

inside = [i for i in range(101) if abs(i / 100 - target) <= 0.005]
print("G=100 grid points inside the ball:", inside)
assert inside == [58]
