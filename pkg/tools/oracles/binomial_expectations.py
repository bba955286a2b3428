"""Exact binomial-expectation oracle for the matching-game fixture.

A team of N1 agents starts all on x1 and each independently stays with
probability q = 1/sqrt(2). The fraction staying determines the opposing
team's leak probability p(m) = min{10*(m - q)^2, 1} where m is the realized
fraction on x1 (the original distance uses both coordinates, and
(m-q)^2 + ((1-m)-(1-q))^2 = 2*(m-q)^2).

Computes, with exact binomial pmfs (via Fractions where possible, floats for
the irrational q):
  * the four ED probabilities for N1 = 3,
  * the expected leak probability E[p] for N1 = 3 (identical mixed strategy),
  * the best deterministic leak p* = min_n 10*(n/N1 - q)^2 for N1 = 3 and 1,
  * the suboptimality gap sweep over N1 in {3,6,12,...,384} at nu0=[0.6,0.4],
    checking positivity, strict decrease, and the K/sqrt(N1) envelope with K
    calibrated at N1 = 3.
"""
import math

q = 1 / math.sqrt(2)


def binom_pmf(n, k, p):
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def leak(m):
    return min(10.0 * (m - q) ** 2, 1.0)


def expected_leak(n1):
    return sum(binom_pmf(n1, k, q) * leak(k / n1) for k in range(n1 + 1))


def best_deterministic_leak(n1):
    return min(leak(n / n1) for n in range(n1 + 1))


# N1 = 3 ED probabilities (k agents remain on x1)
probs = {k: binom_pmf(3, k, q) for k in (3, 2, 1, 0)}
print("N1=3 ED probabilities:", {k: round(v, 6) for k, v in probs.items()})
assert abs(probs[3] - 0.354) < 1e-3 and abs(probs[2] - 0.439) < 1e-3
assert abs(probs[1] - 0.182) < 1e-3 and abs(probs[0] - 0.025) < 1e-3

e3 = expected_leak(3)
p3 = best_deterministic_leak(3)
print("E[p] (N1=3)  =", repr(e3))
print("p*   (N1=3)  =", repr(p3))
assert abs(e3 - 0.518) < 1e-3 and abs(p3 - 0.016) < 1e-3

p1 = best_deterministic_leak(1)
print("p*   (N1=1)  =", repr(p1))
assert abs(p1 - (10 * (1 - q) ** 2)) < 1e-15  # n*=1 wins over n*=0
assert abs(p1 - 0.858) < 1e-3

nu0 = (0.6, 0.4)
gap3 = (e3 - p3) * nu0[1]
print("gap  (N1=3)  =", repr(gap3))
assert abs(gap3 - 0.2008) < 1e-3  # rounded-product reading gives 0.2008

K = gap3 * math.sqrt(3)
prev = float("inf")
for n1 in (3, 6, 12, 24, 48, 96, 192, 384):
    g = (expected_leak(n1) - best_deterministic_leak(n1)) * nu0[1]
    print(f"N1={n1:4d}  gap={g:.8f}  envelope={K / math.sqrt(n1):.8f}")
    assert g > 0
    assert g < prev, "gap must decrease strictly along the doubling sweep"
    assert g <= K / math.sqrt(n1) + 1e-15
    prev = g
print("sweep monotone and inside the K/sqrt(N1) envelope; K =", repr(K))
