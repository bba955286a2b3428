"""Hand evaluation of the drift-competition kernel, kept independent of the package.

Evaluates P(x1 stays at x1 under u1) for the two-state competition dynamics
    f(x1|x1,u1,mu,nu) = 0.5*(1 + (rho*mu(x1) - (1-rho)*nu(y1)))
with exact rational arithmetic, at rho=3/5, mu=nu=[1/2,1/2].
"""
from fractions import Fraction as F

rho = F(3, 5)
mu1 = F(1, 2)
nu1 = F(1, 2)

p = F(1, 2) * (1 + (rho * mu1 - (1 - rho) * nu1))
print("f(x1|x1,u1) =", p, "=", float(p))
assert p == F(11, 20)
