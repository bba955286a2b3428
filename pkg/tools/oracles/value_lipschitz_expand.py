"""Symbolic expansion oracle for the value-function Lipschitz recursion.

The per-step constant is L_J(t) = L_r * (1 + sum_{k=t}^{T-1} prod_{tau=t}^{k}
(A_tau + B_tau)) with A_tau = 1 + L_f(tau)/2 and B_tau = 1 + L_g(tau)/2.
Expands the sum symbolically and checks two hand cases.
"""
import sympy as sp

L_r = sp.Symbol("L_r", positive=True)


def constant(t, T, Lf, Lg):
    A = [1 + sp.Rational(1, 2) * Lf[tau] for tau in range(T)]
    B = [1 + sp.Rational(1, 2) * Lg[tau] for tau in range(T)]
    total = 1
    for k in range(t, T):
        prod = 1
        for tau in range(t, k + 1):
            prod *= A[tau] + B[tau]
        total += prod
    return sp.expand(L_r * total)


# L_f = L_g = 0 over two remaining steps: each bracket is 1+1 = 2
c = constant(0, 2, [0, 0], [0, 0])
print("L_f=L_g=0, T-t=2:", c)
assert c == 7 * L_r

# one remaining step with L_f = L_g = 2: bracket is 2+2 = 4
c = constant(1, 2, [2, 2], [2, 2])
print("L_f=L_g=2, t=T-1:", c)
assert c == 5 * L_r

# terminal time: empty sum
c = constant(2, 2, [2, 2], [2, 2])
assert c == L_r
print("t=T:", c)
