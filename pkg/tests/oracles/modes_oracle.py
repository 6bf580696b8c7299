"""Symbolic reference values for the mode algebra.

Applies the degree-l radial Laplacian d^2/dr^2 + (n-1)/r d/dr - l(l+n-2)/r^2
with sympy to explicit profiles.  Run by hand (needs sympy); the printed
numbers are frozen in tests/test_modes.py.
"""

import sympy as sp

r = sp.symbols("r", positive=True)


def lap(f, l, n):
    return sp.simplify(sp.diff(f, r, 2) + (n - 1) / r * sp.diff(f, r) - l * (l + n - 2) / r**2 * f)


def interior(l, n, c0, c2):
    a, b = sp.symbols("a b")
    f = a * r**l + b * r ** (l + 2)
    sol = sp.solve([f.subs(r, 1) - c0, lap(f, l, n).subs(r, 1) - c2], [a, b])
    return f.subs(sol)


def exterior(l, n, c0, c2):
    a, b = sp.symbols("a b")
    f = a * r ** (2 - n - l) + b * r ** (4 - n - l)
    sol = sp.solve([f.subs(r, 1) - c0, lap(f, l, n).subs(r, 1) - c2], [a, b])
    return f.subs(sol)


def n2n(l, n):
    cols = []
    for c0, c2 in ((1, 0), (0, 1)):
        d = interior(l, n, c0, c2) - exterior(l, n, c0, c2)
        cols.append([sp.nsimplify(sp.diff(d, r).subs(r, 1)), sp.nsimplify(sp.diff(lap(d, l, n), r).subs(r, 1))])
    return sp.Matrix(cols).T


if __name__ == "__main__":
    print("interior l=2 n=5 c2=1:", sp.expand(interior(2, 5, 0, 1)))
    c = sp.Symbol("c")
    for l in (0, 1):
        print(f"interior l={l} n=5 Laplacian datum 1:", sp.solve(lap(c * r ** (l + 2), l, 5).subs(r, 1) - 1, c)[0])
    print("exterior l=1 n=5 D_1:", sp.simplify(lap(r ** (4 - 5 - 1), 1, 5) * r ** (5 + 1 - 2)))
    for n in (5, 6, 8):
        for l in (2, 3, 7):
            print("n2n", n, l, n2n(l, n).tolist())
    # annulus particular term for l=0, n=5, f = 1
    print("particular l=0 n=5:", sp.solve(lap(lap(c * r**4, 0, 5), 0, 5) - 1, c)[0])
    # indicial roots n=5 l=2: roots of mu^4 - (2 lam + A) mu^2 + (lam^2 + n(n-4) lam/2 + B) with lam=10
    mu = sp.Symbol("mu")
    A, B, lam = sp.Rational(13, 2), sp.Rational(25, 16), 10
    print("indicial n=5 l=2:", sorted(sp.solve(mu**4 - (2 * lam + A) * mu**2 + lam**2 + sp.Rational(5, 2) * lam + B, mu)))
