"""Independent reference for the Delaunay shooting value and period.

Adaptive DOP853 at rtol = atol = 1e-12 with event location, plus plain
bisection on q.  Run once by hand; the printed numbers are frozen in the
test suite.  Shares no code with the package integrator.
"""

import numpy as np
from scipy.integrate import solve_ivp


def rhs_factory(n):
    A = (n * (n - 4) + 8) / 2
    B = n * n * (n - 4) ** 2 / 16
    C = n * (n - 4) * (n * n - 4) / 16
    p = (n + 4) / (n - 4)

    def rhs(t, y):
        v = y[0]
        return [y[1], y[2], y[3], A * y[2] + C * v * abs(v) ** (p - 1) - B * v]

    return rhs


def classify(n, eps, q):
    rhs = rhs_factory(n)

    def above(t, y):
        return y[0] - 2.0

    def below(t, y):
        return y[0] - eps * (1 - 1e-10)

    def turn(t, y):
        return y[1]

    above.terminal = below.terminal = True
    below.direction = -1
    turn.direction = 1
    sol = solve_ivp(rhs, (0, 200), [eps, 0, q, 0], method="DOP853", rtol=1e-12, atol=1e-12,
                    events=(above, below, turn))
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size and (not sol.t_events[2].size or sol.t_events[1][0] < sol.t_events[2][0]):
        return -1
    # first return to a minimum
    v_min = sol.y_events[2][0][0]
    return 1 if v_min > eps else -1


def shoot(n, eps):
    bound = n * (n - 4) * eps / 4
    lo, hi = 0.0, bound * (1 - 1e-12)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if classify(n, eps, mid) > 0:
            hi = mid
        else:
            lo = mid
    q = 0.5 * (lo + hi)
    rhs = rhs_factory(n)

    def top(t, y):
        return y[1]

    top.direction = -1
    top.terminal = True
    sol = solve_ivp(rhs, (0, 100), [eps, 0, q, 0], method="DOP853", rtol=1e-12, atol=1e-12, events=top)
    return q, 2 * sol.t_events[0][0]


if __name__ == "__main__":
    for n, eps in [(5, 0.2), (6, 0.1)]:
        q, T = shoot(n, eps)
        print(n, eps, repr(q), repr(T))
