"""
The twelve acceptance criteria as plain functions, plus a deterministic report.

Each ``criterion_k(ctx)`` returns a :class:`CriterionResult`.  ``ctx`` memoises
Delaunay shots so the whole suite shoots every (n, eps) pair once.  The
report contains no timings or timestamps, so two runs on the same machine
produce identical bytes; criterion 12 checks exactly that by building the
report for criteria 1 to 11 twice from fresh contexts.
"""

from dataclasses import dataclass, field
from math import isclose

import numpy as np

from .conformal import bubble_jet, flat_residual
from .core import make_params, spherical_jet
from .cylinder import ModeOperator, apriori_ratio, assemble, coercivity_margin, potential, solve_mode_bvp
from .delaunay import (
    alpha_beta_bounds,
    check_prop2,
    default_omega,
    energy_inequality_check,
    gamma_interval,
    hamiltonian_drift,
    shoot_delaunay,
    sign_property,
    sphere_distance,
)
from .gluing import cauchy_mismatch, initial_state, make_schedule, pde_residual_diagnostic, run_glue
from .io import SCHEMA
from .modes import (
    eigenvalue,
    exterior_profile,
    indicial_roots,
    interior_profile,
    laplacian_factor,
    n2n_matrix,
)

__all__ = ["CriterionResult", "Context", "PINNED", "CRITERIA", "run_criteria", "format_report", "verify_report"]

DIMENSIONS = (5, 6, 8)
EPS_GRID = (0.3, 0.2, 0.1, 0.05)

# Regression pins measured with the default integrator settings
# (step 1e-4, tol 1e-10).  Prop. 2 pins are the sup over EPS_GRID of the
# normalised remainder, per dimension and derivative order.
PINNED = {
    "prop2": {
        5: (0.00407, 0.02016, 0.10361, 0.58331, 6.56255),
        6: (0.01109, 0.05994, 0.33334, 2.00183, 24.0),
        8: (0.03440, 0.21588, 1.37457, 9.13680, 120.0),
    },
    "prop2_tolerance": 0.10,
    "apriori_ratio": 0.002253,
    "apriori_factor": 2.0,
}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: list = field(default_factory=list)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        tail = "; ".join(self.details)
        return f"[{flag}] {self.number:2d} {self.title}" + (f": {tail}" if tail else "")


class Context:
    """Memoised shots, keyed by (n, eps)."""

    def __init__(self, step=1e-4, tol=1e-10):
        self.step, self.tol = step, tol
        self._sols = {}

    def solution(self, n, eps):
        key = (n, eps)
        if key not in self._sols:
            self._sols[key] = shoot_delaunay(make_params(n), eps, tol=self.tol, step=self.step)
        return self._sols[key]


def _e(x):
    return f"{x:.3e}"


def criterion_1(ctx):
    worst_bubble, worst_sph = 0.0, 0.0
    for n in DIMENSIONS:
        p = make_params(n)
        rho = np.arange(0.1, 3.0 + 5e-4, 1e-3)
        worst_bubble = max(worst_bubble, float(np.max(np.abs(flat_residual(p, rho, ujet=bubble_jet(n, rho))))))
        t = np.arange(-5.0, 5.0 + 5e-4, 1e-3)
        d = spherical_jet(p, t, order=4)
        res = d[4] - (p.a * d[2] + p.c * d[0] ** p.p - p.b * d[0])
        worst_sph = max(worst_sph, float(np.max(np.abs(res))))
    ok = worst_bubble < 1e-8 and worst_sph < 1e-8
    return CriterionResult(1, "exact-solution residuals", ok, [f"bubble {_e(worst_bubble)}", f"v_sph {_e(worst_sph)}"])


def criterion_2(ctx):
    worst, all_neg = 0.0, True
    for n in DIMENSIONS:
        for eps in EPS_GRID[:3]:
            sol = ctx.solution(n, eps)
            worst = max(worst, hamiltonian_drift(sol))
            all_neg &= sol.energy < 0
    return CriterionResult(2, "first integral", worst < 1e-8 and all_neg, [f"max drift {_e(worst)}", f"H<0 {all_neg}"])


def criterion_3(ctx):
    bad = []
    for n in DIMENSIONS:
        p = make_params(n)
        for eps in EPS_GRID:
            s = ctx.solution(n, eps)
            (a_lo, a_hi), (b_lo, b_hi) = alpha_beta_bounds(p, eps)
            checks = (
                abs(s.q) < n * (n - 4) * eps / 4,
                abs(float(np.min(s.v)) - eps) <= 1e-6,
                float(np.max(s.v)) < 1.0,
                abs(s.alpha + s.beta - eps) <= 1e-12,
                a_lo < s.alpha < a_hi,
                b_lo < s.beta < b_hi,
            )
            if not all(checks):
                bad.append(f"n={n} eps={eps}")
    return CriterionResult(3, "shooting bounds", not bad, [f"{len(DIMENSIONS) * len(EPS_GRID)} solutions"] + bad)


def criterion_4(ctx):
    details, ok = [], True
    for n in DIMENSIONS:
        sols = [ctx.solution(n, e) for e in EPS_GRID]
        T = [s.period for s in sols]
        dist = [sphere_distance(s) for s in sols]
        mono = all(T[i] < T[i + 1] for i in range(3)) and all(dist[i] > dist[i + 1] for i in range(3))
        ok &= mono
        details.append(f"n={n} T {T[0]:.4f}->{T[-1]:.4f} dist {_e(dist[0])}->{_e(dist[-1])}")
    return CriterionResult(4, "Delaunay limits", ok, details)


def criterion_5(ctx):
    bad = []
    for n in DIMENSIONS:
        p = make_params(n)
        for eps in EPS_GRID:
            s = ctx.solution(n, eps)
            lam, mu = gamma_interval(p, default_omega(p, eps))
            ok = all(sign_property(s, g) for g in (lam, p.a / 2, mu)) and energy_inequality_check(s)
            if not ok:
                bad.append(f"n={n} eps={eps}")
    return CriterionResult(5, "sign property and energy inequality", not bad, ["gamma in {lambda, A/2, mu}"] + bad)


def criterion_6(ctx):
    tol = PINNED["prop2_tolerance"]
    details, ok = [], True
    for n in DIMENSIONS:
        pins = PINNED["prop2"][n]
        worst = np.zeros(5)
        for eps in EPS_GRID:
            r = check_prop2(ctx.solution(n, eps))
            worst = np.maximum(worst, [r[k] for k in range(5)])
        ratio = float(np.max(worst / np.array(pins)))
        ok &= ratio <= 1 + tol
        details.append(f"n={n} max/pin {ratio:.4f}")
    return CriterionResult(6, "expansion remainder", ok, details)


def criterion_7(ctx):
    ok = True
    worst_bc = 0.0
    rng = np.random.default_rng(7)
    for n in DIMENSIONS:
        for l in range(0, 12):
            roots = {m for m in range(-n - 30, 31) if laplacian_factor(m, l, n) == 0}
            ok &= roots == {l, 2 - n - l}
            for r in (0.1, 1.0):
                c0, c2 = rng.normal(size=2)
                ins = interior_profile(l, n, r, 0.0 if l <= 1 else c0, c2)
                ext = exterior_profile(l, n, r, c0, c2)
                ti, te = ins.traces(), ext.traces()
                # low-mode interior profiles carry a Laplacian datum only
                value_gap = 0.0 if l <= 1 else abs(ti[0] - c0)
                worst_bc = max(worst_bc, value_gap, abs(ti[2] - c2), abs(te[0] - c0), abs(te[2] - c2))
                s_in = np.linspace(0.01, 1.0, 50) * r
                s_out = np.linspace(1.0, 20.0, 50) * r
                C_in = sum(abs(c) for c in ins.terms.values()) / r**2
                C_out = sum(abs(c) for c in ext.terms.values()) * r ** (n - 4)
                ok &= bool(np.all(np.abs(ins.value(s_in)) <= C_in * s_in**2 * (1 + 1e-12)))
                ok &= bool(np.all(np.abs(ext.value(s_out)) <= C_out * s_out ** (4 - n) * (1 + 1e-12)))
        ok &= laplacian_factor(4 - n, 0, n) == 8 - 2 * n == (4 - n) * 2
    ok &= worst_bc < 1e-12
    return CriterionResult(7, "mode algebra", ok, [f"max boundary residual {_e(worst_bc)}"])


def criterion_8(ctx):
    ok, worst = True, 0.0
    for n in DIMENSIONS:
        for l in range(2, 41):
            M = n2n_matrix(l, n)
            ref = np.array([[2 * l + n - 2, 2 / (4 * l + 2 * n) + 2 / (4 * l + 2 * n - 8)], [0.0, 2 * l + n - 2]])
            worst = max(worst, float(np.max(np.abs(M - ref))))
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            ok &= det != 0 and isclose(det, (2 * l + n - 2) ** 2, rel_tol=1e-12)
            ok &= all(np.array_equal(M, n2n_matrix(l, n, r)) for r in (0.01, 0.1, 1.0))
    ok &= worst < 1e-12
    return CriterionResult(8, "Navier-to-Neumann matrices", ok, [f"max entry error {_e(worst)}", "l=2..40"])


def criterion_9(ctx):
    ok = True
    for n in DIMENSIONS:
        ok &= indicial_roots(0, n) == (n / 2, (n - 4) / 2)
        for l in range(0, 30):
            if eigenvalue(l, n) >= 2 * n:
                ok &= min(indicial_roots(l, n)) >= n / 2
    ok &= indicial_roots(2, 5) == (4.5, 2.5)
    return CriterionResult(9, "indicial roots", ok, [f"n=5 l=2 {indicial_roots(2, 5)}"])


def _manufactured_order(sol):
    p = sol.params
    L, ks, cs = 10.0, (3, 7), (1.0, 0.5)

    def w(t, d=0):
        return sum(c * (k * np.pi / L) ** d * (-1) ** (d // 2) * np.sin(k * np.pi * t / L) for k, c in zip(ks, cs))

    Ns, errs = (200, 250, 300, 400), []
    for N in Ns:
        op = ModeOperator(p, 2, 0.0, L, L / N, "navier", sol)
        t = op.grid
        f = w(t, 4) - (2 * op.lam + p.a) * w(t, 2) + potential(op) * w(t)
        errs.append(float(np.max(np.abs(solve_mode_bvp(assemble(op), f) - w(t)))))
    return min(np.log(errs[i] / errs[i + 1]) / np.log(Ns[i + 1] / Ns[i]) for i in range(len(Ns) - 1))


def _bump(t):
    return np.where((t > 1) & (t < 2), np.sin(np.pi * (t - 1)) ** 4, 0.0)


def criterion_10(ctx):
    p = make_params(5)
    order = _manufactured_order(ctx.solution(5, 0.2))
    signs = coercivity_margin(5, 10) > 0 and coercivity_margin(5, 0) < 0 and coercivity_margin(5, 4) < 0
    pin, fac = PINNED["apriori_ratio"], PINNED["apriori_factor"]
    ratios = []
    for eps in (0.3, 0.1, 0.05):
        for T in (10.0, 20.0):
            op = ModeOperator(p, 2, 0.0, T, 0.01, "navier", ctx.solution(5, eps))
            ratios.append(apriori_ratio(op, _bump(op.grid), 0.5))
    uniform = all(pin / fac <= r <= pin * fac for r in ratios)
    ok = order >= 3.7 and signs and uniform
    return CriterionResult(
        10,
        "cylinder boundary-value problems",
        ok,
        [f"order {order:.2f}", f"margins {coercivity_margin(5, 10)}/{coercivity_margin(5, 0)}/{coercivity_margin(5, 4)}",
         f"ratio {min(ratios):.6f}..{max(ratios):.6f}"],
    )


def criterion_11(ctx):
    p = make_params(5)
    ok = True
    lead, pde, worst_post, Tdev = [], [], 0.0, 0.0
    for eps in EPS_GRID:
        sol = ctx.solution(5, eps)
        state, man = run_glue(p, eps, solution=sol)
        b = man["bounds"]
        ok &= b["b"]["ok"] and b["lambda"]["ok"]
        worst_post = max(worst_post, max(man["mismatch"].values()))
        lead.append(max(cauchy_mismatch(initial_state(make_schedule(p, eps, solution=sol))).values()))
        pde.append(pde_residual_diagnostic(state))
        Tdev = max(Tdev, abs(man["T"] / man["T_model"] - 1))
    mono = all(lead[i] > lead[i + 1] for i in range(3)) and all(pde[i] > pde[i + 1] for i in range(3))
    ok &= worst_post < 1e-8 and mono and Tdev <= 0.2
    return CriterionResult(
        11,
        "gluing",
        ok,
        [f"post-solve mismatch {_e(worst_post)}", f"leading mismatch {_e(lead[0])}->{_e(lead[-1])}",
         f"pde {_e(pde[0])}->{_e(pde[-1])}", f"T deviation {Tdev:.2e}"],
    )


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 12)}


def run_criteria(numbers=None, ctx=None):
    ctx = Context() if ctx is None else ctx
    numbers = sorted(CRITERIA) if numbers is None else numbers
    return [CRITERIA[k](ctx) for k in numbers]


def format_report(results):
    lines = [f"qflow verification report ({SCHEMA})"] + [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"


def verify_report(numbers=None, repeat=True):
    """Run the criteria and return (report text, results).

    With ``repeat`` the criteria are run a second time from a fresh
    context and criterion 12 records whether both passes agree byte for
    byte.
    """
    numbers = sorted(CRITERIA) if numbers is None else [k for k in numbers if k != 12]
    first = run_criteria(numbers)
    results = list(first)
    if repeat:
        second = run_criteria(numbers)
        same = format_report(first) == format_report(second)
        results.append(CriterionResult(12, "determinism", same, ["two passes byte-identical" if same else "passes differ"]))
    return format_report(results), results
