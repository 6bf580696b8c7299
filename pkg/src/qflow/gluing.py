"""
Flat-model matching of an interior Delaunay-type end to an exterior Green-type field.

The interior field on the ball of radius r is

    A = u_{eps,R} + Upsilon + ((n-4) u + rho u_rho) <a, x> + P_int(phi),

and the exterior field is

    B = 1 + lambda |x|^(4-n) + P_ext(psi),

where P_int and P_ext are the biharmonic Poisson extensions of
:mod:`qflow.modes`.  Curved corrections from a background manifold are
replaced by zero; an optional ``forcing`` (a per-mode additive perturbation
of the interior traces) stands in for them and lets every solver be
exercised with non-trivial data.

Both fields are compared through their Euler-scaled Cauchy traces on the
sphere |x| = r,

    (w,  rho d_rho w,  rho^2 Delta w,  rho^3 d_rho Delta w),

mode by mode.  Traces are keyed by ``(l, pos)``: ``(0, 0)`` is the constant
mode, ``(1, j)`` is the coordinate function x_j / |x|, and ``l >= 2`` keys
carry whatever high-mode data the forcing introduces.

Data slots
----------
degree 0
    ``xi0`` is an interior Laplacian datum, ``xi2`` an exterior Laplacian
    datum (with zero value datum).
degree 1
    ``tau`` is an interior Laplacian datum; ``zeta`` and ``rho`` are the
    exterior Laplacian and value data.
degree >= 2
    exterior Navier data ``psi``; the interior data follow from matching
    the value and Laplacian traces.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .conformal import bilaplacian_from_jet, radial_jet, upsilon_jet
from .delaunay import shoot_delaunay
from .errors import ConvergenceError, DomainError, IllConditioned
from .modes import BoundaryData, exterior_profile, interior_profile, monomial_traces, n2n_solve

__all__ = [
    "ScheduleKnobs",
    "GluingSchedule",
    "GluingState",
    "CauchyTrace",
    "make_schedule",
    "initial_state",
    "interior_trace",
    "exterior_trace",
    "constant_mode_matrix",
    "solve_constants",
    "fgmn",
    "reduction_coefficients",
    "coordinate_matrix",
    "t_coefficient",
    "constant_residual",
    "coordinate_residual",
    "solve_coordinates",
    "solve_high_modes",
    "cauchy_mismatch",
    "pde_residual_diagnostic",
    "solve_all",
    "run_glue",
]

TRACE_NAMES = ("value", "normal", "laplacian", "normal_laplacian")


@dataclass(frozen=True)
class ScheduleKnobs:
    """Small schedule constants.  Defaults keep the |lambda| bound attainable for n = 5."""

    delta0: float = 0.05
    delta1: float = 0.02
    delta2: float = 0.03
    m: float = 0.04
    b: float = 0.0

    def __post_init__(self):
        if not self.m > self.delta2 > self.delta1 > 0:
            raise DomainError("need m > delta2 > delta1 > 0")
        if not self.delta0 > 0:
            raise DomainError("delta0 must be positive")
        if abs(self.b) > 0.5:
            raise DomainError("need |b| <= 1/2")


@dataclass(frozen=True)
class GluingSchedule:
    solution: object
    knobs: ScheduleKnobs
    s: float
    r: float
    b: float
    R: float

    @property
    def params(self):
        return self.solution.params

    @property
    def n(self):
        return self.solution.params.n

    @property
    def eps(self):
        return self.solution.eps

    @property
    def alpha(self):
        return self.solution.alpha

    def with_b(self, b):
        if not abs(b) <= 0.5:
            raise DomainError(f"|b| = {abs(b):.3g} exceeds 1/2")
        return replace(self, b=float(b), R=_scale(self.alpha, b, self.n))

    def as_dict(self):
        k = self.knobs
        return {
            "delta0": k.delta0,
            "delta1": k.delta1,
            "delta2": k.delta2,
            "m": k.m,
            "s": self.s,
            "r_eps": self.r,
            "b": self.b,
            "R": self.R,
            "alpha": self.alpha,
        }


def _scale(alpha, b, n):
    # log R = (2/(n-4)) (log alpha - log(2 + 2b))
    return float(np.exp(2 / (n - 4) * (np.log(alpha) - np.log(2 + 2 * b))))


def make_schedule(params, eps, knobs=None, solution=None, step=1e-4, tol=1e-10):
    """Schedule for one necksize; shoots the Delaunay orbit unless ``solution`` is given."""
    knobs = ScheduleKnobs() if knobs is None else knobs
    if solution is None:
        solution = shoot_delaunay(params, eps, tol=tol, step=step)
    elif solution.params.n != params.n or solution.eps != eps:
        raise DomainError("solution does not match (n, eps)")
    n = params.n
    s = 2 / (n - 4) - knobs.delta0
    if not s > 0:
        raise DomainError("delta0 too large: s must be positive")
    r = solution.alpha**s
    if not 0 < r < 1:
        raise DomainError(f"r_eps = {r:.3g} is not in (0, 1)")
    return GluingSchedule(solution, knobs, s, float(r), float(knobs.b), _scale(solution.alpha, knobs.b, n))


@dataclass(frozen=True)
class GluingState:
    """All matching parameters.  ``psi`` holds exterior high-mode Navier data."""

    schedule: GluingSchedule
    lam: float = 0.0
    a: np.ndarray = None
    xi0: float = 0.0
    xi2: float = 0.0
    tau: np.ndarray = None
    zeta: np.ndarray = None
    rho: np.ndarray = None
    psi: BoundaryData = None
    forcing: dict = field(default_factory=dict)

    def __post_init__(self):
        n, r = self.schedule.n, self.schedule.r
        for name in ("a", "tau", "zeta", "rho"):
            val = getattr(self, name)
            val = np.zeros(n) if val is None else np.asarray(val, dtype=float).copy()
            if val.shape != (n,):
                raise DomainError(f"{name} must have {n} components")
            object.__setattr__(self, name, val)
        if self.psi is None:
            object.__setattr__(self, "psi", BoundaryData(r))
        elif any(k[0] < 2 for k in self.psi.coeffs):
            raise DomainError("psi carries degrees >= 2 only")
        forcing = {}
        for k, v in self.forcing.items():
            k = tuple(int(i) for i in k)
            v = np.asarray(v, dtype=float)
            if v.shape != (4,):
                raise DomainError("forcing entries are 4-vectors of trace perturbations")
            if k[0] == 1 and not 0 <= k[1] < n:
                raise DomainError("degree-1 positions run over the coordinates")
            forcing[k] = v.copy()
        object.__setattr__(self, "forcing", forcing)

    @property
    def n(self):
        return self.schedule.n

    @property
    def r(self):
        return self.schedule.r

    def bounds(self):
        """The three size conditions on the parameters, with their values."""
        sc, k = self.schedule, self.schedule.knobs
        n, r = self.n, self.r
        lam_cap = r ** (n - 4 + k.m / 2)
        xi_cap = r ** (k.m - k.delta1)
        a_val = float(np.linalg.norm(self.a)) * r ** (1 - k.delta2)
        return {
            "b": (abs(sc.b), 0.5, abs(sc.b) <= 0.5),
            "lambda": (abs(self.lam), lam_cap, abs(self.lam) <= lam_cap),
            "a": (a_val, 1.0, a_val <= 1.0),
            "xi": (max(abs(self.xi0), abs(self.xi2)), xi_cap, max(abs(self.xi0), abs(self.xi2)) <= xi_cap),
        }

    def summary(self):
        return {
            "b": self.schedule.b,
            "R": self.schedule.R,
            "lambda": self.lam,
            "xi0": self.xi0,
            "xi2": self.xi2,
            "a": self.a.tolist(),
            "tau": self.tau.tolist(),
            "zeta": self.zeta.tolist(),
            "rho": self.rho.tolist(),
            "psi": {f"{k[0]},{k[1]}": v.tolist() for k, v in sorted(self.psi.coeffs.items())},
        }


@dataclass
class CauchyTrace:
    """Euler-scaled traces per mode key at radius r."""

    r: float
    n: int
    modes: dict = field(default_factory=dict)

    def get(self, key):
        return self.modes.get(tuple(key), np.zeros(4))

    def add(self, key, vec):
        key = tuple(key)
        self.modes[key] = self.modes.get(key, np.zeros(4)) + np.asarray(vec, dtype=float)

    def keys(self):
        return sorted(self.modes)

    def __sub__(self, other):
        out = CauchyTrace(self.r, self.n)
        for k in sorted(set(self.modes) | set(other.modes)):
            out.modes[k] = self.get(k) - other.get(k)
        return out

    def high(self):
        return {k: v for k, v in self.modes.items() if k[0] >= 2}


def initial_state(schedule, forcing=None):
    """Leading-order guess: b from the schedule, lambda = alpha^2 / (4 (1 + b)), all data zero."""
    lam = schedule.alpha**2 / (4 * (1 + schedule.b))
    return GluingState(schedule, lam=lam, forcing={} if forcing is None else forcing)


def _radial_traces(ejet, n):
    """Euler traces of a radial function from its Euler jet D^j w, j = 0..3."""
    lap = ejet[2] + (n - 2) * ejet[1]
    return np.array([ejet[0], ejet[1], lap, ejet[3] + (n - 4) * ejet[2] - 2 * (n - 2) * ejet[1]])


def _delaunay_radial_traces(schedule):
    """Traces of u_{eps,R} + Upsilon at r."""
    sol, R, r = schedule.solution, schedule.R, schedule.r
    jet = radial_jet(sol, R, np.array([r]), order=3)[:, 0] + upsilon_jet(sol, R, np.array([r]), order=3)[:, 0]
    return _radial_traces(jet, schedule.n)


def fgmn(state):
    """Traces of ((n-4) u + rho u_rho) rho Y_1 divided by r, for u = u_{eps,R} at r.

    With h = (n-4) u + D u and D = rho d_rho these are h, (1 + D) h,
    (D^2 + n D) h and (D - 1)(D^2 + n D) h, which expand into the usual
    radial-derivative formulas.
    """
    sc = state.schedule
    n = sc.n
    u = radial_jet(sc.solution, sc.R, np.array([sc.r]), order=4)[:, 0]
    h = (n - 4) * u[:4] + u[1:5]
    F = h[0]
    G = h[0] + h[1]
    M = h[2] + n * h[1]
    N = h[3] + n * h[2] - M
    return float(F), float(G), float(M), float(N)


def _high_interior_data(state):
    """Interior high-mode Navier data matching value and Laplacian traces of the exterior."""
    out = {}
    for k, (p0, p2) in state.psi.coeffs.items():
        f = state.forcing.get(k, np.zeros(4))
        out[k] = np.array([p0 - f[0], p2 - f[2]])
    return out


def interior_trace(state):
    sc = state.schedule
    n, r = sc.n, sc.r
    tr = CauchyTrace(r, n)
    tr.add((0, 0), _delaunay_radial_traces(sc) + interior_profile(0, n, r, 0.0, state.xi0).traces())
    if np.any(state.a) or np.any(state.tau):
        F, G, M, N = fgmn(state)
        for j in range(n):
            vec = r * state.a[j] * np.array([F, G, M, N]) + interior_profile(1, n, r, 0.0, state.tau[j]).traces()
            tr.add((1, j), vec)
    for k, (c0, c2) in _high_interior_data(state).items():
        tr.add(k, interior_profile(k[0], n, r, c0, c2).traces())
    for k, v in state.forcing.items():
        tr.add(k, v)
    return tr


def exterior_trace(state):
    sc = state.schedule
    n, r = sc.n, sc.r
    tr = CauchyTrace(r, n)
    green = state.lam * r ** (4 - n) * monomial_traces(4 - n, 0, n)
    tr.add((0, 0), np.array([1.0, 0.0, 0.0, 0.0]) + green + exterior_profile(0, n, r, 0.0, state.xi2).traces())
    if np.any(state.zeta) or np.any(state.rho):
        for j in range(n):
            tr.add((1, j), exterior_profile(1, n, r, state.rho[j], state.zeta[j]).traces())
    for k, (c0, c2) in state.psi.coeffs.items():
        tr.add(k, exterior_profile(k[0], n, r, c0, c2).traces())
    return tr


def constant_mode_matrix(n):
    """Columns: b, X = (alpha^2/(4(1+b)) - lambda) r^(4-n), xi0, xi2 (interior minus exterior)."""
    return np.array(
        [
            [1.0, 1.0, 1 / (2 * n), 0.0],
            [0.0, 4 - n, 1 / n, -1 / (4 - n)],
            [0.0, 2 * (4 - n), 1.0, -1.0],
            [0.0, 2 * (4 - n) * (2 - n), 0.0, -(2 - n)],
        ]
    )


def _constant_remainder(sc, forcing):
    """Degree-0 interior traces minus their matched part (1 + b, X-column at lambda = 0)."""
    n, r = sc.n, sc.r
    lead = sc.alpha**2 / (4 * (1 + sc.b)) * r ** (4 - n) * monomial_traces(4 - n, 0, n)
    return _delaunay_radial_traces(sc) - lead - np.array([1 + sc.b, 0, 0, 0]) + forcing.get((0, 0), np.zeros(4))


def solve_constants(state, tol=1e-15, max_iter=100):
    """Match the constant mode; returns the updated state.

    The linear part is the 4x4 system in (b, X, xi0, xi2); the remainder
    depends on b through R and is iterated to a fixed point.
    """
    n = state.n
    Mat = constant_mode_matrix(n)
    sc = state.schedule
    log = []
    for _ in range(max_iter):
        z = np.linalg.solve(Mat, -_constant_remainder(sc, state.forcing))
        log.append(float(z[0]))
        if abs(z[0]) > 0.5:
            raise ConvergenceError(f"b left [-1/2, 1/2] (b = {z[0]:.3g})", log)
        step = abs(z[0] - sc.b)
        sc = sc.with_b(z[0])
        if step <= tol * max(1.0, abs(z[0])):
            break
    else:
        raise ConvergenceError("constant-mode iteration did not settle", log)
    # final solve at the converged b so the remainder and the unknowns agree
    z = np.linalg.solve(Mat, -_constant_remainder(sc, state.forcing))
    lam = sc.alpha**2 / (4 * (1 + sc.b)) - z[1] * sc.r ** (n - 4)
    return replace(state, schedule=sc, lam=float(lam), xi0=float(z[2]), xi2=float(z[3]))


def constant_residual(state):
    """Residuals of the four constant-mode equations (interior minus exterior traces)."""
    return (interior_trace(state) - exterior_trace(state)).get((0, 0))


def reduction_coefficients(n):
    """Left-null vector (1, w1, c1, c2) of the degree-1 data columns, as exact fractions.

    Pairing it with the degree-1 equations removes tau, zeta and rho and
    leaves T a_j r = -(pairing with the forcing), where
    T = F + w1 G + c1 M + c2 N.
    """
    n = Fraction(n)
    w1 = 1 / (n - 1)
    c2 = -1 / (2 * (n - 1) * (n - 2))
    c1 = -(n - 3) / (2 * (n - 1) * (n - 2))
    return Fraction(1), w1, c1, c2


def coordinate_matrix(n):
    """Columns tau, zeta, rho of the degree-1 system (interior minus exterior)."""
    return np.array(
        [
            [1 / (2 * n + 4), 0.0, -1.0],
            [3 / (2 * n + 4), -1 / (2 - n), -(1 - n)],
            [1.0, -1.0, 0.0],
            [1.0, -(1 - n), 0.0],
        ]
    )


def t_coefficient(state):
    w = np.array([float(c) for c in reduction_coefficients(state.n)])
    return float(w @ np.array(fgmn(state)))


def solve_coordinates(state, threshold=1e-6, tol=1e-14, max_pass=5):
    """Match the coordinate modes by the reduction through T; returns the updated state."""
    n, r = state.n, state.r
    F, G, M, N = fgmn(state)
    T = t_coefficient(state)
    if abs(T) < threshold:
        raise IllConditioned(f"|T| = {abs(T):.3g} below {threshold}")
    w = np.array([float(c) for c in reduction_coefficients(n)])
    a = np.zeros(n)
    tau, zeta, rho = np.zeros(n), np.zeros(n), np.zeros(n)
    for _ in range(max_pass):
        prev = np.concatenate([a, tau, zeta, rho])
        for j in range(n):
            f = state.forcing.get((1, j), np.zeros(4))
            a[j] = 0.0 - (w @ f) / (T * r)
            p = -f[2] - M * r * a[j]
            q = -f[3] - N * r * a[j]
            zeta[j] = (q - p) / n
            tau[j] = p + zeta[j]
            rho[j] = F * r * a[j] + tau[j] / (2 * n + 4) + f[0]
        if np.max(np.abs(np.concatenate([a, tau, zeta, rho]) - prev)) <= tol:
            break
    return replace(state, a=a, tau=tau, zeta=zeta, rho=rho)


def coordinate_residual(state):
    """Max residual of the degree-1 equations over the coordinates."""
    d = interior_trace(state) - exterior_trace(state)
    return max((float(np.max(np.abs(d.get((1, j))))) for j in range(state.n)), default=0.0)


def solve_high_modes(state, l_max, tol=1e-14, max_pass=5):
    """Match degrees 2..l_max through the inverse mode matrices.

    The non-Poisson parts are frozen; in the flat model their high-mode
    content is the forcing alone and does not depend on psi, so the first
    pass is already exact and the loop only confirms it.
    """
    if l_max < 2:
        raise DomainError("l_max must be at least 2")
    bad = [k for k in state.forcing if k[0] > l_max]
    if bad:
        raise DomainError(f"forcing has degrees above l_max = {l_max}")
    n, r = state.n, state.r
    psi = BoundaryData(r)
    for _ in range(max_pass):
        target = {}
        for k, f in sorted(state.forcing.items()):
            if k[0] < 2:
                continue
            comp = interior_profile(k[0], n, r, f[0], f[2]).traces()
            target[k] = np.array([comp[1] - f[1], comp[3] - f[3]])
        new = n2n_solve(BoundaryData(r, target), n)
        change = max((float(np.max(np.abs(new.coeffs[k] - psi.coeffs.get(k, 0)))) for k in new.coeffs), default=0.0)
        psi = new
        if change <= tol:
            break
    return replace(state, psi=psi)


def cauchy_mismatch(state):
    """Sup over modes of the four Euler-scaled trace differences."""
    d = interior_trace(state) - exterior_trace(state)
    stack = np.array([d.get(k) for k in d.keys()]) if d.keys() else np.zeros((1, 4))
    return {name: float(np.max(np.abs(stack[:, i]))) for i, name in enumerate(TRACE_NAMES)}


def pde_residual_diagnostic(state, npts=201):
    """sup rho^4 |Delta^2 W - c W^p| / W over [r/2, 2r] for the radial part W of the glued field.

    Inside the sphere W is u + Upsilon plus the xi0 profile; outside it is
    1 + lambda rho^(4-n) plus the xi2 profile.  Degree-1 and higher
    content is left out.
    """
    sc = state.schedule
    n, r, c, p = sc.n, sc.r, sc.params.c, sc.params.p
    inner = np.geomspace(r / 2, r, npts)
    outer = np.geomspace(r, 2 * r, npts)
    jet = radial_jet(sc.solution, sc.R, inner) + upsilon_jet(sc.solution, sc.R, inner)
    jet = jet + interior_profile(0, n, r, 0.0, state.xi0).euler_jet(inner)
    ext = exterior_profile(0, n, r, 0.0, state.xi2).euler_jet(outer)
    ext[0] += 1.0
    for j in range(5):
        ext[j] += state.lam * (4 - n) ** j * outer ** (4 - n)
    best = 0.0
    for rr, J in ((inner, jet), (outer, ext)):
        if np.any(J[0] <= 0):
            raise DomainError("glued field is not positive on the annulus")
        res = bilaplacian_from_jet(rr, J, n) - c * J[0] ** p
        best = max(best, float(np.max(rr**4 * np.abs(res) / J[0])))
    return best


def solve_all(state, l_max=4):
    """High modes, then constants, then coordinates."""
    state = solve_high_modes(state, l_max)
    state = solve_constants(state)
    return solve_coordinates(state)


def run_glue(params, eps, knobs=None, l_max=4, forcing=None, solution=None, step=1e-4, tol=1e-10):
    """End-to-end matching for one necksize; returns (state, manifest)."""
    sc = make_schedule(params, eps, knobs, solution=solution, step=step, tol=tol)
    guess = initial_state(sc, forcing)
    state = solve_all(guess, l_max=l_max)
    n = params.n
    T = t_coefficient(state)
    manifest = {
        "n": n,
        "eps": eps,
        "schedule": state.schedule.as_dict(),
        "solved": state.summary(),
        "mismatch": cauchy_mismatch(state),
        "initial_mismatch": cauchy_mismatch(guess),
        "pde_residual": pde_residual_diagnostic(state),
        "T": T,
        "T_model": n * (n - 4) * (1 + state.schedule.b) / (n - 1),
        "fgmn": dict(zip("FGMN", fgmn(state))),
        "reduction": [str(c) for c in reduction_coefficients(n)],
        "bounds": {k: {"value": v[0], "cap": v[1], "ok": bool(v[2])} for k, v in state.bounds().items()},
        "constant_residual": constant_residual(state).tolist(),
    }
    return state, manifest
