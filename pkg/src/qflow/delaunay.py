"""
Periodic Delaunay-type solutions of the radial fourth-order ODE.

A Delaunay orbit with necksize ``eps`` starts at its minimum,
(v, v', v'', v''') = (eps, 0, q, 0), and is bounded for exactly one value of
the shooting parameter q.  Every other q either blows up or collapses
below the neck, so q is found by bisection on the escape direction.

The orbit is even about each extremum.  Integrating through a full period
amplifies the residual shooting error by roughly exp(n T / 2), which for
small necks is larger than one over machine epsilon.  We therefore integrate
from the minimum to the first maximum only and build the second half by
reflection, which is exact for the true orbit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import brentq

from . import _kernels
from .core import OdeState, hamiltonian, make_params, ode_rhs, spherical_jet
from .errors import (
    ConvergenceError,
    DomainError,
    EscapedAbove,
    EscapedBelow,
    PeriodNotFound,
    ShootingBracketError,
)

__all__ = [
    "DelaunaySolution",
    "integrate",
    "shoot_delaunay",
    "period",
    "evaluate",
    "jet",
    "alpha_beta",
    "check_prop2",
    "omega_interval",
    "default_omega",
    "gamma_interval",
    "sign_property",
    "energy_inequality_check",
    "vop_reconstruct",
    "derivative_bound_constant",
    "cosh_bound_holds",
    "sphere_distance",
    "hamiltonian_drift",
]

ESCAPE_CEILING = 2.0
EPS_MARGIN = 1e-3


@dataclass(frozen=True)
class DelaunaySolution:
    """One period of a Delaunay orbit sampled at a uniform step.

    ``samples`` has columns (t, v, v1, v2, v3) and covers [0, period]
    including both endpoints.  ``step`` is the grid step actually used
    (the requested one, shrunk to fit the half period exactly) and
    ``shot_step`` is the requested step, which is what a record stores.
    """

    params: object
    eps: float
    q: float
    period: float
    samples: np.ndarray = field(repr=False)
    energy: float
    alpha: float
    beta: float
    step: float
    symmetry_defect: float = 0.0
    shot_step: float = None

    @property
    def n(self):
        return self.params.n

    @property
    def t(self):
        return self.samples[:, 0]

    @property
    def v(self):
        return self.samples[:, 1]

    def states(self):
        return [OdeState(*row) for row in self.samples]

    def to_record(self):
        return {
            "n": self.params.n,
            "eps": self.eps,
            "q": self.q,
            "period": self.period,
            "energy": self.energy,
            "alpha": self.alpha,
            "beta": self.beta,
            "step": self.step if self.shot_step is None else self.shot_step,
        }

    @classmethod
    def from_record(cls, rec):
        """Rebuild the samples deterministically from a stored shooting value."""
        params = make_params(rec["n"])
        return _build_solution(params, rec["eps"], rec["q"], rec["step"])


def _coeffs(params):
    return params.a, params.b, params.c, params.p


def integrate(params, ic, t_end, step, ceiling=ESCAPE_CEILING):
    """Classical RK4 from ``ic`` to ``t_end``; returns an (m, 5) array of (t, v, v1, v2, v3).

    The last step is shortened so that ``t_end`` is hit exactly.
    """
    if step <= 0:
        raise DomainError("step must be positive")
    ic = OdeState(*ic)
    y0 = np.array(ic[1:], dtype=float)
    if not np.all(np.isfinite(y0)):
        raise DomainError("initial condition must be finite")
    span = t_end - ic.t
    if span < 0:
        raise DomainError("t_end must not precede the initial time")
    nsteps = int(np.ceil(span / step - 1e-9)) if span > 0 else 0
    h = span / nsteps if nsteps else step
    traj, status, last = _kernels.integrate_fixed(y0, h, nsteps, *_coeffs(params), ceiling)
    t = ic.t + h * np.arange(nsteps + 1)
    out = np.column_stack([t, traj])
    if status == _kernels.STATUS_ABOVE:
        raise EscapedAbove(float(t[last]))
    if status == _kernels.STATUS_BELOW:
        raise EscapedBelow(float(t[last]))
    return out


def _hermite_root(t0, t1, f0, f1, d0, d1):
    """Root of the cubic Hermite interpolant of f on [t0, t1] (sign change assumed)."""
    h = t1 - t0

    def cubic(t):
        s = (t - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1

    if f0 == 0.0:
        return t0
    if f1 == 0.0:
        return t1
    return brentq(cubic, t0, t1, xtol=1e-15, rtol=1e-15)


def _extremum_times(traj):
    """Refined zero crossings of v1 with their type (+1 minimum, -1 maximum)."""
    t, v1, v2 = traj[:, 0], traj[:, 2], traj[:, 3]
    out = []
    for k in range(1, len(t) - 1):
        if v1[k] > 0 >= v1[k + 1]:
            out.append((_hermite_root(t[k], t[k + 1], v1[k], v1[k + 1], v2[k], v2[k + 1]), -1))
        elif v1[k] < 0 <= v1[k + 1]:
            out.append((_hermite_root(t[k], t[k + 1], v1[k], v1[k + 1], v2[k], v2[k + 1]), 1))
    return out


def period(traj):
    """Time from the initial minimum to the next local minimum of a sampled trajectory.

    ``traj`` is an (m, 5) array of (t, v, v1, v2, v3) starting at a minimum.
    """
    traj = np.asarray(traj, dtype=float)
    seen_max = False
    for tk, kind in _extremum_times(traj):
        if kind < 0:
            seen_max = True
        elif seen_max:
            return tk - traj[0, 0]
    raise PeriodNotFound("trajectory does not contain a maximum followed by a minimum")


def _half_period(params, eps, q, step):
    """Time of the first maximum of the shot (eps, 0, q, 0)."""
    a, b, c, p = _coeffs(params)
    chunk = max(int(5.0 / step), 16)
    y0 = np.array([eps, 0.0, q, 0.0])
    t0 = 0.0
    for _ in range(400):
        traj, status, last = _kernels.integrate_fixed(y0, step, chunk, a, b, c, p, ESCAPE_CEILING)
        v1 = traj[: last + 1, 1]
        hit = np.nonzero((v1[:-1] > 0) & (v1[1:] <= 0))[0]
        if hit.size:
            k = hit[0]
            return _hermite_root(
                t0 + k * step, t0 + (k + 1) * step, v1[k], v1[k + 1], traj[k, 2], traj[k + 1, 2]
            )
        if status != _kernels.STATUS_OK:
            break
        y0 = traj[-1].copy()
        t0 += chunk * step
    raise PeriodNotFound("the shot never reached a maximum")


def _build_solution(params, eps, q, step):
    half = _half_period(params, eps, q, step)
    traj = integrate(params, (0.0, eps, 0.0, q, 0.0), half, step)
    defect = float(abs(traj[-1, 2]) + abs(traj[-1, 4]))
    # The last sample is the maximum by construction; the odd derivatives of
    # an even extension vanish there.  What the integrator left is recorded.
    traj[-1, 2] = traj[-1, 4] = 0.0
    mirror = traj[-2::-1].copy()
    mirror[:, 0] = 2 * half - mirror[:, 0]
    mirror[:, 2] *= -1
    mirror[:, 4] *= -1
    samples = np.vstack([traj, mirror])
    energy = hamiltonian(params, (0.0, eps, 0.0, q, 0.0))
    al, be = alpha_beta(params, eps, q)
    return DelaunaySolution(
        params=params,
        eps=float(eps),
        q=float(q),
        period=2 * half,
        samples=samples,
        energy=float(energy),
        alpha=al,
        beta=be,
        step=float(traj[1, 0] - traj[0, 0]),
        symmetry_defect=defect,
        shot_step=float(step),
    )


def shoot_delaunay(params, eps, tol=1e-10, step=1e-4, margin=EPS_MARGIN, max_iter=200, t_max=400.0):
    """Find the bounded Delaunay orbit with minimum ``eps`` by bisection on q = v''(0).

    Parameters
    ----------
    params : DimensionParams
    eps : float
        Necksize, in (0, v_cyl - margin].
    tol : float
        Relative depth below ``eps`` that already counts as collapse.
    step : float
        Runge-Kutta step, shared by the shooting and the final resampling.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not 0 < eps <= params.v_cyl - margin:
        raise DomainError(
            f"eps must lie in (0, v_cyl - {margin:g}] = (0, {params.v_cyl - margin:.6g}] (got {eps})"
        )
    n = params.n
    a, b, c, p = _coeffs(params)
    bound = n * (n - 4) * eps / 4
    floor = eps * (1 - tol)

    def bisect(h):
        def classify(q):
            return _kernels.classify_shot(eps, q, h, t_max, a, b, c, p, ESCAPE_CEILING, floor)

        lo, hi = -bound * (1 - 1e-12), bound * (1 - 1e-12)
        s_lo, s_hi = classify(lo), classify(hi)
        if s_lo >= 0 or s_hi <= 0:
            raise ShootingBracketError(f"bracket ends classify as ({s_lo}, {s_hi})")
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                return mid
            s = classify(mid)
            if s == 0:
                raise ConvergenceError(f"shot q={mid!r} undecided before t={t_max}")
            if s > 0:
                hi = mid
            else:
                lo = mid
        raise ConvergenceError(f"bisection did not close after {max_iter} steps", log=[lo, hi])

    return _build_solution(params, eps, bisect(step), step)


def _fold(sol, t):
    """Map t to [0, T/2] and return the parities of odd derivatives."""
    T = sol.period
    s = np.mod(np.asarray(t, dtype=float), T)
    sign = np.where(s > T / 2, -1.0, 1.0)
    s = np.where(s > T / 2, T - s, s)
    return s, sign


def jet(sol, t, order=4):
    """Derivatives 0..order (order <= 4) of v at times t, shape (order + 1, len(t)).

    Each derivative is a cubic Hermite interpolant of the neighbouring pair
    (v^(k), v^(k+1)); the fourth derivative comes from the ODE itself.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s, sign = _fold(sol, t)
    half = sol.samples[: (len(sol.samples) + 1) // 2]
    tt = half[:, 0]
    h = tt[1] - tt[0]
    k = np.clip(np.floor(s / h).astype(int), 0, len(tt) - 2)
    u = (s - tt[k]) / h
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    cols = [half[:, 1], half[:, 2], half[:, 3], half[:, 4], ode_rhs(sol.params, (0, half[:, 1], 0, half[:, 3], 0))]
    d5 = sol.params.a * half[:, 4] + (sol.params.c * sol.params.p * half[:, 1] ** (sol.params.p - 1) - sol.params.b) * half[:, 2]
    cols.append(d5)
    out = []
    for j in range(order + 1):
        f, df = cols[j], cols[j + 1]
        val = h00 * f[k] + h10 * h * df[k] + h01 * f[k + 1] + h11 * h * df[k + 1]
        out.append(val * (sign if j % 2 else 1.0))
    return np.array(out)


def evaluate(sol, t):
    """State of the periodic, even extension of the orbit at time t (scalar)."""
    d = jet(sol, [t], order=3)[:, 0]
    return OdeState(float(t), *map(float, d))


def alpha_beta(params, eps, q):
    """Coefficients of cosh((n-4)t/2) and cosh(nt/2) matching (eps, q) at t = 0."""
    n = params.n
    alpha = (n * n * eps / 4 - q) / (2 * (n - 2))
    beta = eps - alpha
    return float(alpha), float(beta)


def alpha_beta_bounds(params, eps):
    """Open intervals that contain alpha and beta for a Delaunay orbit."""
    n = params.n
    return (
        (n * eps / (2 * (n - 2)), n * eps / 4),
        (-(n - 4) * eps / 4, -(n - 4) * (n + 2) * eps**params.p / (8 * n)),
    )


def _model_jet(sol, t, order):
    n = sol.n
    k1, k2 = (n - 4) / 2, n / 2
    even = order % 2 == 0
    f = np.cosh if even else np.sinh
    return sol.alpha * k1**order * f(k1 * t) + sol.beta * k2**order * f(k2 * t)


def check_prop2(sol, t_max=None, npts=2001):
    """Normalised remainders of the two-exponential model, orders 0..4.

    Returns a dict ``{order: sup_t |v^(k) - model_k| / (eps^p e^{(n+4)t/2})}``
    over a uniform grid of [0, t_max] (default half a period).
    """
    if t_max is None:
        t_max = sol.period / 2
    t = np.linspace(0.0, t_max, npts)
    d = jet(sol, t, order=4)
    n = sol.n
    scale = sol.eps ** sol.params.p * np.exp((n + 4) * t / 2)
    return {k: float(np.max(np.abs(d[k] - _model_jet(sol, t, k)) / scale)) for k in range(5)}


def omega_interval(params, eps):
    """Open interval of admissible omega for the sign property."""
    lo = params.b - params.c_lin * eps ** (8 / (params.n - 4))
    return lo, params.a**2 / 4


def default_omega(params, eps):
    lo, hi = omega_interval(params, eps)
    return 0.5 * (lo + hi)


def gamma_interval(params, omega):
    """Roots lambda <= mu of x^2 - A x + omega."""
    disc = np.sqrt(params.a**2 - 4 * omega)
    return params.a / 2 - disc / 2, params.a / 2 + disc / 2


def _check_omega(params, eps, omega):
    lo, hi = omega_interval(params, eps)
    if not lo < omega < hi:
        raise DomainError(f"omega={omega} outside the admissible interval ({lo}, {hi})")


def sign_property(sol, gamma, omega=None, deadband=1e-9):
    """True when sign(v''' - gamma v') = -sign(v') wherever |v'| clears the dead band."""
    params = sol.params
    if omega is None:
        omega = default_omega(params, sol.eps)
    _check_omega(params, sol.eps, omega)
    lam, mu = gamma_interval(params, omega)
    if not lam - 1e-12 * abs(lam) <= gamma <= mu + 1e-12 * abs(mu):
        raise DomainError(f"gamma={gamma} outside [{lam}, {mu}]")
    v1, v3 = sol.samples[:, 2], sol.samples[:, 4]
    scale = np.max(np.abs(v1))
    live = np.abs(v1) > deadband * scale
    return bool(np.all(np.sign(v3[live] - gamma * v1[live]) == -np.sign(v1[live])))


def energy_inequality_check(sol, omega=None):
    """True when (A/2 - lambda) v'^2 + v''^2 / 2 < (B/2) v^2 at every sample."""
    params = sol.params
    if omega is None:
        omega = default_omega(params, sol.eps)
    _check_omega(params, sol.eps, omega)
    lam, _ = gamma_interval(params, omega)
    v, v1, v2 = sol.samples[:, 1], sol.samples[:, 2], sol.samples[:, 3]
    return bool(np.all((params.a / 2 - lam) * v1**2 + v2**2 / 2 < params.b / 2 * v**2))


def vop_reconstruct(sol, t):
    """Variation-of-parameters reconstruction of v(t) on [0, T] by nested quadrature."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > sol.period * (1 + 1e-12)):
        raise DomainError("t must lie in [0, period]")
    n = sol.n
    grid = sol.samples[:, 0]
    vp = sol.samples[:, 1] ** sol.params.p
    inner = cumulative_simpson(np.exp(-n * grid / 2) * vp, x=grid, initial=0.0)
    inner = cumulative_simpson(np.exp(n * grid) * inner, x=grid, initial=0.0)
    inner = cumulative_simpson(np.exp(-2 * grid) * inner, x=grid, initial=0.0)
    inner = cumulative_simpson(np.exp((4 - n) * grid) * inner, x=grid, initial=0.0)
    nested = np.interp(t, grid, inner)
    k1, k2 = (n - 4) / 2, n / 2
    out = sol.alpha * np.cosh(k1 * t) + sol.beta * np.cosh(k2 * t) + sol.params.c * np.exp(k1 * t) * nested
    return out if out.ndim else float(out)


def derivative_bound_constant(sol):
    """Smallest c with |v'| <= c v and |v''| <= c v on the samples."""
    v = sol.samples[:, 1]
    return float(max(np.max(np.abs(sol.samples[:, 2]) / v), np.max(np.abs(sol.samples[:, 3]) / v)))


def cosh_bound_holds(sol, safety=1e-9):
    """v(t) < eps cosh((n-4)t/2) (1 + safety) on the first half period."""
    half = sol.samples[sol.samples[:, 0] <= sol.period / 2]
    t, v = half[:, 0], half[:, 1]
    return bool(np.all((v > 0) & (v < sol.eps * np.cosh((sol.n - 4) * t / 2) * (1 + safety))))


def sphere_distance(sol, window=2.0, npts=801):
    """sup over |t| <= window of |v(t + T/2) - cosh(t)^((4-n)/2)|."""
    t = np.linspace(-window, window, npts)
    v = jet(sol, t + sol.period / 2, order=0)[0]
    return float(np.max(np.abs(v - spherical_jet(sol.params, t, order=0)[0])))


def hamiltonian_drift(sol):
    """max |H(sample) - H_eps| / |H_eps| over the stored period."""
    H = hamiltonian(sol.params, sol.samples.T)
    return float(np.max(np.abs(H - sol.energy)) / abs(sol.energy))
