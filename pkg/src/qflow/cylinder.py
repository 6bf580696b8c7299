"""
Mode-projected linearised operators on a finite cylinder.

For a degree-l harmonic with eigenvalue lambda the linearisation about a
Delaunay orbit v reads

    L w = w'''' - (2 lambda + A) w'' + (lambda^2 + n(n-4) lambda / 2 + B - K v^(8/(n-4))) w

with K = n(n+4)(n^2-4)/16.  It is discretised by finite differences on a
uniform grid of [t0, T] and solved as a banded system.

Two boundary kinds are supported.  ``"navier"`` imposes w = w'' = 0 at both
ends.  ``"terminal"`` imposes w = w' = w'' = w''' = 0 at T and nothing at
t0; it is the backward-marching problem used for degrees 0 and 1.

Two schemes are available.  ``"closure"`` (default) uses 7-point centred
stencils in the interior and 8-point one-sided stencils next to the ends,
which keeps fourth-order accuracy up to the boundary.  ``"reflect"`` is the
classical second-order scheme with odd reflection at Navier ends; it yields
a symmetric matrix, convenient for eigenvalue checks.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigvalsh, solve_banded
from scipy.sparse import csr_matrix

from .conformal import fd_weights
from .delaunay import jet as orbit_jet
from .errors import DomainError, SolveError
from .modes import eigenvalue

__all__ = [
    "ModeOperator",
    "BandedSystem",
    "coercivity_margin",
    "potential",
    "assemble",
    "apply_operator",
    "solve_mode_bvp",
    "admissible_delta",
    "apriori_ratio",
    "smallest_eigenvalue",
]


def coercivity_margin(n, lam):
    """lambda^2 + n(n-4) lambda / 2 + n^2 (n-4)^2 / 16 - n(n+4)(n^2-4) / 16."""
    return lam * lam + n * (n - 4) / 2 * lam + n * n * (n - 4) ** 2 / 16 - n * (n + 4) * (n * n - 4) / 16


@dataclass(frozen=True)
class ModeOperator:
    """Specification of one mode operator on [t0, T].

    ``solution`` supplies the potential.  ``potential_kind`` may override it
    with ``"cylinder"`` (v = v_cyl) or ``"zero"`` (no potential term).
    """

    params: object
    l: int
    t0: float
    T: float
    h: float
    bc: str = "navier"
    solution: object = None
    potential_kind: str = "delaunay"
    scheme: str = "closure"

    def __post_init__(self):
        if self.bc not in ("navier", "terminal"):
            raise DomainError(f"unknown boundary kind {self.bc!r}")
        if self.scheme not in ("closure", "reflect"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "reflect" and self.bc != "navier":
            raise DomainError("the reflection scheme supports Navier ends only")
        if self.potential_kind not in ("delaunay", "cylinder", "zero"):
            raise DomainError(f"unknown potential {self.potential_kind!r}")
        if self.potential_kind == "delaunay" and self.solution is None:
            raise DomainError("a Delaunay solution is required for the Delaunay potential")
        if not self.T > self.t0 or self.h <= 0:
            raise DomainError("need T > t0 and h > 0")
        if self.potential_kind == "delaunay" and self.h > self.solution.period / 200:
            raise DomainError(f"grid step {self.h} does not resolve the period (need <= T_eps/200)")
        if self.N < 16:
            raise DomainError("need at least 16 intervals")

    @property
    def N(self):
        return int(round((self.T - self.t0) / self.h))

    @property
    def grid(self):
        return np.linspace(self.t0, self.T, self.N + 1)

    @property
    def lam(self):
        return eigenvalue(self.l, self.params.n)


@dataclass
class BandedSystem:
    op: ModeOperator
    ab: np.ndarray
    lu: tuple
    matrix: object = field(repr=False)
    eq_rows: np.ndarray = field(repr=False)
    bc_rows: np.ndarray = field(repr=False)


def potential(op, t=None):
    """Zeroth-order coefficient of the mode operator on the grid (or at times t)."""
    n = op.params.n
    base = coercivity_margin(n, op.lam) + op.params.c_lin
    t = op.grid if t is None else np.asarray(t, dtype=float)
    if op.potential_kind == "zero":
        w = np.zeros_like(t)
    elif op.potential_kind == "cylinder":
        w = np.full_like(t, op.params.v_cyl ** (8 / (n - 4)))
    else:
        w = orbit_jet(op.solution, t, order=0)[0] ** (8 / (n - 4))
    return base - op.params.c_lin * w


def _stencil(nodes, i, h, order):
    return fd_weights(0.0, (np.asarray(nodes) - i) * h, order)


def assemble(op):
    """Assemble the discrete operator with its boundary rows as a banded system."""
    N, h = op.N, op.h
    a2 = 2 * op.lam + op.params.a
    a0 = potential(op)
    trip = {}

    def put(i, j, c):
        trip[(i, j)] = trip.get((i, j), 0.0) + c

    if op.scheme == "reflect":
        d4 = np.array([1.0, -4.0, 6.0, -4.0, 1.0]) / h**4
        d2 = np.array([0.0, 1.0, -2.0, 1.0, 0.0]) / h**2
        st = d4 - a2 * d2
        put(0, 0, 1.0)
        put(N, N, 1.0)
        for i in range(1, N):
            put(i, i, a0[i])
            for k, c in zip(range(-2, 3), st):
                j = i + k
                # odd reflection about the end points; the end values are zero
                if j < 0:
                    put(i, -j, -c)
                elif j > N:
                    put(i, 2 * N - j, -c)
                elif 0 < j < N:
                    put(i, j, c)
        eq_rows = np.arange(1, N)
        bc_rows = np.array([0, N])
    else:
        if op.bc == "navier":
            bc = {0: ([0], None, 0), N: ([N], None, 0), 1: (list(range(0, 6)), 0, 2), N - 1: (list(range(N - 5, N + 1)), N, 2)}
            eq_rows = np.arange(2, N - 1)
        else:
            bc = {
                N: ([N], None, 0),
                N - 1: (list(range(N - 4, N + 1)), N, 1),
                N - 2: (list(range(N - 5, N + 1)), N, 2),
                N - 3: (list(range(N - 6, N + 1)), N, 3),
            }
            eq_rows = np.arange(0, N - 3)
        for row, (nodes, at, order) in bc.items():
            if at is None:
                put(row, row, 1.0)
            else:
                for j, c in zip(nodes, _stencil(nodes, at, h, order)[:, order]):
                    put(row, j, c)
        centre = _stencil(range(-3, 4), 0, h, 4)
        centre = centre[:, 4] - a2 * centre[:, 2]
        for i in eq_rows:
            if 3 <= i <= N - 3:
                nodes, coef = range(i - 3, i + 4), centre
            else:
                nodes = range(0, 8) if i < 3 else range(N - 7, N + 1)
                W = _stencil(nodes, i, h, 4)
                coef = W[:, 4] - a2 * W[:, 2]
            for j, c in zip(nodes, coef):
                put(i, j, c)
            put(i, i, a0[i])
        bc_rows = np.array(sorted(bc))
    rows = np.array([k[0] for k in trip])
    cols = np.array([k[1] for k in trip])
    vals = np.array(list(trip.values()))
    lo = int(max(0, np.max(rows - cols)))
    up = int(max(0, np.max(cols - rows)))
    ab = np.zeros((lo + up + 1, N + 1))
    ab[up + rows - cols, cols] = vals
    mat = csr_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))
    return BandedSystem(op=op, ab=ab, lu=(lo, up), matrix=mat, eq_rows=eq_rows, bc_rows=bc_rows)


def apply_operator(system, w):
    """Discrete L w at the equation rows (boundary rows excluded)."""
    return (system.matrix @ np.asarray(w, dtype=float))[system.eq_rows]


def _march_terminal(op, f):
    """Backward RK4 for the terminal problem, f interpolated by a cubic spline."""
    N, h = op.N, op.h
    t = op.grid
    a2 = 2 * op.lam + op.params.a
    fine = np.linspace(op.t0, op.T, 2 * N + 1)
    a0 = potential(op, fine)
    ff = CubicSpline(t, f)(fine)
    ff[::2] = f

    def rhs(y, k):
        return np.array([y[1], y[2], y[3], a2 * y[2] - a0[k] * y[0] + ff[k]])

    y = np.zeros(4)
    out = np.zeros(N + 1)
    for i in range(N, 0, -1):
        k = 2 * i
        k1 = rhs(y, k)
        k2 = rhs(y - 0.5 * h * k1, k - 1)
        k3 = rhs(y - 0.5 * h * k2, k - 1)
        k4 = rhs(y - h * k3, k - 2)
        y = y - h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i - 1] = y[0]
    if not np.all(np.isfinite(out)):
        raise SolveError("terminal marching overflowed")
    return out


def solve_mode_bvp(system, f):
    """Solve L w = f with homogeneous boundary data; f is sampled on the grid.

    Navier problems use the banded finite-difference system.  Terminal
    problems carry all four conditions at T, and marching a wide stencil
    backwards excites its spurious roots, so they are integrated backwards
    from T by classical RK4 instead.
    """
    f = np.asarray(f, dtype=float)
    N = system.op.N
    if f.shape != (N + 1,):
        raise DomainError(f"right-hand side must have {N + 1} samples")
    if system.op.bc == "terminal":
        return _march_terminal(system.op, f)
    rhs = np.zeros(N + 1)
    rhs[system.eq_rows] = f[system.eq_rows]
    try:
        w = solve_banded(system.lu, system.ab, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolveError(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise SolveError("banded solve produced non-finite values")
    res = np.linalg.norm(system.matrix @ w - rhs)
    scale = max(np.linalg.norm(rhs), np.max(np.abs(system.ab)) * np.linalg.norm(w))
    if scale > 0 and res > 1e-10 * scale:
        raise SolveError(f"discrete residual {res:.3e} too large")
    return w


def admissible_delta(params, l):
    """Open interval of weights delta = (n-4)/2 + mu allowed for degree l."""
    base = (params.n - 4) / 2
    if l >= 2:
        return base + 2 - params.n, base + 2
    if l == 1:
        return base + 1, np.inf
    return base, np.inf


def apriori_ratio(op, f, delta, system=None):
    """sup e^(delta t) |w| / sup e^(delta t) |f| for the solution of L w = f.

    The ratio is 0 when f vanishes identically.
    """
    lo, hi = admissible_delta(op.params, op.l)
    if not lo < delta < hi:
        raise DomainError(f"delta={delta} outside the admissible interval ({lo}, {hi}) for l={op.l}")
    f = np.asarray(f, dtype=float)
    if not np.any(f):
        return 0.0
    system = assemble(op) if system is None else system
    w = solve_mode_bvp(system, f)
    weight = np.exp(delta * (op.grid - op.t0))
    return float(np.max(weight * np.abs(w)) / np.max(weight * np.abs(f)))


def smallest_eigenvalue(op):
    """Smallest eigenvalue of the symmetric (reflection) discretisation on its interior unknowns."""
    if op.scheme != "reflect":
        raise DomainError("eigenvalue check needs the symmetric reflection scheme")
    M = assemble(op).matrix.toarray()[1:-1, 1:-1]
    return float(eigvalsh(0.5 * (M + M.T), subset_by_index=(0, 0))[0])
