"""
Spherical-harmonic mode algebra for the flat bi-Laplacian.

For a degree-l harmonic Y_l, Delta(rho^m Y_l) = F(m, l) rho^(m-2) Y_l with
F(m, l) = m(m + n - 2) - l(l + n - 2), so the radial biharmonic solutions of
degree l are the four powers {l, l + 2, 2 - n - l, 4 - n - l}.  Every
operator below is closed-form algebra on those powers.

Profiles are stored in the scaled variable s = rho / r where r is the
boundary sphere.  The four Cauchy traces we use are the Euler-scaled ones,

    (w,  rho d_rho w,  rho^2 Delta w,  rho^3 d_rho Delta w),

and on a monomial s^m Y_l they evaluate to s^m (1, m, F, F (m - 2)).
Boundary data follow the scaled convention: the Laplacian datum c2 means
Delta w = c2 / r^2 on the sphere.
"""

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np

from .errors import DomainError, ResonanceError, SolveError

__all__ = [
    "ModeIndex",
    "BoundaryData",
    "RadialProfile",
    "eigenvalue",
    "multiplicity",
    "laplacian_factor",
    "project_low",
    "project_high",
    "interior_poisson",
    "exterior_poisson",
    "annulus_navier_solve",
    "indicial_roots",
    "n2n_matrix",
    "n2n_apply",
    "n2n_solve",
    "mode_table",
    "monomial_traces",
]


def eigenvalue(l, n):
    """Eigenvalue l(l + n - 2) of the sphere Laplacian on degree-l harmonics."""
    if l < 0:
        raise DomainError("degree must be non-negative")
    return l * (l + n - 2)


def multiplicity(l, n):
    """Dimension of the space of degree-l spherical harmonics on S^(n-1)."""
    if l < 0:
        raise DomainError("degree must be non-negative")
    return comb(n + l - 1, n - 1) - (comb(n + l - 3, n - 1) if l >= 2 else 0)


@dataclass(frozen=True)
class ModeIndex:
    l: int
    n: int

    @property
    def lam(self):
        return eigenvalue(self.l, self.n)

    @property
    def multiplicity(self):
        return multiplicity(self.l, self.n)


def laplacian_factor(m, l, n):
    """F(m, l) = m(m + n - 2) - l(l + n - 2); exact for int or Fraction arguments."""
    return m * (m + n - 2) - l * (l + n - 2)


def monomial_traces(m, l, n, s=1.0):
    """Euler-scaled traces of s^m Y_l at scaled radius s."""
    f = laplacian_factor(m, l, n)
    sm = s**m
    return np.array([sm, m * sm, f * sm, f * (m - 2) * sm], dtype=float)


@dataclass
class BoundaryData:
    """Navier data (c0, c2) on the sphere of radius r, keyed by (degree, position)."""

    r: float
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("radius must be positive")
        self.coeffs = {tuple(k): np.asarray(v, dtype=float).copy() for k, v in self.coeffs.items()}

    def degrees(self):
        return sorted({k[0] for k in self.coeffs})

    def copy(self):
        return BoundaryData(self.r, self.coeffs)

    def __add__(self, other):
        if self.r != other.r:
            raise DomainError("cannot add data on different spheres")
        out = self.copy()
        for k, v in other.coeffs.items():
            out.coeffs[k] = out.coeffs.get(k, np.zeros(2)) + v
        return out

    def max_abs(self):
        return max((float(np.max(np.abs(v))) for v in self.coeffs.values()), default=0.0)


def project_low(data):
    """Keep degrees 0 and 1."""
    return BoundaryData(data.r, {k: v for k, v in data.coeffs.items() if k[0] <= 1})


def project_high(data):
    """Keep degrees 2 and above."""
    return BoundaryData(data.r, {k: v for k, v in data.coeffs.items() if k[0] >= 2})


@dataclass(frozen=True)
class RadialProfile:
    """w(rho) Y_l with w = sum_m c_m (rho / r)^m.

    ``terms`` maps exponent to coefficient.  Homogeneous exponents come from
    the set {l, l+2, 2-n-l, 4-n-l}; any other exponent is a particular term.
    """

    l: int
    n: int
    r: float
    terms: dict
    kind: str = "interior"
    convention: str = "Delta w = c2 / r^2 on |x| = r; profiles in s = |x| / r"

    def basis(self):
        return (self.l, self.l + 2, 2 - self.n - self.l, 4 - self.n - self.l)

    def value(self, rho):
        s = np.asarray(rho, dtype=float) / self.r
        return sum(c * s**m for m, c in self.terms.items())

    def euler_jet(self, rho, order=4):
        s = np.asarray(rho, dtype=float) / self.r
        return np.array([sum(c * m**j * s**m for m, c in self.terms.items()) for j in range(order + 1)])

    def laplacian(self, rho):
        rho = np.asarray(rho, dtype=float)
        s = rho / self.r
        return sum(c * laplacian_factor(m, self.l, self.n) * s**m for m, c in self.terms.items()) / rho**2

    def traces(self, rho=None):
        """Euler-scaled traces (w, rho w', rho^2 Delta w, rho^3 (Delta w)') at rho (default r)."""
        s = 1.0 if rho is None else float(rho) / self.r
        out = np.zeros(4)
        for m, c in self.terms.items():
            out += c * monomial_traces(m, self.l, self.n, s)
        return out


def _check_degree(l):
    if int(l) != l or l < 0:
        raise DomainError("degree must be a non-negative integer")


def interior_profile(l, n, r, c0, c2):
    """Biharmonic extension inside the ball with Navier data (c0, c2)."""
    _check_degree(l)
    if l <= 1:
        if c0 != 0:
            raise DomainError("degrees 0 and 1 accept Laplacian data only inside the ball")
        return RadialProfile(l, n, r, {l + 2: c2 / laplacian_factor(l + 2, l, n)})
    b = c2 / laplacian_factor(l + 2, l, n)
    return RadialProfile(l, n, r, {l: c0 - b, l + 2: b})


def exterior_profile(l, n, r, c0, c2):
    """Decaying biharmonic extension outside the ball with Navier data (c0, c2)."""
    _check_degree(l)
    d_l = laplacian_factor(4 - n - l, l, n)
    if d_l == 0:
        raise ResonanceError(f"exterior Laplacian factor vanishes for l={l}, n={n}")
    d = c2 / d_l
    return RadialProfile(l, n, r, {2 - n - l: c0 - d, 4 - n - l: d}, kind="exterior")


def interior_poisson(data, n, mu=2.0):
    """Interior biharmonic extensions of every mode in ``data``.

    Returns ``{key: RadialProfile}``.  Degrees 0 and 1 may only carry a
    Laplacian datum and are extended by |x|^2-type profiles.  ``mu`` is the
    growth exponent of the target class and must not exceed 2.
    """
    if mu > 2:
        raise DomainError("interior profiles grow like |x|^2 at most")
    return {k: interior_profile(k[0], n, data.r, c[0], c[1]) for k, c in data.coeffs.items()}


def exterior_poisson(data, n):
    """Exterior biharmonic extensions (decay class |x|^(4-n)) of every mode in ``data``."""
    return {k: exterior_profile(k[0], n, data.r, c[0], c[1]) for k, c in data.coeffs.items()}


def annulus_navier_solve(l, n, r, s, rhs, variant="annulus"):
    """Solve Delta^2 (w Y_l) = c rho^m Y_l with w = Delta w = 0 on the boundary.

    ``rhs`` is the pair (c, m).  ``variant="annulus"`` imposes the Navier
    conditions at rho = r and rho = s with all four homogeneous powers;
    ``variant="ball"`` imposes them at rho = s only, using the two regular
    powers.  The profile is returned in the scaled variable rho / s.
    """
    _check_degree(l)
    c, m = rhs
    if not 0 < 2 * r < s:
        raise DomainError("need 0 < 2r < s")
    f4 = laplacian_factor(m + 4, l, n)
    f2 = laplacian_factor(m + 2, l, n)
    if f4 == 0 or f2 == 0:
        raise ResonanceError(f"rho^{m} is resonant for degree {l}; logarithmic solutions are not supported")
    terms = {}
    if c != 0:
        terms[m + 4] = c * s ** (m + 4) / (f4 * f2)
    part = RadialProfile(l, n, s, dict(terms))
    if variant == "annulus":
        exps = [l, l + 2, 2 - n - l, 4 - n - l]
        radii = [r, s]
    elif variant == "ball":
        exps = [l, l + 2]
        radii = [s]
    else:
        raise DomainError(f"unknown variant {variant!r}")
    rows, rhs_vec = [], []
    for rad in radii:
        x = rad / s
        rows.append([x**e for e in exps])
        rows.append([laplacian_factor(e, l, n) * x**e for e in exps])
        rhs_vec.append(-part.value(rad))
        rhs_vec.append(-part.laplacian(rad) * rad**2)
    M = np.array(rows, dtype=float)
    try:
        coef = np.linalg.solve(M, np.array(rhs_vec))
    except np.linalg.LinAlgError as exc:
        raise SolveError(str(exc)) from exc
    if not np.all(np.isfinite(coef)):
        raise SolveError("boundary system is singular")
    for e, cf in zip(exps, coef):
        terms[e] = terms.get(e, 0.0) + cf
    return RadialProfile(l, n, s, terms, kind=variant)


def indicial_roots(l, n):
    """Characteristic exponents (mu_plus, mu_minus) of the degree-l cylinder operator without potential."""
    _check_degree(l)
    lam = eigenvalue(l, n)
    inner = sqrt((n - 2) ** 2 + 4 * lam)
    base = n * (n - 4) + 8 + 4 * lam
    return sqrt(base + 4 * inner) / 2, sqrt(base - 4 * inner) / 2


def n2n_matrix(l, n, r=1.0):
    """Matrix of (c0, c2) -> (rho d_rho (P - Q), rho^3 d_rho Delta (P - Q)) at rho = r.

    P and Q are the interior and exterior extensions.  Built from the
    profiles themselves; since profiles live in s = rho/r the result does
    not depend on r.
    """
    _check_degree(l)
    if l < 2:
        raise DomainError("the mode matrix is defined for degrees >= 2")
    cols = []
    for c0, c2 in ((1.0, 0.0), (0.0, 1.0)):
        jump = interior_profile(l, n, r, c0, c2).traces() - exterior_profile(l, n, r, c0, c2).traces()
        cols.append([jump[1], jump[3]])
    return np.array(cols).T


def _det2(M):
    return float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])


def n2n_apply(data, n):
    """Apply the mode matrix degree by degree; returns the Neumann-type pair per key."""
    if any(k[0] < 2 for k in data.coeffs):
        raise DomainError("data must be supported on degrees >= 2")
    return BoundaryData(data.r, {k: n2n_matrix(k[0], n, data.r) @ v for k, v in data.coeffs.items()})


def n2n_solve(neumann, n):
    """Inverse of :func:`n2n_apply` by 2x2 solves."""
    if any(k[0] < 2 for k in neumann.coeffs):
        raise DomainError("data must be supported on degrees >= 2")
    out = {}
    for k, v in neumann.coeffs.items():
        M = n2n_matrix(k[0], n, neumann.r)
        if _det2(M) == 0:
            raise SolveError(f"singular mode matrix at l={k[0]}")
        out[k] = np.linalg.solve(M, v)
    return BoundaryData(neumann.r, out)


def mode_table(n, l_max):
    """Per-degree summary rows for l = 0..l_max."""
    rows = []
    for l in range(l_max + 1):
        mp, mm = indicial_roots(l, n)
        row = {
            "l": l,
            "lambda": eigenvalue(l, n),
            "multiplicity": multiplicity(l, n),
            "mu_plus": mp,
            "mu_minus": mm,
            "D_l": laplacian_factor(4 - n - l, l, n),
        }
        if l >= 2:
            M = n2n_matrix(l, n)
            row.update(n2n_11=M[0, 0], n2n_12=M[0, 1], n2n_21=M[1, 0], n2n_22=M[1, 1], n2n_det=_det2(M))
        rows.append(row)
    return rows
