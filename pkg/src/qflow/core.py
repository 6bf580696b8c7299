"""
Dimension constants, the radial fourth-order ODE and its first integral.

Everything here is a pure function of the dimension ``n``.  The rational
constants A, B, C are kept as :class:`fractions.Fraction` so identities
such as ``A**2 == 4*B + 4*(n-2)**2`` can be checked exactly; floating point
views are exposed for numerical work.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError

__all__ = [
    "DimensionParams",
    "OdeState",
    "WeightedNormSpec",
    "make_params",
    "nonlinearity_f",
    "hamiltonian",
    "ode_rhs",
    "spherical_jet",
    "dyadic_annuli",
    "weighted_sup_norm",
]


@dataclass(frozen=True)
class DimensionParams:
    n: int
    A: Fraction = field(init=False)
    B: Fraction = field(init=False)
    C: Fraction = field(init=False)
    p_crit: Fraction = field(init=False)
    kelvin_exp: int = field(init=False)

    def __post_init__(self):
        n = self.n
        object.__setattr__(self, "A", Fraction(n * (n - 4) + 8, 2))
        object.__setattr__(self, "B", Fraction(n * n * (n - 4) ** 2, 16))
        object.__setattr__(self, "C", Fraction(n * (n - 4) * (n * n - 4), 16))
        object.__setattr__(self, "p_crit", Fraction(n + 4, n - 4))
        object.__setattr__(self, "kelvin_exp", 4 - n)

    @property
    def a(self):
        return float(self.A)

    @property
    def b(self):
        return float(self.B)

    @property
    def c(self):
        return float(self.C)

    @property
    def p(self):
        """Critical exponent (n+4)/(n-4) as a float."""
        return float(self.p_crit)

    @property
    def v_cyl(self):
        n = self.n
        return (n * (n - 4) / (n * n - 4)) ** ((n - 4) / 8)

    @property
    def H_cyl(self):
        n = self.n
        return -(n - 4) * (n * n - 4) / 8 * (n * (n - 4) / (n * n - 4)) ** (n / 4)

    @property
    def c_lin(self):
        """Coefficient n(n+4)(n^2-4)/16 of the linearised potential."""
        n = self.n
        return n * (n + 4) * (n * n - 4) / 16

    def as_dict(self):
        return {
            "n": self.n,
            "A": self.a,
            "B": self.b,
            "C": self.c,
            "A_exact": str(self.A),
            "B_exact": str(self.B),
            "C_exact": str(self.C),
            "v_cyl": self.v_cyl,
            "H_cyl": self.H_cyl,
            "p_crit": str(self.p_crit),
            "kelvin_exp": self.kelvin_exp,
        }


class OdeState(NamedTuple):
    """A point of the first-order system (v, v', v'', v''') at cylinder time t."""

    t: float
    v: float
    v1: float
    v2: float
    v3: float

    def as_array(self):
        return np.array([self.v, self.v1, self.v2, self.v3], dtype=float)


def make_params(n):
    if int(n) != n or n < 5:
        raise DomainError(f"n must be ≥ 5 (got {n})")
    return DimensionParams(int(n))


def nonlinearity_f(params, v):
    """C v^{(n+4)/(n-4)} - B v for v >= 0."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainError("nonlinearity is only defined for v >= 0")
    out = params.c * v ** params.p - params.b * v
    return out if out.ndim else float(out)


def hamiltonian(params, state):
    """First integral of the ODE, evaluated on a state (vectorised over arrays)."""
    n = params.n
    v, v1, v2, v3 = (np.asarray(x, dtype=float) for x in state[1:5])
    h = (
        -v3 * v1
        + 0.5 * v2 ** 2
        + (n * n - 4 * n + 8) / 4 * v1 ** 2
        - n * n * (n - 4) ** 2 / 32 * v ** 2
        + (n - 4) ** 2 * (n * n - 4) / 32 * np.abs(v) ** (2 * n / (n - 4))
    )
    return h if h.ndim else float(h)


def ode_rhs(params, state):
    """Fourth derivative v'''' = A v'' + f(v)."""
    return params.a * np.asarray(state[3], dtype=float) + nonlinearity_f(params, state[1])


def spherical_jet(params, t, order=4):
    """Derivatives 0..order of the spherical solution cosh(t)^((4-n)/2).

    Uses d/dt [cosh^k P(tanh)] = cosh^k [k T P(T) + (1 - T^2) P'(T)], so every
    derivative is cosh^k times a polynomial in tanh with exact coefficients.
    """
    kappa = (4 - params.n) / 2
    t = np.asarray(t, dtype=float)
    T = np.tanh(t)
    base = np.cosh(t) ** kappa
    poly = np.array([1.0])
    out = []
    for _ in range(order + 1):
        out.append(base * P.polyval(T, poly))
        poly = P.polyadd(P.polymul([0.0, kappa], poly), P.polymul([1.0, 0.0, -1.0], P.polyder(poly)))
    return np.array(out)


@dataclass(frozen=True)
class WeightedNormSpec:
    """Discrete weighted C^k_mu norm on the punctured ball of radius r.

    ``levels`` dyadic annuli [sigma, 2 sigma] with sigma = r/2, r/4, ...
    """

    k: int
    mu: float
    r: float
    levels: int = 20

    def __post_init__(self):
        if self.r <= 0:
            raise DomainError("outer radius must be positive")
        if not 0 <= self.k <= 4:
            raise DomainError("derivative order k must lie in 0..4")
        if self.levels < 1:
            raise DomainError("need at least one annulus")


def dyadic_annuli(spec):
    """Inner radii sigma of the annuli, outermost first."""
    return spec.r / 2.0 ** np.arange(1, spec.levels + 1)


def weighted_sup_norm(radii, derivs, spec, per_annulus=False):
    """sup_sigma sigma^{-mu} sup_{|x| in [sigma, 2 sigma]} sum_j sigma^j |nabla^j u|.

    ``derivs`` maps derivative order j to samples of |nabla^j u| at ``radii``
    (a sequence indexed by j is accepted too).  Orders above ``spec.k`` are
    ignored and missing orders contribute zero.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise DomainError("empty sample grid")
    if not isinstance(derivs, dict):
        derivs = dict(enumerate(derivs))
    sigmas = dyadic_annuli(spec)
    values = np.zeros(sigmas.size)
    for i, sigma in enumerate(sigmas):
        mask = (radii >= sigma * (1 - 1e-12)) & (radii <= 2 * sigma * (1 + 1e-12))
        if not mask.any():
            raise DomainError(f"no samples in annulus [{sigma:g}, {2 * sigma:g}]")
        total = np.zeros(mask.sum())
        for j, samples in derivs.items():
            if j <= spec.k:
                total += sigma ** j * np.abs(np.asarray(samples, dtype=float)[mask])
        values[i] = sigma ** (-spec.mu) * total.max()
    if per_annulus:
        return sigmas, values
    return float(values.max())
