"""
Euclidean conformal factors built from Delaunay orbits.

Radial fields are described by their Euler jet, the list
``[u, D u, D^2 u, ...]`` with ``D = rho d/drho``.  In those terms the radial
Laplacian and bi-Laplacian are polynomials in D,

    rho^2 Delta      = D^2 + (n - 2) D
    rho^4 Delta^2    = (D - 2)(D + n - 4) D (D + n - 2),

and the cylinder substitution u = rho^k v(log R - log rho), k = (4 - n)/2,
turns D into k - d/dt.  So a Delaunay orbit hands over its exact jet and
nothing needs to be differentiated numerically.  A finite-difference route
on log-uniform grids is provided as an independent check.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .delaunay import jet as orbit_jet
from .errors import DomainError

__all__ = [
    "ConformalFactor",
    "euler_jet_from_cylinder",
    "radial_jet",
    "u_from_v",
    "u_family",
    "kelvin",
    "bubble",
    "bubble_jet",
    "euler_poly_bilaplacian",
    "bilaplacian_from_jet",
    "laplacian_from_jet",
    "fd_weights",
    "radial_bilaplacian",
    "flat_residual",
    "expansion_check_u",
    "translation_expansion_check",
    "upsilon",
    "upsilon_jet",
]


@dataclass(frozen=True)
class ConformalFactor:
    """u_{eps,R,a}: a Delaunay orbit placed at scale R and translated at infinity by a."""

    solution: object
    R: float = 1.0
    a: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("R must be positive")
        n = self.solution.params.n
        a = np.zeros(n) if self.a is None else np.asarray(self.a, dtype=float)
        if a.shape != (n,):
            raise DomainError(f"translation vector must have {n} components")
        object.__setattr__(self, "a", a)

    @property
    def params(self):
        return self.solution.params

    @property
    def n(self):
        return self.solution.params.n


def _points(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DomainError(f"points must have {n} coordinates")
    return x


def euler_jet_from_cylinder(vjet, rho, n):
    """Euler jet of rho^k v(tau) from the t-jet of v evaluated at tau.

    ``vjet[i]`` holds d^i v / dt^i at tau = log R - log rho.
    """
    k = (4 - n) / 2
    rho = np.asarray(rho, dtype=float)
    pref = rho**k
    out = []
    for j in range(len(vjet)):
        acc = sum(comb(j, i) * k ** (j - i) * (-1) ** i * vjet[i] for i in range(j + 1))
        out.append(pref * acc)
    return np.array(out)


def radial_jet(solution, R, rho, order=4):
    """Euler jet D^j u_{eps,R}(rho), j = 0..order."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("radius must be positive")
    tau = np.log(R) - np.log(rho)
    return euler_jet_from_cylinder(orbit_jet(solution, np.ravel(tau), order), np.ravel(rho), solution.params.n).reshape(
        (order + 1,) + rho.shape
    )


def u_from_v(solution, R, x):
    """|x|^((4-n)/2) v(log R - log|x|) at points x of shape (..., n)."""
    x = _points(x, solution.params.n)
    rho = np.linalg.norm(x, axis=-1)
    if np.any(rho == 0):
        raise DomainError("u is singular at the origin")
    out = radial_jet(solution, R, rho, order=0)[0]
    return out if out.ndim else float(out)


def u_family(factor, x):
    """The translated family |x - a|x|^2|^((4-n)/2) v(-log|x| + log|x/|x| - a|x|| + log R)."""
    n = factor.n
    x = _points(x, n)
    rho = np.linalg.norm(x, axis=-1)
    if np.any(rho == 0):
        raise DomainError("u is singular at the origin")
    if not np.any(factor.a):
        return u_from_v(factor.solution, factor.R, x)
    shifted = x - factor.a * rho[..., None] ** 2
    dist = np.linalg.norm(shifted, axis=-1)
    if np.any(dist == 0):
        raise DomainError("u is singular at a/|a|^2")
    tau = -np.log(rho) + np.log(dist / rho) + np.log(factor.R)
    v = orbit_jet(factor.solution, np.ravel(tau), order=0)[0].reshape(rho.shape)
    out = dist ** ((4 - n) / 2) * v
    return out if out.ndim else float(out)


def kelvin(u, x, n=None):
    """|x|^(4-n) u(x / |x|^2) for a callable u on points of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] if n is None else n
    rho2 = np.sum(x * x, axis=-1)
    if np.any(rho2 == 0):
        raise DomainError("Kelvin transform is singular at the origin")
    out = rho2 ** ((4 - n) / 2) * u(x / rho2[..., None])
    return out


def bubble(n, rho):
    """The standard bubble ((1 + rho^2) / 2)^((4-n)/2)."""
    return ((1 + np.asarray(rho, dtype=float) ** 2) / 2) ** ((4 - n) / 2)


def bubble_jet(n, rho, order=4):
    """Euler jet of the bubble in closed form.

    With w = rho^2/(1 + rho^2) one has D w = 2 w (1 - w) and
    D g = 2 k w g for g = ((1 + rho^2)/2)^k, so D^j g = g P_j(w) for
    polynomials generated by P_{j+1} = 2 k w P_j + 2 w (1 - w) P_j'.
    """
    from numpy.polynomial import polynomial as P

    k = (4 - n) / 2
    rho = np.asarray(rho, dtype=float)
    w = rho**2 / (1 + rho**2)
    g = bubble(n, rho)
    poly = np.array([1.0])
    out = []
    for _ in range(order + 1):
        out.append(g * P.polyval(w, poly))
        poly = P.polyadd(P.polymul([0.0, 2 * k], poly), P.polymul([0.0, 2.0, -2.0], P.polyder(poly)))
    return np.array(out)


def euler_poly_bilaplacian(n):
    """Coefficients c_j with rho^4 Delta^2 = sum_j c_j D^j (index = power of D)."""
    return np.array([0.0, -2.0 * (n - 4) * (n - 2), (n - 6) * (n - 2) - 2.0 * (n - 4), 2.0 * n - 8, 1.0])


def laplacian_from_jet(rho, ujet, n):
    return (ujet[2] + (n - 2) * ujet[1]) / np.asarray(rho, dtype=float) ** 2


def bilaplacian_from_jet(rho, ujet, n):
    """Delta^2 u for a radial u from its Euler jet (orders 0..4)."""
    c = euler_poly_bilaplacian(n)
    return sum(c[j] * ujet[j] for j in range(1, 5)) / np.asarray(rho, dtype=float) ** 4


def fd_weights(z, x, m):
    """Finite-difference weights for derivatives 0..m at z on nodes x (Fornberg's recursion)."""
    x = np.asarray(x, dtype=float)
    npts = len(x)
    c = np.zeros((npts, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def radial_bilaplacian(rho, u, n, accuracy=4, return_laplacian=False):
    """Delta^2 u for radial samples on a log-uniform grid, by centred differences in log rho.

    Returns ``(rho_interior, values)``; the ``accuracy // 2 + 1`` points at
    each end are dropped because a centred fourth-derivative stencil does
    not fit there.  Accuracy is the formal order in the log step.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if accuracy < 2 or accuracy % 2:
        raise DomainError("accuracy must be an even integer >= 2")
    half = accuracy // 2 + 1
    width = 2 * half + 1
    if rho.size < max(width, 5) or rho.size != u.size:
        raise DomainError(f"need at least {max(width, 5)} samples on matching grids")
    s = np.log(rho)
    ds = np.diff(s)
    if np.any(ds <= 0) or np.ptp(ds) > 1e-9 * ds.mean():
        raise DomainError("grid must be uniform in log radius")
    h = ds.mean()
    W = fd_weights(0.0, np.arange(-half, half + 1) * h, 4)
    m = rho.size - 2 * half
    stack = np.lib.stride_tricks.sliding_window_view(u, width)[:m]
    ujet = [stack @ W[:, j] for j in range(5)]
    r_in = rho[half:-half]
    lap = laplacian_from_jet(r_in, ujet, n)
    bil = bilaplacian_from_jet(r_in, ujet, n)
    if return_laplacian:
        return r_in, bil, lap
    return r_in, bil


def flat_residual(params, rho, u=None, ujet=None, accuracy=4):
    """Delta^2 u - C u^((n+4)/(n-4)) for a radial u.

    Pass either an exact Euler jet ``ujet`` (orders 0..4) or samples ``u`` on
    a log-uniform grid; with samples the interior grid is returned too.
    """
    n = params.n
    rho = np.asarray(rho, dtype=float)
    if ujet is not None:
        ujet = np.asarray(ujet, dtype=float)
        if np.any(ujet[0] <= 0):
            raise DomainError("u must be positive")
        return bilaplacian_from_jet(rho, ujet, n) - params.c * ujet[0] ** params.p
    if u is None:
        raise DomainError("either samples or a jet is required")
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise DomainError("u must be positive")
    r_in, bil = radial_bilaplacian(rho, u, n, accuracy=accuracy)
    half = (rho.size - r_in.size) // 2
    return r_in, bil - params.c * u[half : half + r_in.size] ** params.p


def _expansion_model(solution, R, rho):
    n = solution.params.n
    al, be = solution.alpha, solution.beta
    return al / 2 * (R ** ((4 - n) / 2) + R ** ((n - 4) / 2) * rho ** (4 - n)) + be / 2 * (
        R ** (-n / 2) * rho**2 + R ** (n / 2) * rho ** (2 - n)
    )


def expansion_check_u(factor, rho=None, npts=2001, model=None):
    """Normalised remainder of u_{eps,R} against its four-term power expansion.

    The sup of |u - model| / (R^((n+4)/2) eps^p rho^(-n)) over ``rho``.  The
    default grid is log-uniform on [R e^(-T/2), min(R, 1)], the neck-to-bulge
    stretch where the cylinder expansion is taken.  ``model`` may replace the
    default four-term model (a callable of rho).
    """
    sol = factor.solution
    n, R = factor.n, factor.R
    if rho is None:
        rho = np.geomspace(R * np.exp(-sol.period / 2), min(R, 1.0), npts)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 1):
        raise DomainError("grid must lie in (0, 1]")
    u = radial_jet(sol, R, rho, order=0)[0]
    ref = _expansion_model(sol, R, rho) if model is None else model(rho)
    scale = R ** ((n + 4) / 2) * sol.eps**sol.params.p * rho ** (-n)
    return float(np.max(np.abs(u - ref) / scale))


def translation_expansion_check(factor, x, r0=0.1):
    """Second-order remainder of u_{eps,R,a} against its linearisation in a.

    Returns ``{"generic": ..., "outer": ...}`` with the sup of
    |u_a - u - ((n-4) u + rho u_rho) <a, x>| normalised by
    |a|^2 |x|^((8-n)/2), and, over the points with |x| >= R, by
    |a|^2 eps R^((4-n)/2) |x|^2 (``None`` when no point qualifies).
    """
    n = factor.n
    x = np.atleast_2d(_points(x, n))
    a = factor.a
    rho = np.linalg.norm(x, axis=-1)
    if np.any(np.linalg.norm(a) * rho >= r0):
        raise DomainError(f"need |a||x| < r0 = {r0}")
    ujet = radial_jet(factor.solution, factor.R, rho, order=1)
    lin = ujet[0] + ((n - 4) * ujet[0] + ujet[1]) * (x @ a)
    full = u_family(factor, x)
    rem = np.abs(full - lin)
    a2 = float(a @ a)
    if a2 == 0:
        return {"generic": 0.0, "outer": 0.0}
    generic = float(np.max(rem / (a2 * rho ** ((8 - n) / 2))))
    far = rho >= factor.R
    outer = None
    if far.any():
        scale = a2 * factor.solution.eps * factor.R ** ((4 - n) / 2) * rho[far] ** 2
        outer = float(np.max(rem[far] / scale))
    return {"generic": generic, "outer": outer}


def upsilon(factor, x):
    """The biharmonic correction -(beta/2) R^(-n/2) |x|^2."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    out = -factor.solution.beta / 2 * factor.R ** (-factor.n / 2) * r2
    return out if np.ndim(out) else float(out)


def upsilon_jet(solution, R, rho, order=4):
    """Euler jet of Upsilon: D^j (c rho^2) = 2^j c rho^2."""
    c = -solution.beta / 2 * R ** (-solution.params.n / 2)
    rho = np.asarray(rho, dtype=float)
    return np.array([2.0**j * c * rho**2 for j in range(order + 1)])

