"""Compiled Runge-Kutta kernels for the autonomous fourth-order ODE.

The state is (v, v', v'', v''') and the vector field is
v'''' = a v'' + c v|v|^(p-1) - b v.  The odd extension of the power only
matters inside a Runge-Kutta stage; the drivers stop as soon as a
completed step has v < 0.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BELOW = -1
STATUS_ABOVE = 1


@njit(cache=True, inline="always")
def _accel(v, v2, a, b, c, p):
    return a * v2 + c * v * abs(v) ** (p - 1.0) - b * v


@njit(cache=True, inline="always")
def _rk4(v, v1, v2, v3, h, a, b, c, p):
    k1v, k1a, k1b, k1c = v1, v2, v3, _accel(v, v2, a, b, c, p)
    hh = 0.5 * h
    k2v = v1 + hh * k1a
    k2a = v2 + hh * k1b
    k2b = v3 + hh * k1c
    k2c = _accel(v + hh * k1v, v2 + hh * k1b, a, b, c, p)
    k3v = v1 + hh * k2a
    k3a = v2 + hh * k2b
    k3b = v3 + hh * k2c
    k3c = _accel(v + hh * k2v, v2 + hh * k2b, a, b, c, p)
    k4v = v1 + h * k3a
    k4a = v2 + h * k3b
    k4b = v3 + h * k3c
    k4c = _accel(v + h * k3v, v2 + h * k3b, a, b, c, p)
    s = h / 6.0
    return (
        v + s * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        v1 + s * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        v2 + s * (k1b + 2.0 * k2b + 2.0 * k3b + k4b),
        v3 + s * (k1c + 2.0 * k2c + 2.0 * k3c + k4c),
    )


@njit(cache=True)
def integrate_fixed(y0, h, nsteps, a, b, c, p, ceiling):
    """Integrate nsteps of size h.

    Returns (trajectory, status, last_index).  On escape the trajectory is
    valid up to and including ``last_index`` (the first offending sample).
    """
    out = np.empty((nsteps + 1, 4))
    v, v1, v2, v3 = y0[0], y0[1], y0[2], y0[3]
    out[0, 0] = v
    out[0, 1] = v1
    out[0, 2] = v2
    out[0, 3] = v3
    if v < 0.0:
        return out, STATUS_BELOW, 0
    if abs(v) > ceiling:
        return out, STATUS_ABOVE, 0
    for k in range(nsteps):
        v, v1, v2, v3 = _rk4(v, v1, v2, v3, h, a, b, c, p)
        out[k + 1, 0] = v
        out[k + 1, 1] = v1
        out[k + 1, 2] = v2
        out[k + 1, 3] = v3
        if v < 0.0:
            return out, STATUS_BELOW, k + 1
        if v > ceiling:
            return out, STATUS_ABOVE, k + 1
    return out, STATUS_OK, nsteps


@njit(cache=True)
def classify_shot(eps, q, h, tmax, a, b, c, p, ceiling, floor):
    """Follow the shot (eps, 0, q, 0) and report which way it leaves.

    Returns +1 when the orbit exceeds ``ceiling`` or comes back to a local
    minimum above ``eps``, -1 when it drops below ``floor`` (or below zero)
    or returns to a minimum at or below ``eps``, and 0 when neither happens
    before ``tmax``.
    """
    v, v1, v2, v3 = eps, 0.0, q, 0.0
    passed_max = False
    nsteps = int(tmax / h) + 1
    for _ in range(nsteps):
        old_v1 = v1
        v, v1, v2, v3 = _rk4(v, v1, v2, v3, h, a, b, c, p)
        if v < floor or v < 0.0:
            return -1
        if v > ceiling:
            return 1
        if not passed_max:
            if old_v1 > 0.0 and v1 <= 0.0:
                passed_max = True
        elif old_v1 < 0.0 and v1 >= 0.0:
            return 1 if v > eps else -1
    return 0
