"""Shoot Delaunay orbits, then look at their period, energy and sphere limit.

Run with ``python3 demos/delaunay_tour.py``.
"""

import numpy as np

from qflow.conformal import ConformalFactor, expansion_check_u
from qflow.core import make_params
from qflow.delaunay import check_prop2, hamiltonian_drift, jet, shoot_delaunay, sphere_distance

for n in (5, 6, 8):
    p = make_params(n)
    print(f"n={n}: A={p.A}, B={p.B}, C={p.C}, v_cyl={p.v_cyl:.6f}, H_cyl={p.H_cyl:.6f}")
    for eps in (0.3, 0.1, 0.05):
        sol = shoot_delaunay(p, eps)
        rem = check_prop2(sol)
        print(
            f"  eps={eps:<5} q={sol.q:+.6e} T={sol.period:8.4f} H={sol.energy:+.4e} "
            f"drift={hamiltonian_drift(sol):.1e} |v-v_sph|={sphere_distance(sol):.2e} "
            f"model remainder (order 0)={rem[0]:.4f} u-expansion={expansion_check_u(ConformalFactor(sol)):.4f}"
        )

# The sampled orbit is even about its minimum and maximum.
sol = shoot_delaunay(make_params(5), 0.2)
half = sol.period / 2
s = np.linspace(0, half, 5)
print("symmetry about T/2:", np.max(np.abs(jet(sol, half + s, 0)[0] - jet(sol, half - s, 0)[0])))
