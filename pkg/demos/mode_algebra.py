"""Biharmonic extensions per spherical-harmonic degree and the mode matrices.

Run with ``python3 demos/mode_algebra.py``.
"""

import numpy as np

from qflow.modes import BoundaryData, exterior_poisson, interior_poisson, mode_table, n2n_apply, n2n_solve

n = 5
for row in mode_table(n, 4):
    extra = f" det={row['n2n_det']:.4f}" if "n2n_det" in row else ""
    print(f"l={row['l']} lambda={row['lambda']:3d} mult={row['multiplicity']:3d} "
          f"mu+={row['mu_plus']:.4f} mu-={row['mu_minus']:.4f} D_l={row['D_l']}{extra}")

data = BoundaryData(0.5, {(2, 0): [1.0, -2.0], (3, 1): [0.3, 0.7]})
print("interior profiles:", {k: v.terms for k, v in interior_poisson(data, n).items()})
print("exterior profiles:", {k: v.terms for k, v in exterior_poisson(data, n).items()})
back = n2n_solve(n2n_apply(data, n), n)
print("round trip error:", max(np.max(np.abs(back.coeffs[k] - data.coeffs[k])) for k in data.coeffs))
