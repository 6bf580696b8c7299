"""Match the flat-model interior and exterior fields for shrinking necks.

Prints the solved parameters, the Cauchy mismatch before and after the
solve, and the radial PDE diagnostic.  A small forcing exercises every
mode solver.  Run with ``python3 demos/gluing_sweep.py``.
"""

from qflow.core import make_params
from qflow.gluing import run_glue

p = make_params(5)
print(f"{'eps':>5} {'r_eps':>9} {'b':>10} {'lambda':>10} {'lead':>9} {'after':>9} {'pde':>9} {'T':>8}")
for eps in (0.3, 0.2, 0.1, 0.05):
    state, man = run_glue(p, eps)
    print(
        f"{eps:5.2f} {man['schedule']['r_eps']:9.5f} {state.schedule.b:10.3e} {state.lam:10.6f} "
        f"{max(man['initial_mismatch'].values()):9.2e} {max(man['mismatch'].values()):9.2e} "
        f"{man['pde_residual']:9.2e} {man['T']:8.5f}"
    )

forcing = {(0, 0): [1e-4, 0, 2e-4, 0], (1, 2): [0, 1e-4, 0, -1e-4], (2, 0): [1e-4, 1e-4, 0, 0]}
state, man = run_glue(p, 0.2, forcing=forcing, l_max=2)
print("forced solve: a =", state.a.round(8), "mismatch =", max(man["mismatch"].values()))
