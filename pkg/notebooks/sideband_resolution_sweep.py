"""
Best sideband resolution at fixed drive
=======================================

With the drive intensity held at E = 8e5 kappa, raising omega_m/kappa
suppresses the heating channel but also weakens the effective coupling
J = g E / omega_m.  The stabilized phonon number therefore has a minimum at
an intermediate resolution.  The same sweep is available as
``radcool figure fig3a``.
"""

import numpy as np

from radcool import RunSettings, sweep
from radcool.cli import figure_preset

spec = figure_preset("fig3a", RunSettings(t_end=400.0))
table = sweep(spec)

print(f"{'s_m':>6} {'J':>7} {'regime':>12} {'n_mf':>9} {'t_s':>7}")
for row in table.rows:
    n_mf = "-" if row["n_mf"] is None else f"{row['n_mf']:.4f}"
    t_s = "-" if row["t_s"] is None else f"{row['t_s']:.1f}"
    print(f"{row['axis_value']:6g} {row['J']:7.3f} {row['regime']:>12} {n_mf:>9} {t_s:>7}")

n = table.column("n_mf")
k = int(np.nanargmin(n))
print(f"lowest n_mf {n[k]:.4f} at omega_m/kappa = {table.rows[k]['axis_value']:g}")
