"""
Cooling a thermal mirror, step by step
======================================

A mechanical mode at n_th = 1 is coupled to a driven cavity at J = 1 with
the drive on the red sideband.  We follow the thermal phonon number until it
settles, split it by origin, and look at the final mechanical state.

Run with ``python notebooks/cooling_walkthrough.py``; a figure is written
next to the script when matplotlib is available.
"""

from pathlib import Path

import numpy as np

from radcool import SystemParams, run_scenario, RunSettings
from radcool.gaussian import purity, thermal_occupation

# rates in units of the cavity damping, omega_m / kappa = 8
params = SystemParams.from_J(1.0, omega_m=8.0, gamma_m=1e-3, n_th=1.0)
print(params)
print("drive intensity E/kappa =", params.drive_E)

res = run_scenario(params, RunSettings(t_end=400.0))
rep = res.report
print(f"regime {rep.regime.value}, t_s = {rep.t_s:.1f}/kappa, n_mf = {rep.n_mf:.4f}")
print(f"photon stabilization at {res.photon_report.t_s:.1f}/kappa")

# where the residual phonons come from, averaged over the last window
s = res.summary()
for key in ("n_m_sys", "n_m_cav", "n_m_bs", "n_m_sq"):
    print(f"  {key:8s} {s[key]:.4g}")

# the reduced mechanical state gains purity while it cools
p0 = purity(res.initial_state, "mechanical")
pf = purity(res.final_state, "mechanical")
print(f"purity {p0:.3f} -> {pf:.3f}, thermal-equivalent occupation "
      f"{thermal_occupation(res.final_state):.4f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    ph = res.phonon
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ph.t, ph.n_total, label="total")
    ax.semilogy(ph.t, np.maximum(ph.n_s, 1e-12), label="system operators")
    ax.semilogy(ph.t, ph.n_noise, label="noise")
    ax.axvline(rep.t_s, color="k", ls=":", lw=1)
    ax.set_xlabel(r"$\kappa t$")
    ax.set_ylabel("thermal phonon number")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(__file__).with_suffix(".png"), dpi=120)
