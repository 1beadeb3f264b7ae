"""
Cavity noise spectrum in the two coupling regimes
=================================================

In the well resolved limit (omega_m/kappa = 200) the stationary cavity noise
shows a single line below the strong-coupling point and two normal-mode lines
above it, split by sqrt(4 J^2 - (1 - Gamma_m)^2).
"""

from radcool import SystemParams, RunSettings, run_scenario
from radcool.analytics import mode_splitting
from radcool.spectrum import noise_spectrum, two_time_correlation

for J in (0.3, 2.0):
    p = SystemParams.from_J(J, omega_m=200.0, gamma_m=1e-3, n_th=100.0)
    res = run_scenario(p, RunSettings(t_end=400.0))
    tau, C = two_time_correlation(p, res.report.t_s, 250.0, report=res.report)
    spec = noise_spectrum(tau, C)
    peaks = ", ".join(f"{w:+.3f}" for w in spec.peak_frequencies)
    print(f"J = {J}: n_mf = {res.report.n_mf:.4f}, peaks at [{peaks}]")
    split = mode_splitting(J, p.gamma_m / p.kappa)
    if split is not None:
        print(f"  expected splitting {split:.3f}")
