"""
Convergence of the envelope approximation
=========================================

Measure E(eps) = sup|B - B_app| over a sweep of eps and fit the log-log
slope.  Pass --full to include eps = 0.0125 and 0.00625 (slow).
"""
import sys

import numpy as np

from gapsol import build_symmetric_example
from gapsol.convergence import DEFAULT_SWEEP, FULL_SWEEP, run_convergence_study
from _plotting import plt, save

params = build_symmetric_example((0, 1), (1, 0), 2, 1, 1)
eps_list = FULL_SWEEP if "--full" in sys.argv else DEFAULT_SWEEP
report = run_convergence_study(params, eps_list, omega1=1.0, flip_nonlinearity=True)

for r in report.records:
    print(f"eps={r.eps:<8g} E={r.E_sup:.4e}  sup|Im B|/eps^2={r.im_part_sup / r.eps**2:.4f}")
print(f"slope {report.slope:.4f}, r^2 {report.r_squared:.6f}, ratios {np.round(report.ratios(), 3)}")

# %% Log-log plot with the fitted line
if plt is not None:
    eps = np.array([r.eps for r in report.records])
    E = np.array([r.E_sup for r in report.records])
    fig, ax = plt.subplots()
    ax.loglog(eps, E, "o", label="E")
    ax.loglog(eps, np.exp(report.log_c) * eps**report.slope, "-",
              label=f"slope {report.slope:.2f}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(r"$E(\varepsilon)$")
    ax.legend()
    save(fig, "convergence.png")
