"""
Band structure of the four-mode reference system
================================================

Build the symmetric two-dimensional system with v=(0,1), w=(1,0) and
couplings (2, 1, 1), sample its dispersion relation and find the gap.
"""
import numpy as np

from gapsol import build_symmetric_example, find_gap, locate_edge, sample_bands
from _plotting import plt, save

params = build_symmetric_example((0, 1), (1, 0), 2, 1, 1)
print(params.kappa.real)

# %% Sample the four bands on a box in wavevector space
bands = sample_bands(params, box=8.0, n_per_axis=129)
gap = find_gap(bands)
print(f"gap ({gap.alpha:.3e}, {gap.beta:.6f}) above band {gap.lower_band}")

# %% The lower edge sits at k=0 on band 2; its Hessian sets the envelope dispersion
edge = locate_edge(params, gap, "lower", bands)
print("k0 =", edge.k0, " omega0 =", edge.omega0)
print("eta =", np.round(edge.eta.real, 12))
print("G0 =\n", edge.G0)

# %% A cut along k2 = 0
if plt is not None:
    mid = bands.n_per_axis // 2
    k = bands.k_grid.reshape(bands.n_per_axis, bands.n_per_axis, 2)[:, mid, 0]
    lam = bands.bands.reshape(bands.n_per_axis, bands.n_per_axis, 4)[:, mid]
    fig, ax = plt.subplots()
    ax.plot(k, lam, "k")
    ax.axhspan(gap.alpha, gap.beta, color="tab:blue", alpha=0.2, label="gap")
    ax.set_xlabel("$k_1$ ($k_2=0$)")
    ax.set_ylabel(r"$\lambda_j(k)$")
    ax.legend()
    save(fig, "bands.png")
