"""
Effective NLS and the Townes envelope
=====================================

The reference edge gives omega1 C + G0 Laplacian C + Gamma |C|^2 C = 0 with
G0 = -I/4 and Gamma = 2.25.  With omega1 = 1 these signs admit no decaying
real solution, so the cubic coefficients are negated before solving.
"""
import numpy as np

from gapsol import build_symmetric_example, find_gap, locate_edge, sample_bands
from gapsol.errors import NoRealGroundState
from gapsol.nls import build_envelope, decay_moments, effective_coefficients, evaluate_envelope
from _plotting import plt, save

params = build_symmetric_example((0, 1), (1, 0), 2, 1, 1)
bands = sample_bands(params, 8.0, 129)
edge = locate_edge(params, find_gap(bands), "lower", bands)

nls = effective_coefficients(edge, params, omega1=1.0)
print("Gamma =", nls.Gamma)
try:
    build_envelope(nls)
except NoRealGroundState as exc:
    print("as published:", exc)

# %% Flip the nonlinearity: C(x) = a u(b|x|) with u the Townes profile
flipped = effective_coefficients(edge, params, omega1=1.0, flip_nonlinearity=True)
env = build_envelope(flipped)
print(f"a = {env.scaling.a:.6f}, b = {env.scaling.b:.6f}, u(0) = {env.profile.u0:.10f}")
print(f"C(0) = {env.scaling.a * env.profile.u0:.6f}")
print("moments s=0..4:", [f"{decay_moments(env, s):.4f}" for s in range(5)])

# %% Radial profile and its exponential tail
if plt is not None:
    r = np.linspace(0, 12, 400)
    C = evaluate_envelope(env, np.stack([r, 0 * r], axis=-1))
    fig, ax = plt.subplots()
    ax.semilogy(r, C)
    ax.set_xlabel("$|x|$")
    ax.set_ylabel("$C$")
    save(fig, "envelope.png")
