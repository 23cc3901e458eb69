"""
A gap soliton at eps = 0.05
===========================

Start the Petviashvili iteration from the envelope ansatz
B_app = eps C(eps x) eta on [-60, 60]^2 with 160 points per axis.
"""
from gapsol import build_symmetric_example
from gapsol.convergence import SolveSettings, prepare, solve_at
from _plotting import plt, save

params = build_symmetric_example((0, 1), (1, 0), 2, 1, 1)
pipe = prepare(params, omega1=1.0, flip_nonlinearity=True)
eps = 0.05
res = solve_at(pipe, eps, SolveSettings(n=160))
d = res.diagnostics
print(f"omega = {pipe.omega(eps)}, iterations = {d.iterations}, S = {d.S:.12f}")
print(f"sup|B - B_app| = {res.record.E_sup:.3e}, sup|Im B| = {res.record.im_part_sup:.3e}")

# %% Component 1 along x1 = 0; it travels along x2, so Im B_1 is odd in x2
if plt is not None:
    grid = res.solution.grid
    x = grid.axes()[1]
    mid = grid.n[0] // 2
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(x, res.solution.values[0, mid, :].real, label="Re $B_1$")
    axes[0].plot(x, res.ansatz.values[0, mid, :].real, "--", label="$B_{app,1}$")
    axes[0].legend()
    axes[1].plot(x, res.solution.values[0, mid, :].imag, label="Im $B_1$")
    axes[1].legend()
    for ax in axes:
        ax.set_xlabel("$x_2$")
    save(fig, "soliton.png")

    fig, ax = plt.subplots()
    ax.semilogy(d.residual_sup)
    ax.set_xlabel("iteration")
    ax.set_ylabel("sup residual")
    save(fig, "petviashvili_history.png")
