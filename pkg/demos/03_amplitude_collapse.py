"""Steady amplitude of the collective mode and its collapse (N = 100).

In the collective (Holstein-Primakoff) sector the drive pumps the bosonic
amplitude toward sqrt(2 eta/gamma2).  The (N+1)-dimensional phase space is
bounded, so the amplitude cannot grow forever: past eta/gamma2 ~ 10 a
second lobe at opposite phase develops and |<a>| collapses.

Top: steady |<a>| against eta/gamma2 with the square-root law for
reference.  Bottom: steady-state Wigner functions on the two sides of the
collapse.  Output: demos/output/03_amplitude_collapse.png.
"""

import math
import pathlib
import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spincat.lindblad import steady_amplitude_sweep, steady_state_amplitude, wigner

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

N = 100
ETAS = [0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 9.0, 10.0, 11.0, 12.0]

points = steady_amplitude_sweep(N, ETAS, t_max=300.0, workers=2)
for p in points:
    flag = "" if p.converged else "  (drift still above threshold at t_max)"
    print(f"eta = {p.eta:5.1f}: |<a>| = {p.amplitude:6.3f}{flag}")

fig = plt.figure(figsize=(8, 7))
ax = fig.add_subplot(2, 1, 1)
ax.plot([p.eta for p in points], [p.amplitude for p in points], "o-",
        label=r"quantum steady state, $N = 100$")
dense = np.linspace(0, 12.5, 100)
ax.plot(dense, np.sqrt(2 * dense), "k--", lw=1,
        label=r"$\sqrt{2\eta/\Gamma_2}$")
ax.set_xlabel(r"$\eta/\Gamma_2$")
ax.set_ylabel(r"$|\langle a\rangle|$")
ax.legend()
ax.set_title("Amplitude collapse of the driven collective mode")

for k, eta in enumerate((5.0, 12.0)):
    pt = steady_state_amplitude(N, eta, t_max=300.0, keep_state=True)
    half = math.sqrt(2 * eta) + 2.0
    axgrid = np.linspace(-half, half, 81)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        wg = wigner(pt.rho, axgrid, axgrid)
    axw = fig.add_subplot(2, 2, 3 + k)
    lim = np.abs(wg.values).max()
    axw.pcolormesh(wg.re_axis, wg.im_axis, wg.values, cmap="RdBu_r",
                   vmin=-lim, vmax=lim, shading="auto")
    axw.set_aspect("equal")
    axw.set_title(rf"$W(\beta)$ at $\eta/\Gamma_2 = {eta:g}$")
    axw.set_xlabel(r"Re $\beta$")
    if k == 0:
        axw.set_ylabel(r"Im $\beta$")

fig.tight_layout()
fig.savefig(OUT / "03_amplitude_collapse.png", dpi=150)
print(f"wrote {OUT / '03_amplitude_collapse.png'}")
