"""Driven-dissipative stabilization vs inhomogeneous broadening (N = 8).

The two-excitation drive/loss pair stabilizes cat states: with identical
spins both parities hold fidelity ~0.995+ indefinitely.  Adding a small
Gaussian detuning spread (sigma = 1e-2 gamma2) breaks the protection
asymmetrically: the even cat keeps most of its fidelity at gamma2 t = 200
while the odd cat has lost almost everything.

Runs the full 2^N master equation for a few disorder realizations per
parity.  Output: demos/output/02_stabilized_cats.png.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spincat.analytic import CatParity
from spincat.core import EnsembleParams, Gaussian, SeedSpec, sample_detunings
from spincat.lindblad import (
    build_collective_generator,
    build_full_generator,
    fidelity_to,
    integrate_master,
    prepare_state,
    prepare_state_vector,
    stabilized_cat_state,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

N, ETA, SIGMA = 8, 0.2, 1e-2
REALIZATIONS = 4  # keep the demo quick; the acceptance suite runs 10
params = EnsembleParams(n_spins=N, eta=ETA)
times = np.linspace(0.0, 200.0, 21)

fig, ax = plt.subplots(figsize=(7, 4.5))
for parity, color in ((CatParity.EVEN, "tab:blue"), (CatParity.ODD, "tab:red")):
    spec = stabilized_cat_state(params, parity)

    # no broadening: collective backend, the stabilized baseline
    gen_c = build_collective_generator(params)
    ref_c = prepare_state_vector(spec, gen_c.basis)
    snaps = integrate_master(gen_c, prepare_state(spec, gen_c.basis), times)
    baseline = [fidelity_to(s, ref_c) for s in snaps]
    ax.plot(times, baseline, color=color, ls=":", lw=1.5,
            label=f"{parity.name.lower()} cat, $\\delta = 0$")

    # Gaussian broadening: full backend, averaged over realizations
    seeds = SeedSpec(master_seed=11, realization_count=REALIZATIONS)
    fids = []
    sector = "even" if parity is CatParity.EVEN else "odd"
    for i in range(REALIZATIONS):
        det = sample_detunings(Gaussian(SIGMA), N, seeds.realization_seed(i))
        gen = build_full_generator(params, det, parity_sector=sector)
        ref = prepare_state_vector(spec, gen.basis)
        run = integrate_master(gen, prepare_state(spec, gen.basis), times)
        fids.append([fidelity_to(s, ref) for s in run])
    mean = np.mean(fids, axis=0)
    ax.plot(times, mean, color=color, lw=2,
            label=f"{parity.name.lower()} cat, $\\sigma = 10^{{-2}}$")
    print(f"{parity.name.lower():>4} cat: baseline F(200) = {baseline[-1]:.4f}, "
          f"broadened mean F(200) = {mean[-1]:.3f}")

ax.set_xlabel(r"$\Gamma_2 t$")
ax.set_ylabel("fidelity to the initial cat")
ax.set_ylim(0, 1.02)
ax.set_title(f"Stabilized cats under inhomogeneous broadening (N = {N}, "
             f"$\\eta/\\Gamma_2 = {ETA}$)")
ax.legend(fontsize=9)
fig.tight_layout()
fig.savefig(OUT / "02_stabilized_cats.png", dpi=150)
print(f"wrote {OUT / '02_stabilized_cats.png'}")
