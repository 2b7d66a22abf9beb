"""Single atom in two wells: energy splitting versus cavity detuning.

The splitting has a sharp feature where the shifted detuning vanishes,
and that point moves with the atom-light coupling U0.
"""
import numpy as np

from cavitybh.hamiltonian import ModelParams, self_consistent_depth
from cavitybh.observables import energy_gap_two_well

detunings = np.linspace(-4.0, 2.0, 61)
for u0 in (-1.2, -0.4):
    gaps, photons = [], []
    for dc in detunings:
        p = ModelParams(u0=u0, delta_c=dc, eta=2.0, v_cl=-4.0, n_atoms=1, n_sites=2)
        me, fld, _ = self_consistent_depth(p, solve=False)
        gaps.append(energy_gap_two_well(p, me))
        photons.append(fld.photon_number)
    i, k = int(np.argmin(gaps)), int(np.argmax(photons))
    print(f"U0 = {u0}: deepest gap {gaps[i]:.4f} E_R at dc = {detunings[i]:.2f}, "
          f"max |alpha|^2 = {photons[k]:.3f} at dc = {detunings[k]:.2f}")
