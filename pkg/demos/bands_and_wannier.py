"""Lowest Bloch band and Wannier orbital of a cos^2 lattice.

Prints band edges, the tight-binding integrals and how the on-site
overlap approaches its harmonic-well value as the lattice deepens.
"""
import numpy as np

from cavitybh.lattice import (LatticeDepthSpec, band_edges, build_wannier,
                              compute_matrix_elements, solve_bloch_band)

# %% band edges and width
for v in (-2.0, -4.0, -10.0):
    lo, hi = band_edges(LatticeDepthSpec(v))
    print(f"V = {v:6.1f} E_R   band [{lo:8.4f}, {hi:8.4f}]   width {hi - lo:.4e}")

# %% Wannier orbital and integrals at V = -4
w = build_wannier(solve_bloch_band(LatticeDepthSpec(-4.0)))
me = compute_matrix_elements(w, g1d=1.0)
print(f"\nE0={me.e0:.5f}  E1={me.e1:.5f}  J0={me.j0:.5f}  J1={me.j1:.5f}")
print(f"net hopping E1 + V J1 = {me.hopping:.5f} E_R,  u_onsite = {me.u_onsite:.5f}")
x = w.grid
print("orbital is localized: weight within one site =",
      round(float(w.spacing * np.sum(w.values[np.abs(x) < 0.5] ** 2)), 5))

# %% harmonic limit of J0
for v in (-10.0, -30.0, -50.0):
    me = compute_matrix_elements(build_wannier(solve_bloch_band(LatticeDepthSpec(v))))
    ho = 0.5 * (1 + np.exp(-1 / np.sqrt(-v)))
    print(f"V = {v:5.0f}:  J0 = {me.j0:.5f}   harmonic estimate {ho:.5f}")
