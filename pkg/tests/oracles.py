"""Independent reference computations used by the tests.

Nothing here imports the package's band or Hamiltonian code: the Mathieu
characteristic values come from continued fractions, the harmonic limit is
closed form, and the brute-force Hamiltonians loop over occupation tuples
directly.
"""

import itertools
import math

import numpy as np
import scipy.special
from scipy.optimize import brentq

# -- Mathieu characteristic values ---------------------------------------------
#
# In lattice units the band problem  -(1/pi^2) w'' + V cos^2(pi x) w = E w
# becomes Mathieu's equation y'' + (a - 2 q cos 2z) y = 0 with z = pi x,
# a = E - V/2 and q = -V/4. The zone center is the pi-periodic even solution
# (a_0) and the zone edge the lower of the 2pi-periodic ones (a_1, b_1).

_DEPTH = 80


def _tail(a, q, first, order):
    """Backward evaluation of q / (a - order(r)^2 - q * next) from r = first."""
    g = 0.0
    for r in range(first + _DEPTH, first - 1, -1):
        g = q / (a - order(r) ** 2 - q * g)
    return g


def _f_a0(a, q):
    g2 = _tail(a, q, 2, lambda r: 2 * r)
    g1 = 2 * q / (a - 4.0 - q * g2)
    return a - q * g1


def _f_odd(a, q, sign):
    # sign = +1 for a_1 (cosine series), -1 for b_1 (sine series)
    g1 = _tail(a, q, 1, lambda r: 2 * r + 1)
    return a - 1.0 - sign * q - q * g1


def _root(func, seed, width):
    lo, hi = seed - width, seed + width
    for _ in range(60):
        try:
            if np.sign(func(lo)) != np.sign(func(hi)):
                root = brentq(func, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
                if abs(func(root)) < 1e-9:  # a sign change across a pole is no root
                    return root
        except ZeroDivisionError:
            pass
        width *= 0.5
        lo, hi = seed - width, seed + width
    raise RuntimeError("no bracket for Mathieu characteristic value")


def mathieu_a0(q):
    return _root(lambda a: _f_a0(a, q), scipy.special.mathieu_a(0, abs(q)), 0.5)


def mathieu_a1(q):
    return _root(lambda a: _f_odd(a, q, 1), scipy.special.mathieu_a(1, q) if q >= 0
                 else scipy.special.mathieu_b(1, -q), 0.5)


def mathieu_b1(q):
    return _root(lambda a: _f_odd(a, q, -1), scipy.special.mathieu_b(1, q) if q >= 0
                 else scipy.special.mathieu_a(1, -q), 0.5)


def band_edges_mathieu(v_depth):
    """(bottom, top) of the lowest band in E_R."""
    q = -v_depth / 4.0
    shift = v_depth / 2.0
    return mathieu_a0(q) + shift, min(mathieu_a1(q), mathieu_b1(q)) + shift


# -- harmonic limit ------------------------------------------------------------

def harmonic_variance(v_depth):
    """<x^2> of the oscillator ground state fitting a well of depth |v|."""
    return 1.0 / (2 * np.pi**2 * math.sqrt(-v_depth))


def harmonic_orbital(x, v_depth):
    var = harmonic_variance(v_depth)
    return (2 * np.pi * var) ** -0.25 * np.exp(-x**2 / (4 * var))


def harmonic_j0(v_depth):
    """int w^2 cos^2(pi x) for the Gaussian orbital."""
    return 0.5 * (1.0 + math.exp(-2 * np.pi**2 * harmonic_variance(v_depth)))


# -- brute-force Fock-space Hamiltonians ----------------------------------------

def occupations(n_sites, n_atoms):
    """All occupation tuples, in no particular order."""
    return [s for s in itertools.product(range(n_atoms + 1), repeat=n_sites)
            if sum(s) == n_atoms]


def brute_hamiltonian(n_sites, n_atoms, hop, onsite, bonds=None):
    """Dense  hop * sum_bonds (b_i^+ b_j + h.c.) + onsite * sum n(n-1)/2
    together with its list of states."""
    states = occupations(n_sites, n_atoms)
    index = {s: i for i, s in enumerate(states)}
    bonds = bonds if bonds is not None else [(k, k + 1) for k in range(n_sites - 1)]
    H = np.zeros((len(states), len(states)))
    for j, s in enumerate(states):
        H[j, j] += onsite * sum(n * (n - 1) / 2 for n in s)
        for a, b in bonds:
            for src, dst in ((a, b), (b, a)):
                if s[src] == 0:
                    continue
                t = list(s)
                amp = math.sqrt(t[src] * (t[dst] + 1))
                t[src] -= 1
                t[dst] += 1
                H[index[tuple(t)], j] += hop * amp
    return H, states


def brute_site_probabilities(H, states, site):
    """Occupation distribution of ``site`` (1-based) in the ground state of H."""
    vals, vecs = np.linalg.eigh(H)
    prob = np.abs(vecs[:, 0]) ** 2
    n_atoms = sum(states[0])
    out = np.zeros(n_atoms + 1)
    for p, s in zip(prob, states):
        out[s[site - 1]] += p
    return out


def displaced_photon_number(eta, delta_c, kappa=1.0):
    """|eta / (kappa - i delta)|^2 for a driven damped mode."""
    return eta**2 / (kappa**2 + delta_c**2)
