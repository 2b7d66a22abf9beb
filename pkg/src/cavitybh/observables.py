"""Occupation statistics, density correlations and field-derived quantities
computed from atom-only or atom-field state vectors."""

from dataclasses import dataclass

import numpy as np

from . import fock
from .hamiltonian import photon_number_operator, shifted_detuning

DEFAULT_SITE = 2  # an interior well of the 4-site chain


@dataclass
class SiteStatistics:
    site: int
    p_occupation: np.ndarray
    mean_n: float
    variance_n: float


@dataclass
class CorrelationReport:
    pairs: dict
    difference_13_12: float


def _atom_basis(basis):
    return basis.atoms if isinstance(basis, fock.CoupledBasis) else basis


def atom_probabilities(state, basis):
    """Probability of every atomic occupation state, photons traced out."""
    prob = np.abs(np.asarray(state)) ** 2
    if isinstance(basis, fock.CoupledBasis):
        prob = prob.reshape(basis.atoms.dim, basis.photons.dim).sum(axis=1)
    if len(prob) != _atom_basis(basis).dim:
        raise ValueError("state length does not match the basis")
    return prob


def _site_stats_from_probs(prob, atoms, site):
    if not 1 <= site <= atoms.n_sites:
        raise IndexError(f"site {site} out of range 1..{atoms.n_sites}")
    occ = atoms.states[:, site - 1]
    p = np.bincount(occ, weights=prob, minlength=atoms.n_atoms + 1)
    i = np.arange(len(p))
    mean = p @ i
    return SiteStatistics(site, p, float(mean), float(p @ i**2 - mean**2))


def site_statistics(state, basis, site=DEFAULT_SITE):
    """Probabilities p_i of finding i atoms at ``site`` (1-based)."""
    return _site_stats_from_probs(atom_probabilities(state, basis), _atom_basis(basis), site)


def density_correlations(state, basis):
    """All <n_i n_j> (1-based keys) and <n_1 n_3> - <n_1 n_2>."""
    atoms = _atom_basis(basis)
    prob = atom_probabilities(state, basis)
    occ = atoms.states.astype(float)
    second = np.einsum("s,si,sj->ij", prob, occ, occ)
    m = atoms.n_sites
    pairs = {(i + 1, j + 1): float(second[i, j]) for i in range(m) for j in range(m)}
    diff = pairs[(1, 3)] - pairs[(1, 2)] if m >= 3 else float("nan")
    return CorrelationReport(pairs, diff)


def energy_gap_two_well(p, me):
    """E_sym - E_antisym for one atom in two wells,
    2 [E + J (V_cl - hbar U0 eta^2 (k^2 - d^2) / (k^2 + d^2)^2)], in E_R.

    The cavity-mediated pair term shifts both levels equally and drops out.
    """
    k2 = p.kappa**2
    d = shifted_detuning(p, me.j0)
    cavity = p.kappa_in_recoils * p.u0 * p.eta**2 * (k2 - d**2) / (k2 + d**2) ** 2
    return 2.0 * (me.e1 + me.j1 * (p.v_cl - cavity))


def atom_expectation(state, basis, op):
    """<op> for an operator on the atoms; photons are traced out on a coupled basis."""
    state = np.asarray(state)
    if isinstance(basis, fock.CoupledBasis):
        amps = state.reshape(basis.atoms.dim, basis.photons.dim)
        return complex(np.sum(amps.conj() * (op.entries @ amps)))
    return op.expect(state)


def effective_depth(state, basis, p, field=None):
    """V_cl + hbar U0 <a^+ a> in E_R.

    On a coupled basis the photon number is read off directly; on an atom
    basis the eliminated field operator ``field`` must be supplied.
    """
    if isinstance(basis, fock.CoupledBasis):
        n_op = fock.tensor(fock.identity(basis.atoms), fock.photon_number(basis.photons))
        photons = n_op.expect(state).real
    elif field is not None:
        photons = atom_expectation(state, basis, photon_number_operator(field)).real
    else:
        raise ValueError("an atom-only state needs the eliminated field operator")
    return p.v_cl + p.kappa_in_recoils * p.u0 * photons


def photon_distribution(state, basis):
    amps = np.asarray(state).reshape(basis.atoms.dim, basis.photons.dim)
    return np.sum(np.abs(amps) ** 2, axis=0)


def photon_conditioned_statistics(state, basis, site=DEFAULT_SITE, cutoff=1e-12):
    """Map photon number n -> (P(n), site statistics of the atomic state
    conditioned on n photons). Photon numbers with P(n) < ``cutoff`` are left out."""
    if not isinstance(basis, fock.CoupledBasis):
        raise TypeError("photon-conditioned statistics need a coupled basis")
    amps = np.asarray(state).reshape(basis.atoms.dim, basis.photons.dim)
    out = {}
    for n in range(basis.photons.dim):
        weights = np.abs(amps[:, n]) ** 2
        pn = weights.sum()
        if pn < cutoff:
            continue
        out[n] = (float(pn), _site_stats_from_probs(weights / pn, basis.atoms, site))
    return out
