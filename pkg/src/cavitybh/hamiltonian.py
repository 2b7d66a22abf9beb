"""Generalized Bose-Hubbard Hamiltonian with a dynamical cavity mode, the
adiabatically eliminated cavity field and the effective atom-only model.

Cavity quantities (u0, delta_c, kappa, eta, eta_eff) are in units of the
cavity decay rate kappa; lattice energies are in recoils. ``kappa_in_recoils``
(hbar kappa / E_R) converts the former into the latter wherever they meet in
one Hamiltonian.
"""

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import fock
from .eigen import GroundStateResult, ground_state, ground_state_nonhermitian
from .lattice import matrix_elements_at_depth

MODES = ("exact-elim", "effective", "coupled", "coupled-nh")


class ConstructionError(ValueError):
    pass


class SelfConsistencyError(RuntimeError):
    def __init__(self, message, last_depths=None):
        super().__init__(message)
        self.last_depths = last_depths


@dataclass(frozen=True)
class LatticeNumerics:
    n_planewaves: int = 21
    n_q: int = 32
    n_grid: int = 64


@dataclass(frozen=True)
class ModelParams:
    u0: float = -1.0
    delta_c: float = -3.0
    eta: float = 2.0
    eta_eff: float = 0.0
    v_cl: float = 0.0
    a_s: float = 0.0
    n_atoms: int = 2
    n_sites: int = 2
    kappa_in_recoils: float = 1.0
    boundary: str = "open"
    n_max: int = None  # None: adaptive photon cutoff
    kappa: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.kappa_in_recoils <= 0:
            raise ValueError("kappa_in_recoils must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.n_atoms < 1:
            raise ValueError("need at least one atom")
        if self.n_sites < 2:
            raise ValueError("need at least two sites")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    def replace(self, **changes):
        return replace(self, **changes)


@functools.lru_cache(maxsize=4096)
def _unit_elements(v_depth, numerics):
    return matrix_elements_at_depth(v_depth, 1.0, numerics.n_planewaves, numerics.n_q,
                                    numerics.n_grid)


def lattice_elements(v_depth, a_s=0.0, numerics=LatticeNumerics()):
    """Matrix elements at ``v_depth`` with ``u_onsite = a_s * int w^4``.

    ``a_s`` is the interaction scale in E_R (times one lattice period), i.e. it
    is used directly as the 1D contact coupling g1d.
    """
    me = _unit_elements(float(v_depth), numerics)
    return replace(me, u_onsite=a_s * me.u_onsite)


# -- scalar steady state -----------------------------------------------------

@dataclass
class EffectiveField:
    alpha0: complex
    delta_c_prime: float
    a_exact: fock.OperatorMatrix = None
    a_expanded: fock.OperatorMatrix = None

    @property
    def photon_number(self):
        return abs(self.alpha0) ** 2


def shifted_detuning(p, j0):
    return p.delta_c - p.u0 * j0 * p.n_atoms


def steady_field(p, j0=1.0):
    """alpha0 = eta / (kappa - i delta_c'), delta_c' = delta_c - u0 j0 N."""
    dprime = shifted_detuning(p, j0)
    return EffectiveField(p.eta / (p.kappa - 1j * dprime), dprime)


def eta_for_photon_number(p, photon_number, j0):
    """Pump strength giving ``|alpha0|^2 = photon_number`` in the scalar formula."""
    dprime = shifted_detuning(p, j0)
    return math.sqrt(photon_number * (p.kappa**2 + dprime**2))


# -- operators ---------------------------------------------------------------

def _atom_ops(basis, boundary):
    return (fock.total_number(basis), fock.hop_operator(basis, boundary),
            fock.staggered_number(basis), fock.interaction_operator(basis))


def build_full_hamiltonian(p, me, basis):
    """Hermitian atom-field Hamiltonian on ``atoms (x) photons``, in E_R."""
    if not isinstance(basis, fock.CoupledBasis):
        raise ConstructionError("the full Hamiltonian needs a CoupledBasis")
    if (basis.atoms.n_sites, basis.atoms.n_atoms) != (p.n_sites, p.n_atoms):
        raise ConstructionError("basis does not match n_sites / n_atoms of the parameters")
    kr = p.kappa_in_recoils
    N, B, S, W = _atom_ops(basis.atoms, p.boundary)
    a, ad = fock.photon_ops(basis.photons)
    n_ph = fock.photon_number(basis.photons)
    Ia, Ip = fock.identity(basis.atoms), fock.identity(basis.photons)
    lattice = me.j0 * N + me.j1 * B

    H = (fock.tensor(me.e0 * N + me.e1 * B + me.u_onsite * W, Ip)
         + fock.tensor(lattice, kr * p.u0 * n_ph + p.v_cl * Ip)
         + fock.tensor(kr * p.eta_eff * me.jt0 * S, a + ad)
         - fock.tensor(Ia, kr * p.delta_c * n_ph)
         + fock.tensor(Ia, (-1j * kr * p.eta) * (a - ad)))
    dev = H.hermiticity_error()
    if dev > 1e-10:
        raise ConstructionError(f"full Hamiltonian not Hermitian (deviation {dev:.2e})")
    return fock.OperatorMatrix(H.entries, H.basis_tag, True, check=False)


def dissipative_hamiltonian(p, me, basis):
    """H - i hbar kappa a^+ a; its eigenvalue of smallest real part stands in
    for the damped steady state."""
    H = build_full_hamiltonian(p, me, basis)
    n_ph = fock.tensor(fock.identity(basis.atoms), fock.photon_number(basis.photons))
    out = H + (-1j * p.kappa * p.kappa_in_recoils) * n_ph
    return fock.OperatorMatrix(out.entries, out.basis_tag, False)


def _require_no_transverse_pump(p):
    if p.eta_eff != 0:
        raise ConstructionError("field elimination assumes eta_eff = 0")


def _spectral_map(B, func):
    lam, vecs = scipy.linalg.eigh(B.toarray())
    return (vecs * func(lam)) @ vecs.conj().T


def field_operator_exact(p, me, B):
    """a = eta / (kappa - i (delta_c - u0 (j0 N + j1 B))), by spectral calculus
    on the Hermitian jump operator B. Not Hermitian."""
    _require_no_transverse_pump(p)
    N = p.n_atoms
    mat = _spectral_map(
        B, lambda lam: p.eta / (p.kappa - 1j * (p.delta_c - p.u0 * (me.j0 * N + me.j1 * lam))))
    return fock.OperatorMatrix(mat, B.basis_tag, False)


def field_operator_expansion(p, me, B):
    """Second-order expansion of the eliminated field in the hopping overlap j1."""
    _require_no_transverse_pump(p)
    c = p.kappa - 1j * shifted_detuning(p, me.j0)
    x = p.u0 * me.j1 / c
    Bm = B.toarray()
    mat = (p.eta / c) * (np.eye(B.dim) - 1j * x * Bm - x**2 * (Bm @ Bm))
    return fock.OperatorMatrix(mat, B.basis_tag, False)


def photon_number_operator(a):
    n = a.dag() @ a
    return fock.OperatorMatrix(0.5 * (n.entries + n.entries.conj().T), n.basis_tag, True)


def effective_coefficients(p, me):
    """Coefficients of B and B^2 in the effective atom-only Hamiltonian, in E_R."""
    kr = p.kappa_in_recoils
    k2 = p.kappa**2
    d = shifted_detuning(p, me.j0)
    cavity = kr * p.u0 * p.eta**2 * (k2 - d**2) / (k2 + d**2) ** 2
    hop = me.e1 + me.j1 * (p.v_cl - cavity)
    pair = -3.0 * kr * p.u0**2 * p.eta**2 * d * (3 * k2 - d**2) / (k2 + d**2) ** 3 * me.j1**2
    return hop, pair


def build_effective_hamiltonian(p, me, basis):
    """Atom-only Hamiltonian: rescaled hopping on B, cavity-mediated B^2 term
    and on-site interaction."""
    _require_no_transverse_pump(p)
    _, B, _, W = _atom_ops(basis, p.boundary)
    hop, pair = effective_coefficients(p, me)
    H = hop * B + pair * (B @ B) + me.u_onsite * W
    return fock.OperatorMatrix(H.entries, basis.tag, True)


def build_exact_elimination_hamiltonian(p, me, basis):
    """Atom-only Hamiltonian with the cavity photon number replaced by the
    exactly inverted a^+ a (a function of B)."""
    N, B, _, W = _atom_ops(basis, p.boundary)
    n_op = photon_number_operator(field_operator_exact(p, me, B))
    lattice = me.j0 * N + me.j1 * B
    depth = p.kappa_in_recoils * p.u0 * n_op + p.v_cl * fock.identity(basis)
    coupling = depth @ lattice
    H = me.e0 * N + me.e1 * B + me.u_onsite * W
    H = H + fock.OperatorMatrix(0.5 * (coupling.entries + coupling.entries.conj().T),
                                basis.tag, True, check=False)
    return fock.OperatorMatrix(H.entries, basis.tag, True)


# -- ground states -----------------------------------------------------------

def initial_photon_cutoff(photon_mean):
    return int(math.ceil(4 * photon_mean + 10))


def coupled_ground_state(p, me, photon_guess, nonhermitian=False, rtol=1e-6, max_cutoff=4096):
    """Ground state on the coupled space with the photon cutoff doubled until
    <a^+ a> is stable to ``rtol`` (unless ``p.n_max`` is fixed)."""
    atoms = fock.enumerate_basis(p.n_sites, p.n_atoms)

    def solve(n_max):
        basis = fock.CoupledBasis(atoms, fock.PhotonBasis(n_max))
        if nonhermitian:
            gs = ground_state_nonhermitian(dissipative_hamiltonian(p, me, basis))
        else:
            gs = ground_state(build_full_hamiltonian(p, me, basis))
        n_op = fock.tensor(fock.identity(atoms), fock.photon_number(basis.photons))
        gs.photon_mean = n_op.expect(gs.state).real
        return basis, gs

    if p.n_max is not None:
        return solve(p.n_max)
    n_max = initial_photon_cutoff(photon_guess)
    basis, gs = solve(n_max)
    while True:
        n_max *= 2
        if n_max > max_cutoff:
            gs.converged = False
            return basis, gs
        new_basis, new = solve(n_max)
        change = abs(new.photon_mean - gs.photon_mean) / max(abs(new.photon_mean), 1e-300)
        basis, gs = new_basis, new
        if change < rtol:
            return basis, gs


def solve_mode(p, me, mode="exact-elim"):
    """Ground state of the requested Hamiltonian at fixed matrix elements.

    Returns ``(basis, result)``; ``result.photon_mean`` is <a^+ a> for the
    field that belongs to the mode.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if mode in ("coupled", "coupled-nh"):
        fld = steady_field(p, me.j0)
        # without damping the photon number is set by the detuning alone
        guess = p.eta**2 / max(fld.delta_c_prime**2, 1e-2)
        if mode == "coupled-nh":
            guess = fld.photon_number
        basis, gs = coupled_ground_state(p, me, guess, nonhermitian=(mode == "coupled-nh"))
    else:
        basis = fock.enumerate_basis(p.n_sites, p.n_atoms)
        B = fock.hop_operator(basis, p.boundary)
        if mode == "effective":
            H = build_effective_hamiltonian(p, me, basis)
            a = field_operator_expansion(p, me, B)
        else:
            H = build_exact_elimination_hamiltonian(p, me, basis)
            a = field_operator_exact(p, me, B)
        gs = ground_state(H)
        gs.photon_mean = photon_number_operator(a).expect(gs.state).real
    gs.v_eff = p.v_cl + p.kappa_in_recoils * p.u0 * gs.photon_mean
    return basis, gs


def self_consistent_depth(p, mode="exact-elim", numerics=LatticeNumerics(), tol=1e-8,
                          max_iter=200, solve=True):
    """Fixed point of depth -> matrix elements -> shifted detuning -> field.

    Starts from j0 = 1 in the scalar field, iterates until the effective depth
    changes by less than ``tol`` E_R (with 0.5 damping once the iteration
    stops contracting), then solves the requested Hamiltonian.
    Returns ``(matrix_elements, field, ground_state_or_None)``.
    """
    kr = p.kappa_in_recoils
    fld = steady_field(p, 1.0)
    depth = p.v_cl + kr * p.u0 * fld.photon_number
    history = [depth]
    damping = 1.0
    for _ in range(max_iter):
        me = lattice_elements(depth, p.a_s, numerics)
        fld = steady_field(p, me.j0)
        target = p.v_cl + kr * p.u0 * fld.photon_number
        new = depth + damping * (target - depth)
        history.append(new)
        if abs(new - depth) < tol:
            depth = new
            break
        if len(history) >= 3 and abs(history[-1] - history[-2]) > abs(history[-2] - history[-3]):
            damping = 0.5
        depth = new
    else:
        raise SelfConsistencyError(
            f"effective depth did not converge in {max_iter} iterations "
            f"(last values {history[-2]:.10f}, {history[-1]:.10f})", history[-2:])
    me = lattice_elements(depth, p.a_s, numerics)
    fld = steady_field(p, me.j0)
    fld.depth_history = history
    gs = None
    if solve:
        _, gs = solve_mode(p, me, mode)
    return me, fld, gs


def eta_for_depth(p, v_target, mode="exact-elim", numerics=LatticeNumerics(), tol=1e-10,
                  max_iter=50, eta_guess=None):
    """Pump strength for which the ground state of ``mode`` has effective depth
    ``v_target`` (lattice matrix elements evaluated at ``v_target``).

    Elimination modes use the scalar steady-state formula; coupled modes match
    the photon number of the coupled ground state to relative ``tol``.
    """
    photons = (v_target - p.v_cl) / (p.kappa_in_recoils * p.u0)
    if photons < 0:
        raise ValueError("target depth not reachable with this sign of u0")
    me = lattice_elements(v_target, p.a_s, numerics)
    eta0 = eta_for_photon_number(p, photons, me.j0)
    if mode in ("exact-elim", "effective"):
        return eta0
    # coupled modes: <a^+ a> grows roughly like eta^2; secant iteration on the
    # logarithms, with the photon cutoff frozen after the first solve
    if eta_guess is None:
        dprime = shifted_detuning(p, me.j0)
        eta_guess = max(eta0 * abs(dprime) / math.hypot(p.kappa, dprime), 1e-6)
    basis, gs = solve_mode(p.replace(eta=eta_guess), me, mode)
    fixed = p.replace(n_max=p.n_max or basis.photons.n_max)
    x_old, f_old = math.log(eta_guess), math.log(gs.photon_mean / photons)
    x = x_old - 0.5 * f_old
    for _ in range(max_iter):
        _, gs = solve_mode(fixed.replace(eta=math.exp(x)), me, mode)
        f = math.log(gs.photon_mean / photons)
        if abs(f) <= tol:
            return math.exp(x)
        slope = (f - f_old) / (x - x_old) if x != x_old else 2.0
        x_old, f_old = x, f
        x = x - f / slope
    raise SelfConsistencyError(f"pump strength for depth {v_target} not found "
                               f"(photon number {gs.photon_mean}, target {photons})")
