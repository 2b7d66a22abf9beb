"""Bosonic occupation bases and operator matrices for atoms on a chain and a
single truncated cavity mode."""

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

DEFAULT_CAPACITY = 10**6
SPARSE_THRESHOLD = 200


class CapacityError(ValueError):
    pass


class BasisMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AtomBasis:
    """All occupation tuples of ``n_atoms`` bosons on ``n_sites`` sites,
    ordered lexicographically from (N, 0, ..., 0) down to (0, ..., 0, N)."""

    n_sites: int
    n_atoms: int
    states: np.ndarray = field(repr=False)
    index_map: dict = field(repr=False)

    @property
    def dim(self):
        return len(self.states)

    @property
    def tag(self):
        return ("atom", self.n_sites, self.n_atoms)

    def index(self, occupation):
        return self.index_map[tuple(occupation)]


@dataclass(frozen=True)
class PhotonBasis:
    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("photon cutoff n_max must be >= 1")

    @property
    def dim(self):
        return self.n_max + 1

    @property
    def tag(self):
        return ("photon", self.n_max)


@dataclass(frozen=True, eq=False)
class CoupledBasis:
    atoms: AtomBasis
    photons: PhotonBasis

    @property
    def dim(self):
        return self.atoms.dim * self.photons.dim

    @property
    def tag(self):
        return ("coupled", self.atoms.tag, self.photons.tag)


def _occupations(n_sites, n_atoms):
    if n_sites == 1:
        yield (n_atoms,)
        return
    for first in range(n_atoms, -1, -1):
        for rest in _occupations(n_sites - 1, n_atoms - first):
            yield (first,) + rest


def enumerate_basis(n_sites, n_atoms, capacity=DEFAULT_CAPACITY):
    if n_sites < 1 or n_atoms < 0:
        raise ValueError(f"need n_sites >= 1 and n_atoms >= 0, got M={n_sites}, N={n_atoms}")
    dim = comb(n_atoms + n_sites - 1, n_sites - 1)
    if dim > capacity:
        raise CapacityError(f"basis dimension {dim} exceeds capacity {capacity}")
    states = list(_occupations(n_sites, n_atoms))
    index_map = {s: i for i, s in enumerate(states)}
    return AtomBasis(n_sites, n_atoms, np.array(states, dtype=int).reshape(dim, n_sites),
                     index_map)


class OperatorMatrix:
    """Matrix on a tagged basis; stored sparse above SPARSE_THRESHOLD.

    Arithmetic between operators checks basis tags. ``hermitian=True`` is a
    promise that is verified on construction.
    """

    __array_priority__ = 100

    def __init__(self, entries, basis_tag, hermitian=False, check=True):
        if sp.issparse(entries):
            entries = entries.tocsr()
            if entries.shape[0] <= SPARSE_THRESHOLD:
                entries = entries.toarray()
        else:
            entries = np.asarray(entries)
            if entries.shape[0] > SPARSE_THRESHOLD:
                entries = sp.csr_matrix(entries)
        if entries.shape[0] != entries.shape[1]:
            raise ValueError("operator matrices must be square")
        self.entries = entries
        self.basis_tag = basis_tag
        self.hermitian = hermitian
        if hermitian and check:
            dev = self.hermiticity_error()
            if dev > 1e-12 * max(1.0, self.max_abs()):
                raise ValueError(f"operator flagged hermitian deviates by {dev:.3e}")

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def is_sparse(self):
        return sp.issparse(self.entries)

    def toarray(self):
        return self.entries.toarray() if self.is_sparse else np.array(self.entries)

    def max_abs(self):
        if self.is_sparse:
            return float(abs(self.entries).max()) if self.entries.nnz else 0.0
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0

    def hermiticity_error(self):
        diff = self.entries - self.entries.conj().T
        if sp.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    def _check(self, other):
        if self.basis_tag != other.basis_tag:
            raise BasisMismatchError(f"basis mismatch: {self.basis_tag} vs {other.basis_tag}")

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.entries + other.entries, self.basis_tag,
                                  self.hermitian and other.hermitian, check=False)
        return NotImplemented

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar):
        if isinstance(scalar, OperatorMatrix):
            return NotImplemented
        herm = self.hermitian and np.isreal(scalar)
        return OperatorMatrix(self.entries * scalar, self.basis_tag, bool(herm), check=False)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.entries @ other.entries, self.basis_tag, False,
                                  check=False)
        return self.entries @ other

    def dag(self):
        return OperatorMatrix(self.entries.conj().T, self.basis_tag, self.hermitian,
                              check=False)

    def commutator(self, other):
        return self @ other - other @ self

    def expect(self, state):
        state = np.asarray(state)
        return complex(np.vdot(state, self.entries @ state))

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"OperatorMatrix(dim={self.dim}, {kind}, tag={self.basis_tag}, hermitian={self.hermitian})"


def identity(basis):
    return OperatorMatrix(sp.identity(basis.dim, dtype=complex, format="csr"), basis.tag, True)


def hop_operator(basis, boundary="open"):
    """Jump operator sum_k (b_{k+1}^+ b_k + h.c.) on a fixed-N basis."""
    m = basis.n_sites
    if boundary not in ("open", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    if boundary == "periodic" and m < 3:
        raise ValueError("periodic boundary needs at least 3 sites")
    bonds = [(k, k + 1) for k in range(m - 1)]
    if boundary == "periodic":
        bonds.append((m - 1, 0))

    rows, cols, vals = [], [], []
    for j, state in enumerate(basis.states):
        for src, dst in bonds:
            for a, b in ((src, dst), (dst, src)):
                if state[a] == 0:
                    continue
                # move one atom from site a to site b
                new = state.copy()
                new[a] -= 1
                new[b] += 1
                rows.append(basis.index_map[tuple(new)])
                cols.append(j)
                vals.append(np.sqrt(state[a] * (state[b] + 1)))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex)
    return OperatorMatrix(mat.tocsr(), basis.tag, True)


def number_operator(basis, site):
    """Occupation of ``site`` (1-based, as in n_1 ... n_M)."""
    if not 1 <= site <= basis.n_sites:
        raise IndexError(f"site {site} out of range 1..{basis.n_sites}")
    return OperatorMatrix(sp.diags(basis.states[:, site - 1].astype(complex), format="csr"),
                          basis.tag, True)


def total_number(basis):
    return OperatorMatrix(sp.diags(basis.states.sum(axis=1).astype(complex), format="csr"),
                          basis.tag, True)


def staggered_number(basis):
    """sum_k (-1)^(k+1) n_k."""
    signs = (-1.0) ** np.arange(basis.n_sites)
    return OperatorMatrix(sp.diags((basis.states @ signs).astype(complex), format="csr"),
                          basis.tag, True)


def interaction_operator(basis):
    """sum_k n_k (n_k - 1) / 2, without the coupling constant."""
    n = basis.states
    return OperatorMatrix(sp.diags((0.5 * (n * (n - 1)).sum(axis=1)).astype(complex),
                                   format="csr"), basis.tag, True)


def photon_ops(pb):
    """Truncated annihilation and creation operators on 0..n_max."""
    a = sp.diags(np.sqrt(np.arange(1, pb.n_max + 1)).astype(complex), 1, format="csr")
    return (OperatorMatrix(a, pb.tag, False), OperatorMatrix(a.conj().T, pb.tag, False))


def photon_number(pb):
    return OperatorMatrix(sp.diags(np.arange(pb.dim, dtype=complex), format="csr"), pb.tag, True)


def tensor(atom_op, photon_op):
    """Kronecker product with the atom index slow and the photon index fast."""
    if atom_op.basis_tag[0] != "atom":
        raise BasisMismatchError(f"left operand must act on atoms, got {atom_op.basis_tag}")
    if photon_op.basis_tag[0] != "photon":
        raise BasisMismatchError(f"right operand must act on photons, got {photon_op.basis_tag}")
    mat = sp.kron(sp.csr_matrix(atom_op.entries), sp.csr_matrix(photon_op.entries), format="csr")
    tag = ("coupled", atom_op.basis_tag, photon_op.basis_tag)
    return OperatorMatrix(mat, tag, atom_op.hermitian and photon_op.hermitian, check=False)
