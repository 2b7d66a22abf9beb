"""Lowest-band Bloch states, Wannier functions and tight-binding integrals
for the 1D lattice potential ``v_depth * cos^2(k x)``.

Units: length in lattice periods (lambda/2), energy in recoils E_R, hbar = 1.
In these units the kinetic operator is ``-(1/pi^2) d^2/dx^2`` and quasimomenta
are stored in units of the mode wavenumber k, so the first Brillouin zone is
(-1, 1).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class BandStructureError(RuntimeError):
    """Raised when the plane-wave band problem cannot be solved reliably."""

    def __init__(self, message, quasimomentum=None):
        super().__init__(message)
        self.quasimomentum = quasimomentum


class ShallowLatticeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatticeDepthSpec:
    v_depth: float
    n_planewaves: int = 21
    n_q: int = 32
    n_grid: int = 64
    lattice_period: float = 1.0

    def __post_init__(self):
        if self.n_planewaves < 11 or self.n_planewaves % 2 == 0:
            raise ValueError(f"n_planewaves must be odd and >= 11, got {self.n_planewaves}")
        if self.n_q < 16 or self.n_q % 2:
            raise ValueError(f"n_q must be even and >= 16, got {self.n_q}")
        if self.n_grid < 64:
            raise ValueError(f"n_grid must be >= 64, got {self.n_grid}")
        if self.n_grid <= self.n_planewaves:
            # the FFT synthesis needs more grid points per period than plane waves
            raise ValueError("n_grid must exceed n_planewaves")
        if self.lattice_period != 1.0:
            raise ValueError("lattice_period is the length unit and must be 1")


@dataclass(frozen=True, eq=False)
class BlochSpectrum:
    """Lowest band on a symmetric quasimomentum grid.

    ``coefficients[:, j]`` holds the plane-wave amplitudes c_n of the Bloch
    state at ``quasimomenta[j]``: phi(x) = sum_n c_n exp(i pi (q + 2n) x).
    Phases are fixed so that phi is real and positive at the well center.
    """

    spec: LatticeDepthSpec
    quasimomenta: np.ndarray
    band_energy: np.ndarray
    coefficients: np.ndarray
    harmonics: np.ndarray
    well_center: float


def _bloch_matrix(q, v_depth, harmonics):
    diag = (q + 2.0 * harmonics) ** 2 + 0.5 * v_depth
    off = np.full(len(harmonics) - 1, 0.25 * v_depth)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def quasimomentum_grid(n_q):
    # midpoint grid: symmetric under q -> -q, avoids both q = 0 and the zone edge
    return -1.0 + (2.0 * np.arange(n_q) + 1.0) / n_q


def band_edges(spec):
    """Lowest-band energies at the zone center and the zone edge, (bottom, top)."""
    n_max = spec.n_planewaves // 2
    harmonics = np.arange(-n_max, n_max + 1)
    bottom = scipy.linalg.eigvalsh(_bloch_matrix(0.0, spec.v_depth, harmonics),
                                   subset_by_index=[0, 0])[0]
    top = scipy.linalg.eigvalsh(_bloch_matrix(1.0, spec.v_depth, harmonics),
                                subset_by_index=[0, 0])[0]
    return float(bottom), float(top)


def solve_bloch_band(spec):
    """Diagonalize the plane-wave Hamiltonian at every quasimomentum and keep
    the lowest band."""
    n_max = spec.n_planewaves // 2
    harmonics = np.arange(-n_max, n_max + 1)
    qs = quasimomentum_grid(spec.n_q)
    # v <= 0: minima of cos^2 potential at integer x; v > 0: at half-integers
    center = 0.0 if spec.v_depth <= 0 else 0.5

    energies = np.empty(spec.n_q)
    coeffs = np.empty((spec.n_planewaves, spec.n_q), dtype=complex)
    for j, q in enumerate(qs):
        h = _bloch_matrix(q, spec.v_depth, harmonics)
        assert np.array_equal(h, h.T)
        try:
            vals, vecs = scipy.linalg.eigh(h, subset_by_index=[0, 1])
        except np.linalg.LinAlgError as err:
            raise BandStructureError(f"diagonalization failed at q={q}: {err}", q) from err
        if vals[1] - vals[0] < 1e-12 * max(1.0, abs(vals[0])):
            raise BandStructureError(f"lowest band degenerate at q={q}", q)
        c = vecs[:, 0].astype(complex)
        if max(abs(c[0]), abs(c[-1])) > 1e-8:
            raise BandStructureError(
                f"plane-wave cutoff {spec.n_planewaves} not converged at q={q} "
                f"(edge amplitude {max(abs(c[0]), abs(c[-1])):.2e})", q)
        value_at_center = np.sum(c * np.exp(1j * np.pi * (q + 2 * harmonics) * center))
        if abs(value_at_center) < 1e-10:
            raise BandStructureError(f"Bloch state vanishes at the well center, q={q}", q)
        c *= np.conj(value_at_center) / abs(value_at_center)
        energies[j] = vals[0]
        coeffs[:, j] = c / np.linalg.norm(c)
    return BlochSpectrum(spec, qs, energies, coeffs, harmonics, center)


@dataclass(frozen=True, eq=False)
class WannierFunction:
    """Real Wannier orbital sampled on a grid covering the whole supercell of
    ``n_q`` periods, centered on its site.

    The orbital is stored spectrally as well (``wavenumbers``, ``amplitudes``)
    so that derivatives and translated copies can be synthesized exactly on
    the same grid.
    """

    grid: np.ndarray
    values: np.ndarray
    center_site: int
    center: float
    wavenumbers: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)
    v_depth: float = 0.0

    @property
    def spacing(self):
        return self.grid[1] - self.grid[0]

    def evaluate(self, x=None, derivative=0, shift=0):
        """Orbital (or its derivative) translated by ``shift`` periods."""
        amps = self.amplitudes * np.exp(-1j * self.wavenumbers * shift)
        amps = amps * (1j * self.wavenumbers) ** derivative
        if x is None:
            n_grid = int(round(1.0 / self.spacing))
            n_q = len(self.grid) // n_grid
            return _fft_synthesize(amps, self.wavenumbers, self.grid, n_q, n_grid).real
        return _synthesize(amps, self.wavenumbers, np.asarray(x, dtype=float))


def _synthesize(amps, wavenumbers, x):
    # direct sum; used off the FFT grid and for moderate sizes
    out = np.zeros(x.shape, dtype=complex)
    for chunk in np.array_split(np.arange(len(amps)), max(1, len(amps) // 64)):
        out += np.exp(1j * np.multiply.outer(x, wavenumbers[chunk])) @ amps[chunk]
    return out.real


def build_wannier(spectrum, center_site=0):
    """Wannier orbital of the lowest band centered on ``center_site``.

    With every Bloch state real and positive at the well center, summing over
    the symmetric q grid gives the real, even, exponentially localized orbital.
    """
    spec = spectrum.spec
    n_q, n_grid = spec.n_q, spec.n_grid
    qs = spectrum.quasimomenta
    center = center_site + spectrum.well_center

    # all wavenumbers pi (q + 2n) with the site phase exp(-i pi q x_i)
    wavenumbers = np.pi * (qs[None, :] + 2.0 * spectrum.harmonics[:, None])
    amps = spectrum.coefficients * np.exp(-1j * np.pi * qs * center_site)[None, :] / n_q
    wavenumbers, amps = wavenumbers.ravel(), amps.ravel()

    n_points = n_q * n_grid
    grid = center + (np.arange(n_points) - n_points // 2) / n_grid
    values = _fft_synthesize(amps, wavenumbers, grid, n_q, n_grid)
    if np.max(np.abs(values.imag)) > 1e-10:
        bad = qs[np.argmax(np.abs(spectrum.coefficients).sum(axis=0))]
        raise BandStructureError("Wannier orbital is not real; phase fixing failed", bad)
    return WannierFunction(grid, values.real, center_site, center, wavenumbers, amps,
                           spec.v_depth)


def _fft_synthesize(amps, wavenumbers, grid, n_q, n_grid):
    # wavenumbers are odd multiples of pi/n_q, so on a grid of n_q * n_grid points
    # the sum becomes a modulated inverse FFT
    n_points = n_q * n_grid
    m = np.rint(wavenumbers * n_q / np.pi).astype(int)
    r = ((m - 1) // 2) % n_points
    x0 = grid[0]
    coeff = np.zeros(n_points, dtype=complex)
    np.add.at(coeff, r, amps * np.exp(1j * wavenumbers * x0))
    j = np.arange(n_points)
    return np.exp(1j * np.pi * j / n_points) * np.fft.ifft(coeff) * n_points


@dataclass(frozen=True)
class MatrixElements:
    """Tight-binding integrals in recoil units (e*, u_onsite) or
    dimensionless (j*, jt*)."""

    e0: float
    e1: float
    j0: float
    j1: float
    jt0: float
    jt1: float
    u_onsite: float
    v_depth: float = float("nan")

    @property
    def hopping(self):
        """Net nearest-neighbour amplitude E + V J at the depth used to build w."""
        return self.e1 + self.v_depth * self.j1

    def with_interaction(self, g1d, fourth_moment):
        return MatrixElements(self.e0, self.e1, self.j0, self.j1, self.jt0, self.jt1,
                              g1d * fourth_moment, self.v_depth)


def overlap_integrals(w, shift):
    """(E, J, Jt) between the orbital at its site and the one ``shift`` sites to
    the right, plus the same three integrals with the roles exchanged."""
    h = w.spacing
    x = w.grid
    left = w.evaluate()
    right = w.evaluate(shift=shift)
    cos = np.cos(np.pi * x)
    kinetic = -1.0 / np.pi**2
    e_lr = kinetic * h * np.sum(left * w.evaluate(derivative=2, shift=shift))
    e_rl = kinetic * h * np.sum(right * w.evaluate(derivative=2))
    j = h * np.sum(left * cos**2 * right)
    jt = h * np.sum(left * cos * right)
    return (e_lr, j, jt), (e_rl, j, jt)


def compute_matrix_elements(w, g1d=0.0, symmetry_tol=1e-12):
    """On-site and nearest-neighbour integrals plus ``u_onsite = g1d * int w^4``.

    Next-nearest-neighbour integrals are evaluated and discarded; a
    ShallowLatticeWarning is issued when they exceed 10% of the nearest ones.
    """
    if g1d < 0:
        raise ValueError("g1d must be non-negative")
    h = w.spacing
    norm = h * np.sum(w.values**2)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"Wannier function not normalized (norm {norm})")

    (e0, j0, jt0), _ = overlap_integrals(w, 0)
    (e1, j1, jt1), (e1_rev, _, _) = overlap_integrals(w, 1)
    # exchange symmetry of the kinetic integral is the only non-manifest one
    if abs(e1 - e1_rev) > symmetry_tol * max(1.0, abs(e0)):
        raise ValueError(f"kinetic hopping integral not symmetric: {e1} vs {e1_rev}")
    (e2, j2, _), _ = overlap_integrals(w, 2)

    v = w.v_depth
    t1, t2 = e1 + v * j1, e2 + v * j2
    if abs(t2) > 0.1 * abs(t1):
        warnings.warn(
            f"next-nearest hopping {t2:.3e} exceeds 10% of nearest {t1:.3e} at depth {v} E_R; "
            "tight-binding truncation is unreliable", ShallowLatticeWarning, stacklevel=2)

    u = g1d * h * np.sum(w.values**4)
    return MatrixElements(float(e0), float(e1), float(j0), float(j1), float(jt0),
                          float(jt1), float(u), float(v))


def matrix_elements_at_depth(v_depth, g1d=0.0, n_planewaves=21, n_q=32, n_grid=64):
    spec = LatticeDepthSpec(v_depth, n_planewaves=n_planewaves, n_q=n_q, n_grid=n_grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShallowLatticeWarning)
        return compute_matrix_elements(build_wannier(solve_bloch_band(spec)), g1d)
