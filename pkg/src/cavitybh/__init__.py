"""Ultracold bosons in a quantized cavity optical lattice: band structure and
Wannier matrix elements, Bose-Hubbard Hamiltonians with a dynamical or
eliminated cavity field, ground-state observables and mean-field dynamics."""

__version__ = "0.1.0"

from .lattice import (BandStructureError, LatticeDepthSpec, MatrixElements,  # noqa: E402
                      ShallowLatticeWarning, build_wannier, compute_matrix_elements,
                      matrix_elements_at_depth, solve_bloch_band)
from .hamiltonian import (MODES, LatticeNumerics, ModelParams, lattice_elements,  # noqa: E402
                          self_consistent_depth, solve_mode, steady_field)
from .eigen import ground_state  # noqa: E402
