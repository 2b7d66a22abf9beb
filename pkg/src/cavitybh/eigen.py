"""Lowest eigenpairs of (mostly Hermitian) operator matrices."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

DENSE_LIMIT = 200


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class GroundStateResult:
    energy: float
    state: np.ndarray
    converged: bool
    photon_mean: float = None
    v_eff: float = float("nan")
    residual: float = 0.0
    method: str = ""


def _select_in_eigenspace(vecs):
    """Reproducible representative of a (possibly degenerate) eigenspace:
    the normalized projection of the first basis state with nonzero weight,
    phased so that amplitude is real positive."""
    if vecs.shape[1] == 1:
        vec = vecs[:, 0].copy()
    else:
        weights = np.sum(np.abs(vecs) ** 2, axis=1)
        first = int(np.argmax(weights > 1e-12))
        vec = vecs @ vecs[first].conj()
        vec /= np.linalg.norm(vec)
    lead = int(np.argmax(np.abs(vec) > 1e-8))
    vec *= np.abs(vec[lead]) / vec[lead]
    return vec


def ground_state(H, method="auto", tol=1e-9, degeneracy_tol=1e-10, maxiter=None):
    """Lowest eigenpair of a Hermitian operator.

    ``method`` is "dense", "lanczos" or "auto" (dense up to DENSE_LIMIT).
    The iterative path is ARPACK's implicitly restarted Lanczos, which only
    needs matrix-vector products.
    """
    if not H.hermitian:
        raise ValueError("ground_state needs a Hermitian operator; use ground_state_nonhermitian")
    dim = H.dim
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "lanczos"

    if method == "dense" or dim < 8:
        mat = H.toarray()
        n_look = min(dim, 4)
        vals, vecs = scipy.linalg.eigh(mat, subset_by_index=[0, n_look - 1])
    elif method == "lanczos":
        n_look = min(4, dim - 2)
        op = spla.aslinearoperator(H.entries)
        v0 = np.ones(dim, dtype=complex) / np.sqrt(dim)
        try:
            vals, vecs = spla.eigsh(op, k=n_look, which="SA", tol=1e-13, v0=v0,
                                    maxiter=maxiter or 20 * dim)
        except spla.ArpackNoConvergence as err:
            raise ConvergenceError(f"Lanczos did not converge: {err}") from err
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    energy = float(vals[0])
    degenerate = np.abs(vals - energy) <= degeneracy_tol * max(1.0, abs(energy))
    if method == "lanczos" and degenerate.all() and n_look > 1:
        # the whole window is degenerate; fall back to dense if feasible
        if dim <= 4 * DENSE_LIMIT:
            return ground_state(H, "dense", tol, degeneracy_tol)
    space = vecs[:, degenerate]
    if space.shape[1] > 1:
        q, _ = np.linalg.qr(space)
        space = q
    state = _select_in_eigenspace(space)
    residual = float(np.linalg.norm(H.entries @ state - energy * state))
    if residual > tol * max(1.0, abs(energy)):
        raise ConvergenceError(f"ground state residual {residual:.2e} above {tol:.0e}", residual)
    return GroundStateResult(energy, state, True, residual=residual, method=method)


def ground_state_nonhermitian(H):
    """Right eigenvector whose eigenvalue has the smallest real part."""
    mat = H.toarray()
    vals, vecs = scipy.linalg.eig(mat)
    i = int(np.argmin(vals.real))
    vec = vecs[:, i] / np.linalg.norm(vecs[:, i])
    lead = int(np.argmax(np.abs(vec) > 1e-8))
    vec *= np.abs(vec[lead]) / vec[lead]
    residual = float(np.linalg.norm(mat @ vec - vals[i] * vec))
    return GroundStateResult(float(vals[i].real), vec, True, residual=residual,
                             method="dense-nonhermitian")
