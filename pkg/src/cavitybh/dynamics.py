"""Mean-field atom-field dynamics: a coherent cavity amplitude driven by
atomic expectation values, and a many-body atomic state evolving in the
instantaneous lattice it creates.

Time is measured in 1/kappa. The lattice matrix elements follow the depth
V(t) = V_cl + hbar U0 |alpha(t)|^2 through a cubic spline over a table of
band-structure solutions spaced ``DEPTH_STEP`` apart.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from . import fock
from .eigen import ground_state
from .hamiltonian import LatticeNumerics, lattice_elements
from .lattice import MatrixElements

DEPTH_STEP = 0.01
VALIDITY_DEPTH = 2.0


class NormDriftError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuenchSpec:
    a_s_post: float = 3.0
    t_final: float = 100.0
    dt: float = 1e-3
    a_s_pre: float = 0.0
    recompute_cadence: int = 1
    record_every: int = 100
    snapshot_every: int = 10000
    max_norm_drift: float = 1e-6

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.recompute_cadence < 1 or self.record_every < 1:
            raise ValueError("cadences must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    alpha: np.ndarray
    observables: dict
    state_snapshots: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    final_state: np.ndarray = None

    @property
    def norm_drift(self):
        return float(np.max(np.abs(self.observables["norm"] - 1.0)))

    def columns(self):
        """Rows for CSV output, in the documented column order."""
        obs = self.observables
        m = obs["mean_n"].shape[1]
        header = ["t", "re_alpha", "im_alpha", "abs_alpha_sq", "v_eff", "norm"]
        header += [f"mean_n_{k + 1}" for k in range(m)]
        header += [f"variance_{k + 1}" for k in range(m)]
        header += ["mean_B"]
        data = np.column_stack([self.times, self.alpha.real, self.alpha.imag,
                                np.abs(self.alpha) ** 2, obs["v_eff"], obs["norm"],
                                obs["mean_n"], obs["variance"], obs["mean_B"]])
        return header, data


class DepthTable:
    """Matrix elements (e1, j0, j1, int w^4) tabulated in depth and splined.

    The table grows on demand in blocks of ``block`` E_R; node positions are
    fixed multiples of ``step`` so results do not depend on the growth history
    except through the spline's end conditions far from the queried depth.
    """

    def __init__(self, numerics=LatticeNumerics(), step=DEPTH_STEP, block=1.0):
        self.numerics = numerics
        self.step = step
        self.block = block
        self.lo = self.hi = None
        self._spline = None

    def _node_values(self, i):
        me = lattice_elements(round(i * self.step, 10), 1.0, self.numerics)
        return (me.e1, me.j0, me.j1, me.u_onsite)

    def _build(self, lo, hi):
        idx = np.arange(lo, hi + 1)
        vals = np.array([self._node_values(i) for i in idx])
        self.lo, self.hi = lo, hi
        self._spline = CubicSpline(idx * self.step, vals, axis=0)

    def ensure(self, depth):
        i = depth / self.step
        pad = int(round(self.block / self.step))
        if self._spline is None:
            self._build(int(math.floor(i)) - pad, int(math.ceil(i)) + pad)
        elif i < self.lo + 2 or i > self.hi - 2:
            self._build(min(self.lo, int(math.floor(i)) - pad),
                        max(self.hi, int(math.ceil(i)) + pad))

    def __call__(self, depth, a_s=0.0):
        self.ensure(depth)
        e1, j0, j1, w4 = self._spline(depth)
        return MatrixElements(float("nan"), float(e1), float(j0), float(j1), float("nan"),
                              float("nan"), float(a_s * w4), float(depth))


@functools.lru_cache(maxsize=32)
def _operators(n_sites, n_atoms, boundary):
    basis = fock.enumerate_basis(n_sites, n_atoms)
    B = sp.csr_matrix(fock.hop_operator(basis, boundary).entries)
    W = fock.interaction_operator(basis).toarray().diagonal().real
    return basis, B, W


def lattice_depth(alpha, p):
    return p.v_cl + p.kappa_in_recoils * p.u0 * abs(alpha) ** 2


def atomic_hamiltonian(alpha, p, me):
    """[E + J (V_cl + hbar U0 |alpha|^2)] B + (U/2) sum n (n - 1), in E_R."""
    basis, B, W = _operators(p.n_sites, p.n_atoms, p.boundary)
    hop = me.e1 + me.j1 * lattice_depth(alpha, p)
    return hop, B, me.u_onsite * W


def rhs(alpha, psi, p, me, energy_offset=0.0):
    """Time derivatives (dalpha/dt, dpsi/dt) of the coupled mean-field equations.

    ``energy_offset`` (E_R) is subtracted from the atomic Hamiltonian; it only
    changes the global phase of psi.
    """
    hop, B, W = atomic_hamiltonian(alpha, p, me)
    b_psi = B @ psi
    norm2 = np.vdot(psi, psi).real
    lattice = me.j0 * p.n_atoms * norm2 + me.j1 * np.vdot(psi, b_psi).real
    dalpha = (1j * (p.delta_c - p.u0 * lattice) - p.kappa) * alpha + p.eta
    h_psi = hop * b_psi + (W - energy_offset) * psi
    dpsi = -1j * h_psi / p.kappa_in_recoils
    return dalpha, dpsi


def fixed_point_alpha(psi, p, me):
    basis, B, _ = _operators(p.n_sites, p.n_atoms, p.boundary)
    lattice = me.j0 * p.n_atoms * np.vdot(psi, psi).real + me.j1 * np.vdot(psi, B @ psi).real
    return p.eta / (p.kappa - 1j * (p.delta_c - p.u0 * lattice))


def _ground_state(alpha, p, me):
    hop, B, W = atomic_hamiltonian(alpha, p, me)
    basis = _operators(p.n_sites, p.n_atoms, p.boundary)[0]
    H = fock.OperatorMatrix(hop * B + sp.diags(W), basis.tag, True)
    return ground_state(H).state


def prepare_quench_initial(p, table=None, a_s=0.0, tol=1e-13, max_iter=500):
    """Interaction-free ground state and the self-consistent field amplitude.

    Returns ``(psi0, alpha0)`` with ``psi0`` the ground state of the atomic
    Hamiltonian (interaction ``a_s``, zero by default) at the depth set by
    ``alpha0``, and ``alpha0`` the stationary point of the field equation for
    that state.
    """
    table = table or DepthTable()
    p0 = p.replace(a_s=a_s)
    alpha = p.eta / (p.kappa - 1j * (p.delta_c - p.u0 * p.n_atoms))
    damping = 1.0
    last = math.inf
    for _ in range(max_iter):
        me = table(lattice_depth(alpha, p0), a_s)
        psi = _ground_state(alpha, p0, me)
        new = fixed_point_alpha(psi, p0, me)
        step = abs(new - alpha)
        if step < tol:
            return psi, new
        if step > last:
            damping = 0.5
        last = step
        alpha = alpha + damping * (new - alpha)
    raise RuntimeError(f"no self-consistent field after {max_iter} iterations (step {last:.2e})")


def eta_for_semiclassical_depth(p, v_target, numerics=LatticeNumerics()):
    """Pump strength making ``v_target`` the stationary depth of the
    interaction-free ground state."""
    table = DepthTable(numerics)
    photons = (v_target - p.v_cl) / (p.kappa_in_recoils * p.u0)
    if photons < 0:
        raise ValueError("target depth not reachable with this sign of u0")
    alpha = math.sqrt(photons)
    me = table(v_target)
    psi = _ground_state(alpha, p.replace(a_s=0.0), me)
    basis, B, _ = _operators(p.n_sites, p.n_atoms, p.boundary)
    lattice = me.j0 * p.n_atoms + me.j1 * np.vdot(psi, B @ psi).real
    return math.sqrt(photons * (p.kappa**2 + (p.delta_c - p.u0 * lattice) ** 2))


def _record(obs, alpha, psi, p, B, basis):
    norm2 = np.vdot(psi, psi).real
    prob = np.abs(psi) ** 2 / norm2
    occ = basis.states
    mean = prob @ occ
    obs["norm"].append(math.sqrt(norm2))
    obs["mean_B"].append(np.vdot(psi, B @ psi).real / norm2)
    obs["v_eff"].append(lattice_depth(alpha, p))
    obs["mean_n"].append(mean)
    obs["variance"].append(prob @ occ**2 - mean**2)


def evolve(psi0, alpha0, p, q, table=None):
    """Fourth-order Runge-Kutta integration of the joint (alpha, psi) system
    after switching the interaction from ``q.a_s_pre`` to ``q.a_s_post``.

    With ``recompute_cadence == 1`` the matrix elements follow the
    instantaneous depth at every stage; larger cadences freeze them for that
    many steps. ``psi`` is never renormalized during integration.

    Atomic energies are measured from the trace of the instantaneous
    Hamiltonian (B is traceless, so this is the mean interaction energy).
    The shift is a global phase; it halves the spectral radius RK4 sees and
    with it the norm error.
    """
    table = table or DepthTable()
    p = p.replace(a_s=q.a_s_post)
    basis, B, W = _operators(p.n_sites, p.n_atoms, p.boundary)
    n_steps = int(round(q.t_final / q.dt))
    dt = q.t_final / n_steps

    def elements(alpha):
        return table(lattice_depth(alpha, p), p.a_s)

    mean_w = float(np.mean(W))

    def f(alpha, psi, me):
        me = me if me is not None else elements(alpha)
        return rhs(alpha, psi, p, me, energy_offset=me.u_onsite * mean_w)

    alpha, psi = complex(alpha0), np.array(psi0, dtype=complex)
    obs = {k: [] for k in ("norm", "mean_B", "v_eff", "mean_n", "variance")}
    times, alphas, snaps, notes = [0.0], [alpha], [(0.0, psi.copy())], []
    _record(obs, alpha, psi, p, B, basis)
    frozen = None
    warned = False
    for step in range(1, n_steps + 1):
        if q.recompute_cadence > 1 and (step - 1) % q.recompute_cadence == 0:
            frozen = elements(alpha)
        k1a, k1p = f(alpha, psi, frozen)
        k2a, k2p = f(alpha + 0.5 * dt * k1a, psi + 0.5 * dt * k1p, frozen)
        k3a, k3p = f(alpha + 0.5 * dt * k2a, psi + 0.5 * dt * k2p, frozen)
        k4a, k4p = f(alpha + dt * k3a, psi + dt * k3p, frozen)
        alpha = alpha + dt / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        psi = psi + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)

        t = step * dt
        depth = lattice_depth(alpha, p)
        if abs(depth) < VALIDITY_DEPTH and not warned:
            notes.append((t, f"lattice depth {depth:.3f} E_R below {VALIDITY_DEPTH} E_R: "
                             "lowest-band restriction questionable"))
            warned = True
        if step % q.record_every == 0 or step == n_steps:
            times.append(t)
            alphas.append(alpha)
            _record(obs, alpha, psi, p, B, basis)
            drift = abs(obs["norm"][-1] - 1.0)
            if drift > q.max_norm_drift:
                raise NormDriftError(f"norm drift {drift:.2e} at t={t:.4g}; reduce dt "
                                     f"(currently {dt:g})")
        if step % q.snapshot_every == 0:
            snaps.append((t, psi.copy()))
    observables = {k: np.array(v) for k, v in obs.items()}
    return Trajectory(np.array(times), np.array(alphas), observables, snaps, notes, psi)


def linear_fit(times, values):
    """Least-squares line through (times, values); returns (slope, intercept)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        raise ValueError("need at least two samples")
    if np.ptp(times) == 0:
        raise ValueError("degenerate fit: all times equal")
    slope, intercept = np.polyfit(times, values, 1)
    return float(slope), float(intercept)
