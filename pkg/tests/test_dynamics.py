import numpy as np
import pytest

from cavitybh import fock
from cavitybh.dynamics import (DepthTable, NormDriftError, QuenchSpec, eta_for_semiclassical_depth,
                               evolve, fixed_point_alpha, lattice_depth, linear_fit,
                               prepare_quench_initial, rhs)
from cavitybh.hamiltonian import ModelParams, lattice_elements
from cavitybh.observables import site_statistics

P = ModelParams(u0=-1.0, delta_c=-3.0, eta=2.0, v_cl=-1.0, n_atoms=2, n_sites=3)
ME = lattice_elements(-4.0, 1.0)


def random_state(dim, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def test_quench_spec_validation():
    for bad in (dict(dt=0), dict(t_final=-1), dict(recompute_cadence=0), dict(record_every=0)):
        with pytest.raises(ValueError):
            QuenchSpec(**bad)


def test_dark_cavity_stays_dark():
    psi = random_state(6, 0)
    dalpha, _ = rhs(0.0, psi, P.replace(eta=0.0), ME)
    assert dalpha == 0


def test_fixed_point_root():
    for seed in range(10):
        psi = random_state(6, seed)
        a = fixed_point_alpha(psi, P, ME)
        dalpha, _ = rhs(a, psi, P, ME)
        assert abs(dalpha) < 1e-13


def test_eigenstate_at_fixed_point_only_rotates_phase():
    p = P.replace(n_atoms=1, n_sites=2)
    psi = np.array([1, 1], dtype=complex) / np.sqrt(2)  # B eigenvalue +1, no interaction
    a = fixed_point_alpha(psi, p, ME)
    dalpha, dpsi = rhs(a, psi, p, ME)
    assert abs(dalpha) < 1e-14
    energy = ME.e1 + ME.j1 * lattice_depth(a, p)
    assert np.allclose(dpsi, -1j * energy * psi, atol=1e-14)


def test_depth_table_tracks_direct_evaluation():
    table = DepthTable()
    for v in (-4.0, -4.137, -3.51, -5.0):
        me = table(v, 2.0)
        ref = lattice_elements(v, 2.0)
        for name in ("e1", "j0", "j1", "u_onsite"):
            assert abs(getattr(me, name) - getattr(ref, name)) < 1e-9 * max(1.0, abs(getattr(ref, name)))


def test_prepared_state_is_stationary_point():
    table = DepthTable()
    psi, alpha = prepare_quench_initial(P, table)
    me = table(lattice_depth(alpha, P))
    dalpha, _ = rhs(alpha, psi, P, me)
    assert abs(dalpha) < 1e-11
    basis = fock.enumerate_basis(3, 2)
    B = fock.hop_operator(basis)
    # attractive depth makes the net hopping E + J V negative, so <B> > 0
    assert me.e1 + me.j1 * lattice_depth(alpha, P) < 0
    assert B.expect(psi).real > 0


def test_stationary_run_constant():
    p = P.replace(n_atoms=2, n_sites=2)
    table = DepthTable()
    psi, alpha = prepare_quench_initial(p, table)
    traj = evolve(psi, alpha, p, QuenchSpec(a_s_post=0.0, t_final=50.0, dt=2e-3,
                                            record_every=500), table)
    for key in ("norm", "mean_B", "v_eff"):
        vals = traj.observables[key]
        assert np.max(np.abs(vals - vals[0])) < 1e-8, key
    assert np.max(np.abs(traj.observables["variance"] - traj.observables["variance"][0])) < 1e-8
    assert np.max(np.abs(traj.alpha - alpha)) < 1e-8
    assert np.all(np.diff(traj.times) > 0)


def test_initial_variance_matches_observables():
    p = ModelParams(u0=-1.0, delta_c=-4.2, v_cl=0.0, n_atoms=4, n_sites=4)
    table = DepthTable()
    p = p.replace(eta=eta_for_semiclassical_depth(p, -4.0))
    psi, alpha = prepare_quench_initial(p, table)
    assert abs(lattice_depth(alpha, p) + 4.0) < 1e-6
    traj = evolve(psi, alpha, p, QuenchSpec(a_s_post=3.0, t_final=0.01, dt=1e-3), table)
    basis = fock.enumerate_basis(4, 4)
    for k in range(1, 5):
        assert abs(traj.observables["variance"][0, k - 1]
                   - site_statistics(psi, basis, k).variance_n) < 1e-12


def test_rk4_order():
    p = P.replace(a_s=0.0)
    table = DepthTable()
    psi, alpha = prepare_quench_initial(p, table)
    finals = {}
    for dt in (0.04, 0.02, 0.01, 0.005):
        q = QuenchSpec(a_s_post=2.0, t_final=2.0, dt=dt, record_every=10**6, max_norm_drift=1.0)
        finals[dt] = evolve(psi, alpha, p, q, table).final_state
    ref = finals[0.005]
    dts = np.array([0.04, 0.02, 0.01])
    errs = np.array([np.linalg.norm(finals[d] - ref) for d in dts])
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 4) < 0.3


def test_norm_drift_aborts():
    p = P.replace(a_s=0.0)
    table = DepthTable()
    psi, alpha = prepare_quench_initial(p, table)
    with pytest.raises(NormDriftError, match="reduce dt"):
        evolve(psi, alpha, p, QuenchSpec(a_s_post=30.0, t_final=2.0, dt=0.2, record_every=1),
               table)


def test_shallow_depth_is_flagged():
    p = ModelParams(u0=-1.0, delta_c=-3.0, eta=1.0, v_cl=-0.5, n_atoms=1, n_sites=2)
    table = DepthTable()
    psi, alpha = prepare_quench_initial(p, table)
    traj = evolve(psi, alpha, p, QuenchSpec(a_s_post=0.0, t_final=0.1, dt=1e-3), table)
    assert traj.warnings and "below" in traj.warnings[0][1]


def test_frozen_elements_cadence_runs():
    p = P.replace(a_s=0.0)
    table = DepthTable()
    psi, alpha = prepare_quench_initial(p, table)
    q1 = QuenchSpec(a_s_post=1.0, t_final=0.5, dt=1e-3)
    q5 = QuenchSpec(a_s_post=1.0, t_final=0.5, dt=1e-3, recompute_cadence=5)
    a = evolve(psi, alpha, p, q1, table).final_state
    b = evolve(psi, alpha, p, q5, table).final_state
    assert np.linalg.norm(a - b) < 1e-3


def test_trajectory_columns():
    p = P.replace(a_s=0.0)
    table = DepthTable()
    psi, alpha = prepare_quench_initial(p, table)
    traj = evolve(psi, alpha, p, QuenchSpec(a_s_post=1.0, t_final=0.2, dt=1e-3,
                                            record_every=50), table)
    header, data = traj.columns()
    assert header[:6] == ["t", "re_alpha", "im_alpha", "abs_alpha_sq", "v_eff", "norm"]
    assert data.shape == (5, len(header))
    assert header[-1] == "mean_B"


def test_linear_fit():
    t = np.linspace(0, 3, 7)
    assert linear_fit(t, np.full(7, 2.5))[0] == pytest.approx(0.0, abs=1e-14)
    slope, icpt = linear_fit(t, 2 * t + 1)
    assert slope == pytest.approx(2.0) and icpt == pytest.approx(1.0)
    with pytest.raises(ValueError):
        linear_fit([1.0], [2.0])
    with pytest.raises(ValueError):
        linear_fit([1.0, 1.0], [2.0, 3.0])
