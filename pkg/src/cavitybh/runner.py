"""Scenario pipelines producing tables of numbers, and their CSV form."""

import csv
import datetime
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, fock
from . import observables as obs
from .dynamics import DepthTable, QuenchSpec, eta_for_semiclassical_depth, evolve, linear_fit
from .dynamics import prepare_quench_initial
from .hamiltonian import (eta_for_depth, field_operator_exact, field_operator_expansion,
                          lattice_elements, photon_number_operator, self_consistent_depth,
                          solve_mode)

UNITS = {"u0": "kappa", "delta_c": "kappa", "eta": "kappa", "eta_eff": "kappa", "v_cl": "E_R",
         "a_s": "E_R", "kappa_in_recoils": "E_R/kappa"}


def _label(name):
    unit = UNITS.get(name)
    return f"{name}[{unit}]" if unit else name


@dataclass
class ResultTable:
    header: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    config_echo: list = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(f"row of length {len(row)} for {len(self.header)} columns")

    def column(self, name):
        i = self.header.index(name)
        return np.array([row[i] for row in self.rows])


# -- per-point pipelines -------------------------------------------------------

def _fig2_point(cfg, p):
    me, fld, gs = self_consistent_depth(p, cfg.mode, cfg.numerics, tol=cfg.tol)
    atoms = fock.enumerate_basis(p.n_sites, p.n_atoms)
    B = fock.hop_operator(atoms, p.boundary)
    state = gs.state
    basis = _coupled_basis_for(state, atoms) if cfg.mode.startswith("coupled") else atoms
    n_exact = obs.atom_expectation(state, basis,
                                   photon_number_operator(field_operator_exact(p, me, B))).real
    n_exp = obs.atom_expectation(state, basis,
                                 photon_number_operator(field_operator_expansion(p, me, B))).real
    kr = p.kappa_in_recoils
    return [p.u0, p.delta_c, fld.delta_c_prime, p.v_cl + kr * p.u0 * n_exact,
            p.v_cl + kr * p.u0 * n_exp, abs(n_exp - n_exact) / n_exact, gs.photon_mean]


def _coupled_basis_for(state, atoms):
    return fock.CoupledBasis(atoms, fock.PhotonBasis(len(state) // atoms.dim - 1))


def _fig3_point(cfg, p):
    me, fld, _ = self_consistent_depth(p, cfg.mode, cfg.numerics, tol=cfg.tol, solve=False)
    return [p.u0, p.delta_c, fld.delta_c_prime, obs.energy_gap_two_well(p, me),
            fld.photon_number, me.v_depth]


def _matched_ground_state(cfg, p, mode):
    """Ground state with the pump tuned so that the effective depth is v_target."""
    me = lattice_elements(cfg.v_target, p.a_s, cfg.numerics)
    eta = eta_for_depth(p, cfg.v_target, mode, cfg.numerics)
    basis, gs = solve_mode(p.replace(eta=eta), me, mode)
    return eta, basis, gs


def _classical_ground_state(cfg, p):
    """Same depth from a classical lattice beam and no cavity photons."""
    me = lattice_elements(cfg.v_target, p.a_s, cfg.numerics)
    return solve_mode(p.replace(u0=0.0, eta=0.0, v_cl=cfg.v_target), me, "effective")


def _fig4a_point(cfg, p):
    eta, basis, gs = _matched_ground_state(cfg, p, cfg.mode)
    cbasis, cgs = _classical_ground_state(cfg, p)
    q = obs.site_statistics(gs.state, basis, cfg.site).p_occupation
    c = obs.site_statistics(cgs.state, cbasis, cfg.site).p_occupation
    return [p.a_s, eta, gs.photon_mean, *q, *c]


def _curves(cfg):
    return [(f"dc{dc:g}", dc) for dc in cfg.delta_c_values] + [("classical", None)]


def _fluctuation_point(cfg, p):
    row = [p.a_s]
    for _, dc in _curves(cfg):
        if dc is None:
            basis, gs = _classical_ground_state(cfg, p)
        else:
            _, basis, gs = _matched_ground_state(cfg, p.replace(delta_c=dc), cfg.mode)
        if cfg.scenario == "fig4b":
            row.append(obs.site_statistics(gs.state, basis, cfg.site).variance_n)
            row += [obs.site_statistics(gs.state, basis, k).variance_n
                    for k in range(1, p.n_sites + 1)]
        else:
            row.append(obs.density_correlations(gs.state, basis).difference_13_12)
    return row


def _custom_point(cfg, p):
    if cfg.v_target is None:
        _, _, gs = self_consistent_depth(p, cfg.mode, cfg.numerics, tol=cfg.tol)
        basis = fock.enumerate_basis(p.n_sites, p.n_atoms)
        if cfg.mode.startswith("coupled"):
            basis = _coupled_basis_for(gs.state, basis)
        eta = p.eta
    else:
        eta, basis, gs = _matched_ground_state(cfg, p, cfg.mode)
    stats = [obs.site_statistics(gs.state, basis, k) for k in range(1, p.n_sites + 1)]
    corr = obs.density_correlations(gs.state, basis).difference_13_12
    return [eta, gs.energy, gs.photon_mean, gs.v_eff, *[s.mean_n for s in stats],
            *[s.variance_n for s in stats], corr]


def _header(cfg):
    m = cfg.params.n_sites
    if cfg.scenario in ("fig2a", "fig2b"):
        return ["u0[kappa]", "delta_c[kappa]", "delta_c_prime[kappa]", "v_eff_exact[E_R]",
                "v_eff_expansion[E_R]", "relative_error", "photon_mean"]
    if cfg.scenario == "fig3":
        return ["u0[kappa]", "delta_c[kappa]", "delta_c_prime[kappa]", "delta_E[E_R]",
                "abs_alpha_sq", "v_eff[E_R]"]
    if cfg.scenario == "fig4a":
        n = cfg.params.n_atoms + 1
        return (["a_s[E_R]", "eta[kappa]", "photon_mean"]
                + [f"p{i}_quantum" for i in range(n)] + [f"p{i}_classical" for i in range(n)])
    if cfg.scenario == "fig4b":
        out = ["a_s[E_R]"]
        for label, _ in _curves(cfg):
            out += [f"variance_{label}"] + [f"variance_{label}_site{k}" for k in range(1, m + 1)]
        return out
    if cfg.scenario == "fig5a":
        return ["a_s[E_R]"] + [f"corr_diff_{label}" for label, _ in _curves(cfg)]
    sweeps = [s.parameter for s in (cfg.sweep, cfg.sweep2) if s is not None]
    return ([_label(s) for s in sweeps] + ["eta[kappa]", "energy[E_R]", "photon_mean",
                                           "v_eff[E_R]"]
            + [f"mean_n_{k}" for k in range(1, m + 1)]
            + [f"variance_{k}" for k in range(1, m + 1)] + ["corr_diff_13_12"])


PIPELINES = {"fig2a": _fig2_point, "fig2b": _fig2_point, "fig3": _fig3_point,
             "fig4a": _fig4a_point, "fig4b": _fluctuation_point, "fig5a": _fluctuation_point}


def _points(cfg):
    """Parameter sets in sweep order (outer loop first)."""
    base = [cfg.params]
    if cfg.scenario == "fig3":
        base = [cfg.params.replace(u0=u) for u in cfg.u0_values]
    out = []
    for p in base:
        if cfg.sweep is None:
            out.append(p)
            continue
        for x in cfg.sweep.values():
            px = p.replace(**{cfg.sweep.parameter: x})
            if cfg.sweep2 is None:
                out.append(px)
            else:
                out += [px.replace(**{cfg.sweep2.parameter: y}) for y in cfg.sweep2.values()]
    return out


def _run_point(cfg, p):
    if cfg.scenario == "custom":
        sweeps = [getattr(p, s.parameter) for s in (cfg.sweep, cfg.sweep2) if s is not None]
        return sweeps + _custom_point(cfg, p)
    return PIPELINES[cfg.scenario](cfg, p)


def _run_trajectory(cfg):
    p = cfg.params
    numerics = cfg.numerics
    table = DepthTable(numerics)
    eta = eta_for_semiclassical_depth(p.replace(a_s=0.0), cfg.v_target, numerics)
    p = p.replace(eta=eta)
    psi0, alpha0 = prepare_quench_initial(p, table)
    q = QuenchSpec(a_s_post=p.a_s, t_final=cfg.t_final, dt=cfg.dt,
                   recompute_cadence=cfg.recompute_cadence, record_every=cfg.record_every)
    traj = evolve(psi0, alpha0, p, q, table)
    header, data = traj.columns()
    header = ["t[1/kappa]"] + header[1:4] + ["v_eff[E_R]"] + header[5:]
    var = traj.observables["variance"][:, cfg.site - 1]
    keep = traj.times >= 0.1 * traj.times[-1]
    slope, intercept = linear_fit(traj.times[keep], var[keep])
    meta = {"eta[kappa]": eta, "norm_drift": traj.norm_drift,
            f"variance_site{cfg.site}_fit_slope": slope,
            f"variance_site{cfg.site}_fit_intercept": intercept}
    for t, note in traj.warnings:
        meta[f"warning_t{t:.6g}"] = note
    return header, [[float(v) for v in row] for row in data], meta


def run_scenario(cfg, jobs=1):
    """Run the pipeline for ``cfg.scenario`` and collect a ResultTable.

    Sweep points run on up to ``jobs`` threads; rows keep sweep order. A
    point that raises becomes a row of NaN with the message in the ``error``
    column. Runs without a sweep let exceptions propagate.
    """
    meta = {"version": __version__}
    if cfg.scenario == "fig5b":
        header, rows, extra = _run_trajectory(cfg)
        meta.update(extra)
        return ResultTable(header, rows, meta, cfg.echo())

    header = _header(cfg)
    points = _points(cfg)
    sweeping = cfg.sweep is not None

    def work(p):
        if not sweeping:
            return [float(x) for x in _run_point(cfg, p)], ""
        try:
            return [float(x) for x in _run_point(cfg, p)], ""
        except Exception as err:  # noqa: BLE001 -- one bad point must not end a sweep
            return [math.nan] * len(header), f"{type(err).__name__}: {err}"

    if jobs > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(p) for p in points]
    if sweeping:
        header = header + ["error"]
        rows = [values + [msg] for values, msg in results]
    else:
        rows = [values for values, _ in results]
    meta["failed_points"] = sum(1 for _, msg in results if msg)
    return ResultTable(header, rows, meta, cfg.echo())


# -- CSV ---------------------------------------------------------------------

def _cell(value):
    if isinstance(value, str):
        return value
    return format(float(value), ".15g")


def write_csv(table, path, timestamp=None):
    """Comma-separated values with a ``#`` preamble.

    Preamble lines ``# key = value`` echo the resolved config and parse back
    with config_from_csv; lines starting ``# @`` carry run information.
    """
    timestamp = timestamp or datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# @generated: {timestamp}\n")
        for key, value in table.metadata.items():
            fh.write(f"# @{key}: {_cell(value)}\n")
        for line in table.config_echo:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])


def read_csv(path):
    """(header, rows, preamble lines) from a file written by write_csv.
    Numeric cells come back as floats, others as strings."""
    preamble, body = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") and not body:
                preamble.append(line.rstrip("\n"))
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader, [])

    def value(cell):
        try:
            return float(cell)
        except ValueError:
            return cell

    rows = [[value(c) for c in row] for row in reader]
    return header, rows, preamble
