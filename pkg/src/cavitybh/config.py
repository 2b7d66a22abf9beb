"""Flat ``key = value`` scenario files, figure presets and their resolution
into model parameters."""

import math
from dataclasses import dataclass, field

from .hamiltonian import MODES, LatticeNumerics, ModelParams
from .lattice import LatticeDepthSpec

SCENARIOS = ("fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5a", "fig5b", "custom")
SWEEPABLE = ("u0", "delta_c", "eta", "eta_eff", "v_cl", "a_s", "kappa_in_recoils")
CUSTOM_REQUIRED = ("u0", "delta_c", "eta", "v_cl", "a_s", "n_atoms", "n_sites")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if isinstance(line, int) else (f"{line}: " if line else "")
        super().__init__(where + message)
        self.line = line


def _float(text):
    return float(text)


def _optional_float(text):
    return None if text.lower() == "none" else float(text)


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError("not an integer")
    return int(value)


def _optional_int(text):
    return None if text.lower() in ("adaptive", "none") else _int(text)


def _float_list(text):
    if text.lower() == "none":
        return None
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _name(text):
    if text != "none" and text not in SWEEPABLE:
        raise ValueError(f"sweep parameter must be one of {', '.join(SWEEPABLE)} or none")
    return text


# key -> (parser, fallback default). Order here is the echo order.
KEYS = {
    "scenario": (_choice(SCENARIOS), "custom"),
    "mode": (_choice(MODES), "exact-elim"),
    "u0": (_float, -1.0),
    "delta_c": (_float, -3.0),
    "eta": (_float, 2.0),
    "eta_eff": (_float, 0.0),
    "v_cl": (_float, 0.0),
    "a_s": (_float, 0.0),
    "n_atoms": (_int, 2),
    "n_sites": (_int, 2),
    "kappa_in_recoils": (_float, 1.0),
    "boundary": (_choice(("open", "periodic")), "open"),
    "n_max": (_optional_int, None),
    "v_target": (_optional_float, None),
    "u0_values": (_float_list, None),
    "delta_c_values": (_float_list, None),
    "site": (_int, 2),
    "sweep": (_name, "none"),
    "sweep_start": (_float, 0.0),
    "sweep_stop": (_float, 1.0),
    "sweep_points": (_int, 11),
    "sweep2": (_name, "none"),
    "sweep2_start": (_float, 0.0),
    "sweep2_stop": (_float, 1.0),
    "sweep2_points": (_int, 11),
    "n_planewaves": (_int, 21),
    "n_q": (_int, 32),
    "n_grid": (_int, 64),
    "tol": (_float, 1e-8),
    "dt": (_float, 1e-3),
    "t_final": (_float, 100.0),
    "recompute_cadence": (_int, 1),
    "record_every": (_int, 100),
    "output": (str, ""),
}

_FIG2 = dict(u0=-1.0, delta_c=-3.0, eta=2.0, v_cl=-4.0, a_s=0.1, n_atoms=2, n_sites=2,
             sweep="u0", sweep_start=-2.0, sweep_stop=-0.1, sweep_points=16,
             sweep2="delta_c", sweep2_start=-8.0, sweep2_stop=0.0, sweep2_points=17)
_FIG45 = dict(u0=-1.0, v_cl=0.0, v_target=-4.0, n_atoms=4, n_sites=4,
              sweep="a_s", sweep_start=0.0, sweep_stop=2.0, sweep_points=21)

PRESETS = {
    "fig2a": dict(_FIG2),
    "fig2b": dict(_FIG2),
    "fig3": dict(u0_values=(-1.2, -0.4), eta=2.0, v_cl=-4.0, a_s=0.0, n_atoms=1, n_sites=2,
                 sweep="delta_c", sweep_start=-4.0, sweep_stop=2.0, sweep_points=121),
    "fig4a": dict(_FIG45, delta_c=-3.75, mode="coupled", sweep_stop=12.0, sweep_points=25),
    "fig4b": dict(_FIG45, delta_c_values=(-5.0, -3.0)),
    "fig5a": dict(_FIG45, delta_c_values=(-5.0, -3.0)),
    "fig5b": dict(u0=-1.0, delta_c=-4.2, v_cl=0.0, a_s=3.0, v_target=-4.0, n_atoms=4,
                  n_sites=4, dt=1e-3, t_final=100.0),
    "custom": {},
}


@dataclass
class Sweep:
    parameter: str
    start: float
    stop: float
    n_points: int

    def values(self):
        if self.n_points == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.n_points - 1)
        return [self.start + i * step for i in range(self.n_points)]


@dataclass
class ScenarioConfig:
    scenario: str
    params: ModelParams
    sweep: Sweep = None
    sweep2: Sweep = None
    numerics: LatticeNumerics = LatticeNumerics()
    mode: str = "exact-elim"
    output_path: str = ""
    settings: dict = field(default_factory=dict)  # every resolved key, for the echo

    def __getattr__(self, name):
        settings = self.__dict__.get("settings", {})
        if name in settings:
            return settings[name]
        raise AttributeError(name)

    def echo(self):
        """Resolved config as ``key = value`` lines that parse back to this config."""
        return [f"{key} = {format_value(self.settings[key])}" for key in KEYS]


def format_value(value):
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _entries(text, source):
    """(key, raw value, line tag) for every non-blank, non-comment line."""
    out = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag = number if source is None else f"{source} {number}"
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", tag)
        key, value = (s.strip() for s in line.split("=", 1))
        out.append((key, value, tag))
    return out


def parse_config(text, overrides=()):
    """Resolve a scenario file plus ``key=value`` overrides into a ScenarioConfig.

    Preset defaults for the named scenario apply first, then file entries,
    then overrides. Unknown keys, unparsable values, duplicate keys and (for
    ``scenario = custom``) missing physical parameters are errors that carry
    the offending line.
    """
    entries = _entries(text, None)
    extra = []
    for item in overrides:
        extra += _entries(item, "--set")
    given, seen = {}, {}
    for key, value, tag in entries + extra:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", tag)
        if key in seen and not (isinstance(tag, str) and tag.startswith("--set")):
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", tag)
        parser = KEYS[key][0]
        try:
            given[key] = parser(value)
        except ValueError as err:
            raise ConfigError(f"{key}: cannot parse {value!r} ({err})", tag) from None
        seen.setdefault(key, tag)

    scenario = given.get("scenario", "custom")
    if scenario == "custom":
        missing = [k for k in CUSTOM_REQUIRED if k not in given]
        if missing:
            raise ConfigError("custom scenario is missing required keys: " + ", ".join(missing))
    settings = {key: default for key, (_, default) in KEYS.items()}
    settings.update(PRESETS[scenario])
    settings.update(given)
    return _build(settings)


def _build(s):
    try:
        params = ModelParams(u0=s["u0"], delta_c=s["delta_c"], eta=s["eta"], eta_eff=s["eta_eff"],
                             v_cl=s["v_cl"], a_s=s["a_s"], n_atoms=s["n_atoms"],
                             n_sites=s["n_sites"], kappa_in_recoils=s["kappa_in_recoils"],
                             boundary=s["boundary"], n_max=s["n_max"])
    except ValueError as err:
        raise ConfigError(str(err)) from None

    def sweep(prefix):
        if s[prefix] == "none":
            return None
        n = s[prefix + "_points"]
        if n < 2:
            raise ConfigError(f"{prefix}_points must be >= 2, got {n}")
        return Sweep(s[prefix], s[prefix + "_start"], s[prefix + "_stop"], n)

    for key in ("dt", "t_final", "tol"):
        if not s[key] > 0 or math.isinf(s[key]):
            raise ConfigError(f"{key} must be positive and finite")
    if not 1 <= s["site"] <= s["n_sites"]:
        raise ConfigError(f"site {s['site']} out of range 1..{s['n_sites']}")
    if s["scenario"] in ("fig3",) and not s["u0_values"]:
        raise ConfigError("fig3 needs u0_values")
    if s["scenario"] in ("fig4b", "fig5a") and not s["delta_c_values"]:
        raise ConfigError(f"{s['scenario']} needs delta_c_values")
    if s["scenario"] in ("fig4a", "fig4b", "fig5a", "fig5b") and s["v_target"] is None:
        raise ConfigError(f"{s['scenario']} needs v_target")
    try:
        LatticeDepthSpec(0.0, s["n_planewaves"], s["n_q"], s["n_grid"])
        numerics = LatticeNumerics(s["n_planewaves"], s["n_q"], s["n_grid"])
    except ValueError as err:
        raise ConfigError(str(err)) from None
    cfg = ScenarioConfig(s["scenario"], params, sweep("sweep"), sweep("sweep2"), numerics,
                         s["mode"], s["output"], dict(s))
    if cfg.sweep2 is not None and cfg.sweep is None:
        raise ConfigError("sweep2 needs sweep")
    return cfg


def load_config(path, overrides=()):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def config_from_csv(path):
    """Config text echoed in a CSV preamble, ready for parse_config."""
    lines = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body and not body.startswith("@"):
                lines.append(body)
    return "\n".join(lines) + "\n"
