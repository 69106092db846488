"""Run configuration: INI grammar, validation, echo and model builders.

Grammar (``configparser`` INI; ``#`` and ``;`` start comments)::

    [run]        schema, seed, paths (0: 1 for simulate, 64 for studies)
    [domain]     extents = 1.0 | 1.0, 2.0 ; shape = 64 | 32, 32 ; dealias
    [potential]  kind = regular | logarithmic | double_obstacle | linear | piecewise
                 lambda, c, slope, pi_slope, pi_offset, breakpoints = x:y, x:y, ...
    [noise]      kind = none | additive | multiplicative
                 law = power | list | single ; amplitude, decay_exponent, truncation
                 values = s1, s2, ... ; mode ; mean_mode_sigma ; epsilon ; h, h_scale
    [time]       dt, T, scheme = linear | stabilized, stabilizer, stabilizer_cap,
                 stride, substeps, blowup_guard
    [initial]    kind = cosine | constant | random ; mean ; modes = k:a, k:a
                 amplitude, band, decay, seed
    [source]     kind = none | constant | manufactured ; modes = k:a, ... ; mean
    [study]      schedule = v1, v2, ... ; target = u0 | g | B ; iterations
    [output]     snapshots, figures

Every key is optional; unknown sections or keys are rejected.  Multi-index
modes in two dimensions are written ``k1/k2``.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from . import noise as nz
from . import potentials as pot
from .errors import ParseError, ValidationError
from .experiments import DEFAULT_SCHEDULES, manufactured_source
from .spectral import Domain, ScalarField, random_bandlimited
from .stepper import LINEAR, SCHEMES, SimulationConfig

SCHEMA_VERSION = "chs/1"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.replace(",", " ").split())


def _ints(s: str) -> tuple:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _pairs(s: str) -> tuple:
    out = []
    for item in s.split(","):
        item = item.strip()
        if not item:
            continue
        k, v = item.split(":")
        out.append((k.strip(), float(v)))
    return tuple(out)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _fmt(value, kind) -> str:
    if kind is _bool:
        return "true" if value else "false"
    if kind is float:
        return _fmt_float(value)
    if kind is _floats:
        return ", ".join(_fmt_float(v) for v in value)
    if kind is _ints:
        return ", ".join(str(v) for v in value)
    if kind is _pairs:
        return ", ".join(f"{k}:{_fmt_float(v)}" for k, v in value)
    return str(value)


_NONE = object()

SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "run": {"schema": (str, SCHEMA_VERSION), "seed": (int, 0), "paths": (int, 0)},
    "domain": {"extents": (_floats, (1.0,)), "shape": (_ints, (64,)), "dealias": (_bool, False)},
    "potential": {
        "kind": (str, "regular"),
        "lambda": (float, 1e-2),
        "c": (float, _NONE),
        "slope": (float, 1.0),
        "pi_slope": (float, 0.0),
        "pi_offset": (float, 0.0),
        "breakpoints": (_pairs, ()),
    },
    "noise": {
        "kind": (str, "none"),
        "law": (str, "power"),
        "amplitude": (float, 0.1),
        "decay_exponent": (float, 1.0),
        "truncation": (int, 0),
        "values": (_floats, ()),
        "mode": (str, "1"),
        "mean_mode_sigma": (float, 0.0),
        "epsilon": (float, 0.0),
        "h": (str, "one"),
        "h_scale": (float, 1.0),
    },
    "time": {
        "dt": (float, 1e-3),
        "T": (float, 0.1),
        "scheme": (str, LINEAR),
        "stabilizer": (float, _NONE),
        "stabilizer_cap": (float, 1e4),
        "stride": (int, 1),
        "substeps": (int, 1),
        "blowup_guard": (float, 1e8),
    },
    "initial": {
        "kind": (str, "cosine"),
        "mean": (float, 0.0),
        "modes": (_pairs, (("1", 0.5),)),
        "amplitude": (float, 0.1),
        "band": (int, 8),
        "decay": (float, 1.0),
        "seed": (int, 0),
    },
    "source": {"kind": (str, "none"), "modes": (_pairs, ()), "mean": (float, 0.0)},
    "study": {"schedule": (_floats, ()), "target": (str, "u0"), "iterations": (int, 4)},
    "output": {"snapshots": (_bool, True), "figures": (_bool, True)},
}

CHOICES = {
    ("potential", "kind"): ("regular", "logarithmic", "double_obstacle", "linear", "piecewise"),
    ("noise", "kind"): ("none", "additive", "multiplicative"),
    ("noise", "law"): ("power", "list", "single"),
    ("noise", "h"): ("one", "tanh", "clamp"),
    ("time", "scheme"): SCHEMES,
    ("initial", "kind"): ("cosine", "constant", "random"),
    ("source", "kind"): ("none", "constant", "manufactured"),
    ("study", "target"): ("u0", "g", "B"),
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: every schema key with its typed value."""

    values: tuple  # ((section, ((key, value), ...)), ...)

    def section(self, name: str) -> dict:
        return dict(dict(self.values)[name])

    def get(self, section: str, key: str):
        return self.section(section)[key]

    def replace(self, section: str, **changes) -> "RunConfig":
        out = []
        for sec, items in self.values:
            d = dict(items)
            if sec == section:
                for k, v in changes.items():
                    if k not in d:
                        raise ParseError(f"unknown key {section}.{k}")
                    d[k] = v
            out.append((sec, tuple(d.items())))
        rc = RunConfig(tuple(out))
        validate(rc)
        return rc

    @property
    def seed(self) -> int:
        return self.get("run", "seed")

    def echo(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec, items in self.values:
            cp.add_section(sec)
            for k, v in items:
                if v is _NONE or v is None:
                    continue
                cp.set(sec, k, _fmt(v, SCHEMA[sec][k][0]))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()[:12]


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    cur = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            cur = m.group(1).strip()
            continue
        if cur == section and re.match(rf"^{re.escape(key)}\s*[=:]", s):
            return i
    return None


def parse_text(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ParseError(f"{source}: {e}") from e
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ParseError(f"{source}: unknown section [{sec}]")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                line = _line_of(text, sec, key)
                where = f" line {line}" if line else ""
                raise ParseError(f"{source}:{where} unknown key {sec}.{key}")
    values = []
    for sec, spec in SCHEMA.items():
        items = []
        for key, (kind, default) in spec.items():
            if cp.has_option(sec, key):
                raw = cp.get(sec, key)
                try:
                    v = kind(raw)
                except (ValueError, TypeError) as e:
                    line = _line_of(text, sec, key)
                    where = f" line {line}" if line else ""
                    raise ParseError(f"{source}:{where} bad value for {sec}.{key}: {raw!r}") from e
            else:
                v = default
            items.append((key, None if v is _NONE else v))
        values.append((sec, tuple(items)))
    rc = RunConfig(tuple(values))
    validate(rc)
    return rc


def parse_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    return parse_text(text, str(path))


def validate(rc: RunConfig):
    for (sec, key), allowed in CHOICES.items():
        v = rc.get(sec, key)
        if v not in allowed:
            raise ValidationError(f"{sec}.{key} must be one of {allowed}, got {v!r}")
    if rc.get("run", "schema") != SCHEMA_VERSION:
        raise ValidationError(f"schema must be {SCHEMA_VERSION}")
    if rc.get("run", "paths") < 0:
        raise ValidationError("run.paths ≥ 0 (0 picks the command default)")
    if rc.get("run", "seed") < 0:
        raise ValidationError("run.seed ≥ 0")
    t = rc.section("time")
    if not t["dt"] > 0:
        raise ValidationError("Δt > 0")
    if not t["T"] >= t["dt"]:
        raise ValidationError("T ≥ Δt")
    if t["stride"] < 1 or t["substeps"] < 1:
        raise ValidationError("time.stride ≥ 1 and time.substeps ≥ 1")
    d = rc.section("domain")
    if len(d["extents"]) != len(d["shape"]) or len(d["shape"]) not in (1, 2):
        raise ValidationError("domain.extents and domain.shape need one or two matching entries")
    lam = rc.get("potential", "lambda")
    if lam < 0 or (lam == 0 and rc.get("potential", "kind") not in ("linear", "piecewise")):
        raise ValidationError("λ > 0 unless β is globally Lipschitz")
    if rc.get("noise", "epsilon") < 0:
        raise ValidationError("noise.epsilon ≥ 0")
    if rc.get("noise", "kind") == "multiplicative" and rc.get("noise", "mean_mode_sigma") != 0.0:
        raise ValidationError("multiplicative noise needs mean_mode_sigma = 0")
    sched = rc.get("study", "schedule")
    if len(sched) > 1:
        diff = np.diff(sched)
        if not (np.all(diff > 0) or np.all(diff < 0)):
            raise ValidationError("study.schedule must be strictly monotone")


# ---------------------------------------------------------------------------
# Builders


def _mode_index(domain: Domain, k: str) -> tuple:
    idx = tuple(int(v) for v in str(k).split("/"))
    if len(idx) == 1 and domain.ndim == 2:
        idx = idx + (0,)
    if len(idx) != domain.ndim or any(not 0 <= i < n for i, n in zip(idx, domain.shape)):
        raise ValidationError(f"mode {k} outside the grid")
    return idx


def build_domain(rc: RunConfig) -> Domain:
    d = rc.section("domain")
    try:
        return Domain(tuple(d["extents"]), tuple(d["shape"]))
    except ValueError as e:
        raise ValidationError(str(e)) from e


def build_potential(rc: RunConfig) -> pot.PotentialModel:
    p = rc.section("potential")
    kind = p["kind"]
    if kind == "regular":
        return pot.regular()
    if kind == "logarithmic":
        return pot.logarithmic(1.5 if p["c"] is None else p["c"])
    if kind == "double_obstacle":
        return pot.double_obstacle(1.0 if p["c"] is None else p["c"])
    try:
        if kind == "linear":
            return pot.linear(p["slope"], p["pi_slope"], p["pi_offset"])
        xs = [float(k) for k, _ in p["breakpoints"]]
        ys = [v for _, v in p["breakpoints"]]
        return pot.piecewise_graph(xs, ys, p["pi_slope"], p["pi_offset"])
    except ValueError as e:
        raise ValidationError(f"potential: {e}") from e


def build_noise(rc: RunConfig, domain: Domain, seed: Optional[int] = None) -> nz.NoiseModel:
    n = rc.section("noise")
    seed = rc.seed if seed is None else seed
    if n["kind"] == "none":
        return nz.zero_noise(domain, seed=seed)
    mult = nz.Multiplier(n["h"], n["h_scale"]) if n["kind"] == "multiplicative" else None
    try:
        if n["law"] == "power":
            model = nz.power_law(
                domain, n["amplitude"], n["decay_exponent"], n["truncation"] or None,
                n["mean_mode_sigma"], mult, seed,
            )
        elif n["law"] == "list":
            model = nz.from_list(domain, n["values"], n["mean_mode_sigma"], mult, seed)
        else:
            sigma = np.zeros(domain.shape)
            sigma[_mode_index(domain, n["mode"])] = n["amplitude"]
            sigma[domain.zero] = n["mean_mode_sigma"]
            model = nz.NoiseModel(domain, sigma, multiplier=mult, seed=seed)
    except ValueError as e:
        raise ValidationError(f"noise: {e}") from e
    return nz.smooth_covariance(model, n["epsilon"])


def _modes_field(domain: Domain, modes, mean: float) -> np.ndarray:
    """Coefficients of ``mean + sum_k a_k prod_i cos(k_i pi x_i / L_i)``."""
    vals = np.full(domain.shape, float(mean))
    grid = domain.grid
    for k, a in modes:
        idx = _mode_index(domain, k)
        term = np.ones(domain.shape)
        for i, ki in enumerate(idx):
            term = term * np.cos(ki * np.pi * grid[i] / domain.extents[i])
        vals = vals + a * term
    return domain.to_spectral(vals)


def build_initial(rc: RunConfig, domain: Domain) -> np.ndarray:
    s = rc.section("initial")
    if s["kind"] == "constant":
        return ScalarField.constant(domain, s["mean"]).coeffs
    if s["kind"] == "cosine":
        return _modes_field(domain, s["modes"], s["mean"])
    rng = np.random.default_rng(s["seed"])
    c = random_bandlimited(domain, rng, band=s["band"], decay=s["decay"], amplitude=s["amplitude"], zero_mean=True)
    c[domain.zero] += s["mean"] * math.sqrt(domain.volume)
    return c


def build_source(rc: RunConfig, domain: Domain, potential: pot.PotentialModel, lam: float):
    s = rc.section("source")
    if s["kind"] == "none":
        return None
    if s["kind"] == "constant":
        return _modes_field(domain, s["modes"], s["mean"])
    source, _ = manufactured_source(domain, potential, lam)
    return source


def build_simulation(rc: RunConfig, seed: Optional[int] = None) -> SimulationConfig:
    domain = build_domain(rc)
    potential = build_potential(rc)
    lam = rc.get("potential", "lambda")
    t = rc.section("time")
    u0 = build_initial(rc, domain)
    if rc.get("source", "kind") == "manufactured":
        _, exact = manufactured_source(domain, potential, lam)
        u0 = exact(0.0)
    try:
        return SimulationConfig(
            domain=domain,
            potential=potential,
            lam=lam,
            u0=u0,
            dt=t["dt"],
            T=t["T"],
            noise=build_noise(rc, domain, seed),
            source=build_source(rc, domain, potential, lam),
            scheme=t["scheme"],
            stabilizer=t["stabilizer"],
            stabilizer_cap=t["stabilizer_cap"],
            stride=t["stride"],
            substeps=t["substeps"],
            blowup_guard=t["blowup_guard"],
            dealias=rc.get("domain", "dealias"),
        )
    except ValueError as e:
        raise ValidationError(str(e)) from e


def study_schedule(rc: RunConfig, name: str) -> tuple:
    sched = rc.get("study", "schedule")
    return tuple(sched) if sched else DEFAULT_SCHEDULES[name]
