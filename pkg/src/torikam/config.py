"""Experiment configuration: TOML files, presets and validation.

A config is a TOML document with a top-level ``seed`` and the tables
``lattice``, ``bundle``, ``truncation`` (required) and ``domain``,
``solver``, ``synth``, ``scan``, ``resonance`` (optional).  Unknown keys are
rejected.  All problems are collected into one :class:`ConfigError` whose
diagnostics name the offending field.

Angles in ``bundle.theta`` may be numbers, fractions such as ``"1/3"`` or the
tokens ``"golden"`` (alias ``"sqrt5"``), ``"sqrt2"`` and ``"liouville(k)"``.
Lattice vectors in ``lattice.e`` may be numbers, ``[re, im]`` pairs or
strings such as ``"0.3+0.15j"``.
"""

from __future__ import annotations

import copy
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cocycle_lab import SynthesisSpec
from .cohomology import SolverSettings
from .errors import ConfigError
from .lattice import (
    RESONANCE_THRESHOLD, VARIANTS, DeckMaps, FlatBundleData, TorusLattice,
    golden_angle, liouville_angle, sqrt2_angle,
)
from .newton import DomainSchedule
from .series import TruncationSpec

_INT, _FLOAT, _STR, _ANY = "int", "float", "str", "any"

# block -> key -> (kind, default); a default of ... marks a required key
SCHEMA = {
    "lattice": {"n": (_INT, ...), "e": (_ANY, ...)},
    "bundle": {"d": (_INT, ...), "theta": (_ANY, ...)},
    "truncation": {"K": (_INT, ...), "m_max": (_INT, ...), "prune": (_FLOAT, 0.0)},
    "domain": {"eps0": (_FLOAT, 0.5), "r0": (_FLOAT, 0.9), "delta0": (_FLOAT, 0.02),
               "kappa": (_FLOAT, 1.0), "mu_exp": (_FLOAT, 8.0)},
    "solver": {"resonance_threshold": (_FLOAT, RESONANCE_THRESHOLD),
               "coef_rtol": (_FLOAT, 1e-10), "compat_rtol": (_FLOAT, 1e-8),
               "tol": (_FLOAT, 1e-12), "verify_tol": (_FLOAT, 1e-10),
               "max_steps": (_INT, 20), "threads": (_INT, 1)},
    "synth": {"amplitude": (_FLOAT, 1e-2), "min_degree": (_INT, 1), "max_degree": (_INT, 3),
              "fourier_support": (_INT, 0), "ell": (_INT, 2)},
    "scan": {"variant": (_STR, "dv"), "bound": (_INT, 50), "tau_max": (_FLOAT, None),
             "n_worst": (_INT, 20)},
    "resonance": {"P": (_ANY, ...), "Q": (_ANY, ...), "eta": (_FLOAT, 1e-3),
                  "entry": (_ANY, [1, 1])},
}
REQUIRED_BLOCKS = ("lattice", "bundle", "truncation")
TOP_LEVEL = {"seed": (_INT, 0)}

_GOLDEN_2D_E = [["0.3+0.15j", "0.1"], ["0.05", "0.2+0.1875j"]]

PRESETS = {
    "golden": {
        "seed": 1,
        "lattice": {"n": 1, "e": [["1j"]]},
        "bundle": {"d": 1, "theta": [["golden"]]},
        "truncation": {"K": 0, "m_max": 64},
        "solver": {"tol": 0.0},
        "synth": {"amplitude": 1e-2, "max_degree": 3, "ell": 2},
        "scan": {"bound": 200},
    },
    "sqrt2": {
        "seed": 2,
        "lattice": {"n": 1, "e": [["1j"]]},
        "bundle": {"d": 1, "theta": [["sqrt2"]]},
        "truncation": {"K": 0, "m_max": 32},
        "synth": {"amplitude": 1e-2, "max_degree": 3, "ell": 2},
        "scan": {"bound": 200},
    },
    "third-root": {
        "seed": 3,
        "lattice": {"n": 1, "e": [["1j"]]},
        "bundle": {"d": 1, "theta": [["1/3"]]},
        "truncation": {"K": 0, "m_max": 16},
        "synth": {"amplitude": 1e-2, "max_degree": 2, "ell": 2},
        "scan": {"bound": 10},
        "resonance": {"P": [0], "Q": [3], "eta": 1e-3},
    },
    "liouville": {
        "seed": 4,
        "lattice": {"n": 1, "e": [["1j"]]},
        "bundle": {"d": 1, "theta": [["liouville(3)"]]},
        "truncation": {"K": 0, "m_max": 16},
        "synth": {"amplitude": 1e-3, "max_degree": 2, "ell": 2},
        "scan": {"bound": 200},
    },
    "elliptic-tau-i": {
        "seed": 5,
        "lattice": {"n": 1, "e": [["1j"]]},
        "bundle": {"d": 2, "theta": [["golden", "sqrt2"]]},
        "truncation": {"K": 0, "m_max": 8},
        "synth": {"amplitude": 1e-2, "max_degree": 2, "ell": 2},
        "scan": {"bound": 30},
    },
    "golden-2d": {
        "seed": 6,
        "lattice": {"n": 2, "e": _GOLDEN_2D_E},
        "bundle": {"d": 1, "theta": [["golden"], ["sqrt2"]]},
        "truncation": {"K": 8, "m_max": 8},
        "solver": {"tol": 0.0},
        "synth": {"amplitude": 1e-3, "max_degree": 3, "fourier_support": 1, "ell": 2},
        "scan": {"bound": 20},
    },
}

_LIOUVILLE = re.compile(r"^liouville\((\d+)\)$")


def parse_angle(tok):
    """Angle in turns from a number, a fraction string or a named constant."""
    if isinstance(tok, bool):
        raise ValueError("booleans are not angles")
    if isinstance(tok, (int, float)):
        return float(tok)
    if not isinstance(tok, str):
        raise ValueError(f"cannot read angle from {tok!r}")
    s = tok.strip().lower()
    if s in ("golden", "sqrt5"):
        return golden_angle()
    if s == "sqrt2":
        return sqrt2_angle()
    m = _LIOUVILLE.match(s)
    if m:
        return liouville_angle(int(m.group(1)))
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot read angle from {tok!r}") from None


def parse_complex(tok):
    if isinstance(tok, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(tok, (int, float)):
        return complex(tok)
    if isinstance(tok, list) and len(tok) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in tok):
        return complex(tok[0], tok[1])
    if isinstance(tok, str):
        return complex(tok.replace(" ", ""))
    raise ValueError(f"cannot read complex number from {tok!r}")


def _check_kind(kind, v):
    if kind == _INT:
        return isinstance(v, int) and not isinstance(v, bool)
    if kind == _FLOAT:
        return isinstance(v, (int, float)) and not isinstance(v, bool)
    if kind == _STR:
        return isinstance(v, str)
    return True


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``raw`` keeps the resolved values for provenance."""

    raw: dict

    @property
    def seed(self):
        return self.raw["seed"]

    def block(self, name):
        return self.raw.get(name)

    def lattice(self):
        return TorusLattice(tuple(tuple(parse_complex(x) for x in row)
                                  for row in self.raw["lattice"]["e"]))

    def bundle(self):
        return FlatBundleData(tuple(tuple(parse_angle(x) for x in row)
                                    for row in self.raw["bundle"]["theta"]))

    def deck(self):
        return DeckMaps(self.lattice(), self.bundle())

    def truncation(self):
        t = self.raw["truncation"]
        return TruncationSpec(t["K"], t["m_max"], self.raw["lattice"]["n"],
                              self.raw["bundle"]["d"], float(t["prune"]))

    def schedule(self):
        d = self.raw["domain"]
        return DomainSchedule(float(d["delta0"]), float(d["eps0"]), float(d["r0"]),
                              float(d["kappa"]), float(d["mu_exp"]))

    def settings(self):
        s = self.raw["solver"]
        return SolverSettings(float(s["resonance_threshold"]), float(s["coef_rtol"]),
                              float(s["compat_rtol"]))

    def synth_spec(self):
        s = self.raw["synth"]
        return SynthesisSpec(self.seed, float(s["amplitude"]), s["min_degree"],
                             s["max_degree"], s["fourier_support"], s["ell"])

    def to_dict(self):
        out = copy.deepcopy(self.raw)
        out["resolved"] = {
            "theta": [list(r) for r in self.bundle().theta],
            "e": [[[z.real, z.imag] for z in row] for row in self.lattice().e_next],
        }
        return out


def validate(doc):
    """Check a parsed config document and fill in defaults."""
    diags = []

    def bad(field, msg):
        diags.append({"field": field, "message": msg})

    if not isinstance(doc, dict):
        raise ConfigError([{"field": "", "message": "config must be a table"}])
    raw = {}
    for key in doc:
        if key not in SCHEMA and key not in TOP_LEVEL:
            bad(key, "unknown key")
    for key, (kind, default) in TOP_LEVEL.items():
        v = doc.get(key, default)
        if not _check_kind(kind, v):
            bad(key, f"expected {kind}")
        raw[key] = v
    for name, keys in SCHEMA.items():
        given = doc.get(name)
        if given is None:
            if name in REQUIRED_BLOCKS:
                bad(name, "missing required block")
            if name == "resonance":
                continue
            given = {}
        if not isinstance(given, dict):
            bad(name, "expected a table")
            continue
        blk = {}
        for key in given:
            if key not in keys:
                bad(f"{name}.{key}", "unknown key")
        for key, (kind, default) in keys.items():
            field = f"{name}.{key}"
            if key in given:
                v = given[key]
                if not (v is None and default is None) and not _check_kind(kind, v):
                    bad(field, f"expected {kind}, got {type(v).__name__}")
                blk[key] = v
            elif default is ...:
                if name in doc:
                    bad(field, "missing required key")
            else:
                blk[key] = copy.deepcopy(default)
        raw[name] = blk
    if not diags:
        _check_ranges(raw, bad)
    if diags:
        raise ConfigError(diags)
    return ExperimentConfig(raw)


def _check_ranges(raw, bad):
    lat, bun = raw["lattice"], raw["bundle"]
    n, d = lat["n"], bun["d"]
    if n < 1:
        bad("lattice.n", "must be >= 1")
    if d < 1:
        bad("bundle.d", "must be >= 1")
    e = lat["e"]
    if not (isinstance(e, list) and len(e) == n
            and all(isinstance(r, list) and len(r) == n for r in e)):
        bad("lattice.e", f"expected {n} rows of {n} complex entries")
    else:
        try:
            TorusLattice(tuple(tuple(parse_complex(x) for x in row) for row in e))
        except ValueError as exc:
            bad("lattice.e", str(exc))
    th = bun["theta"]
    if not (isinstance(th, list) and len(th) == n
            and all(isinstance(r, list) and len(r) == d for r in th)):
        bad("bundle.theta", f"expected {n} rows of {d} angles")
    else:
        for r in th:
            for x in r:
                try:
                    parse_angle(x)
                except ValueError as exc:
                    bad("bundle.theta", str(exc))
    tr = raw["truncation"]
    for key in ("K", "m_max"):
        if tr[key] < 0:
            bad(f"truncation.{key}", "must be >= 0")
    if tr["prune"] < 0:
        bad("truncation.prune", "must be >= 0")
    dom = raw["domain"]
    for key in ("eps0", "r0", "delta0"):
        if not 0 < dom[key] < 1:
            bad(f"domain.{key}", "must lie in (0, 1)")
    for key in ("kappa", "mu_exp"):
        if not dom[key] > 0:
            bad(f"domain.{key}", "must be > 0")
    if all(0 < dom[k] < 1 for k in ("eps0", "r0", "delta0")) and dom["kappa"] > 0:
        total = 5 * dom["delta0"] * math.pi ** 2 / 6
        if total / dom["kappa"] >= dom["eps0"] / 2:
            bad("domain.delta0", "schedule would let eps_k reach eps0/2")
        if total >= math.log(2):
            bad("domain.delta0", "schedule would let r_k reach r0/2")
    sol = raw["solver"]
    for key in ("resonance_threshold", "coef_rtol", "compat_rtol", "tol", "verify_tol"):
        if sol[key] < 0:
            bad(f"solver.{key}", "must be >= 0")
    if sol["max_steps"] < 0:
        bad("solver.max_steps", "must be >= 0")
    if sol["threads"] < 1:
        bad("solver.threads", "must be >= 1")
    syn = raw["synth"]
    if syn["amplitude"] < 0:
        bad("synth.amplitude", "must be >= 0")
    if syn["min_degree"] < 1:
        bad("synth.min_degree", "must be >= 1")
    if syn["max_degree"] < syn["min_degree"]:
        bad("synth.max_degree", "must be >= synth.min_degree")
    if syn["fourier_support"] < 0:
        bad("synth.fourier_support", "must be >= 0")
    if syn["ell"] < 1:
        bad("synth.ell", "must be >= 1")
    sc = raw["scan"]
    if sc["variant"] not in VARIANTS:
        bad("scan.variant", f"must be one of {', '.join(VARIANTS)}")
    elif sc["variant"] != "dv" and n != 1:
        bad("scan.variant", "only 'dv' is available for n >= 2")
    if sc["bound"] < 2:
        bad("scan.bound", "must be >= 2")
    if sc["n_worst"] < 0:
        bad("scan.n_worst", "must be >= 0")
    res = raw.get("resonance")
    if res is not None:
        P, Q = res["P"], res["Q"]
        if not (isinstance(P, list) and len(P) == n and all(isinstance(x, int) for x in P)):
            bad("resonance.P", f"expected {n} integers")
        if not (isinstance(Q, list) and len(Q) == d
                and all(isinstance(x, int) and x >= 0 for x in Q)):
            bad("resonance.Q", f"expected {d} nonnegative integers")
        ent = res["entry"]
        if not (isinstance(ent, list) and len(ent) == 2
                and all(isinstance(x, int) and 1 <= x <= syn["ell"] for x in ent)):
            bad("resonance.entry", f"expected two indices in 1..{syn['ell']}")


def loads(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([{"field": "", "message": f"TOML syntax error: {exc}"}]) from None
    return validate(doc)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([{"field": "", "message": f"cannot read {path}: {exc}"}]) from None
    return loads(text)


def preset(name):
    if name not in PRESETS:
        raise ConfigError([{"field": "preset",
                            "message": f"unknown preset {name!r}; known: {', '.join(PRESETS)}"}])
    return validate(copy.deepcopy(PRESETS[name]))
