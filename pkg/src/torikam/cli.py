"""Command line entry point ``torikam``.

Exit status: 0 on success, 1 for an invalid config or invocation, 2 for a
mathematical failure (resonance, incompatibility, divergence, failed check).
Failures print a JSON error record on stdout and, when the output directory
exists, also write it to ``error.json``.
"""

from __future__ import annotations

import argparse
import copy
import datetime
import hashlib
import json
import logging
import math
import os
import sys

from . import __version__, kernels
from . import config as cfgmod
from .cocycle_lab import inject_resonance, random_near_identity, synthesize_cocycle
from .cohomology import apply_L, solve_cohomology
from .errors import ConfigError, ResonantMode, TorikamError
from .fileio import dumps_json, read_series, write_csv, write_json, write_series
from .lattice import diophantine_scan
from .newton import Cocycle, StepRecord, conjugate, trivialize
from .series import majorant_norm

COMMANDS = ("scan", "solve", "synth", "trivialize", "check")


class CheckFailed(TorikamError):
    kind = "check-mismatch"


def _parser():
    p = argparse.ArgumentParser(prog="torikam", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"torikam {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="TOML experiment config")
        src.add_argument("--preset", choices=sorted(cfgmod.PRESETS))
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("scan", help="exhaustive small-divisor scan")
    common(sp)
    sp.add_argument("--bound", type=int, help="override scan.bound")
    sp.add_argument("--variant", choices=("vd", "svd", "hd", "dv"), help="override scan.variant")

    sp = sub.add_parser("solve", help="solve the cohomological equation once")
    common(sp)
    sp.add_argument("--input", help="series file with n right-hand sides "
                                    "(default: a random coboundary from the synth block)")

    sp = sub.add_parser("synth", help="write a synthesized cocycle")
    common(sp)

    sp = sub.add_parser("trivialize", help="run the Newton scheme")
    common(sp)
    sp.add_argument("--cocycle", help="series file with F_1..F_n (default: synthesize)")

    sp = sub.add_parser("check", help="recompute the final verification of a trivialize run")
    sp.add_argument("--run", required=True, help="directory of a previous trivialize run")
    sp.add_argument("--out", help="output directory (default: the run directory)")
    sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _load_config(args):
    cfg = cfgmod.preset(args.preset) if args.preset else cfgmod.load(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "bound", None) is not None:
        overrides.setdefault("scan", {})["bound"] = args.bound
    if getattr(args, "variant", None) is not None:
        overrides.setdefault("scan", {})["variant"] = args.variant
    if overrides:
        raw = copy.deepcopy(cfg.raw)
        for k, v in overrides.items():
            if isinstance(v, dict):
                raw[k].update(v)
            else:
                raw[k] = v
        cfg = cfgmod.validate(raw)
    return cfg


def _provenance(out, command, cfg, source):
    write_json(os.path.join(out, "provenance.json"), {
        "command": command,
        "source": source,
        "config": cfg.to_dict(),
        "torikam_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    })


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _synth_cocycle(cfg):
    deck = cfg.deck()
    Psi = random_near_identity(cfg.synth_spec(), cfg.truncation())
    return synthesize_cocycle(Psi, deck), Psi


# -- commands ----------------------------------------------------------------

def cmd_scan(cfg, out):
    sc = cfg.block("scan")
    rep = diophantine_scan(cfg.deck(), sc["variant"], sc["bound"], tau_max=sc["tau_max"],
                           n_worst=sc["n_worst"],
                           threshold=cfg.block("solver")["resonance_threshold"])
    write_json(os.path.join(out, "scan.json"), rep.to_dict())
    rows = [(N, float(v)) for N, v in enumerate(rep.profile) if math.isfinite(v)]
    write_csv(os.path.join(out, "scan_profile.csv"), ("size", "min_divisor"), rows)
    if rep.resonances:
        modes = [(P, Q) for (P, Q, _j), _ in rep.resonances]
        raise ResonantMode(f"{len(modes)} exact resonance(s) within bound {rep.bound}",
                           modes=modes)
    return {"verdict": rep.verdict, "tau": rep.tau, "D": rep.D}


def cmd_solve(cfg, out, input_path=None):
    deck = cfg.deck()
    if input_path:
        F = read_series(input_path)
    else:
        H = random_near_identity(cfg.synth_spec(), cfg.truncation())
        H = H - H.identity_like()
        F = [apply_L(H, i, deck) for i in range(1, deck.n + 1)]
    write_series(os.path.join(out, "rhs.series"), F)
    sol = solve_cohomology(F, deck, cfg.settings())
    write_series(os.path.join(out, "solution.series"), [sol.G])
    write_json(os.path.join(out, "solution.json"), sol.to_dict())
    return {"min_divisor": sol.min_divisor, "coef_residual": sol.coef_residual}


def cmd_synth(cfg, out):
    c, Psi = _synth_cocycle(cfg)
    path = os.path.join(out, "cocycle.series")
    write_series(path, c.F)
    ppath = os.path.join(out, "psi.series")
    write_series(ppath, [Psi])
    write_json(os.path.join(out, "manifest.json"), {
        "seeds": [cfg.seed],
        "files": {"cocycle.series": _sha256(path), "psi.series": _sha256(ppath)},
        "rng": "numpy PCG64",
    })
    return {"cocycle": path}


def _trivialize_input(cfg, cocycle_path):
    deck = cfg.deck()
    if cocycle_path:
        c = Cocycle(deck, read_series(cocycle_path))
    else:
        c, _ = _synth_cocycle(cfg)
    res = cfg.block("resonance")
    if res:
        entry = tuple(x - 1 for x in res["entry"])
        c = inject_resonance(c, (res["P"], res["Q"]), res["eta"], entry,
                             cfg.block("solver")["resonance_threshold"])
    return c


def cmd_trivialize(cfg, out, cocycle_path=None):
    c = _trivialize_input(cfg, cocycle_path)
    write_series(os.path.join(out, "cocycle.series"), c.F)
    sol = cfg.block("solver")
    Phi, rep = trivialize(c, cfg.schedule(), cfg.settings(), tol=sol["tol"],
                          max_steps=sol["max_steps"], verify_tol=sol["verify_tol"])
    write_csv(os.path.join(out, "report.csv"), StepRecord.CSV_FIELDS,
              [s.csv_row() for s in rep.steps])
    write_series(os.path.join(out, "phi_inf.series"), [Phi])
    write_json(os.path.join(out, "summary.json"), rep.summary())
    return {"verdict": rep.verdict, "steps": len(rep.steps),
            "final_residual": rep.final_residual}


def cmd_check(run, out):
    with open(os.path.join(run, "provenance.json"), encoding="utf-8") as fh:
        prov = json.load(fh)
    if prov.get("command") != "trivialize":
        raise ConfigError([{"field": "run", "message": "not a trivialize run directory"}])
    raw = {k: v for k, v in prov["config"].items() if k != "resolved"}
    cfg = cfgmod.validate(raw)
    with open(os.path.join(run, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    c = Cocycle(cfg.deck(), read_series(os.path.join(run, "cocycle.series")))
    Phi = read_series(os.path.join(run, "phi_inf.series"))[0]
    w = cfg.schedule().final_weight(c.deck.lattice)
    res, _ = conjugate(c, Phi, w)
    final = max(majorant_norm(r, w) for r in res)
    stored = float(summary["final_residual"])
    verify_tol = cfg.block("solver")["verify_tol"]
    agree = abs(final - stored) <= 1e-9 * max(abs(stored), 1e-300) or final == stored
    verdict = "converged" if final <= verify_tol else summary["verdict"]
    result = {"final_residual": final, "stored_final_residual": stored,
              "agree": agree, "verdict": verdict, "stored_verdict": summary["verdict"]}
    write_json(os.path.join(out, "check.json"), result)
    if not agree or verdict != summary["verdict"]:
        raise CheckFailed(f"recomputed residual {final:.17g} vs stored {stored:.17g}")
    return result


# -- driver ------------------------------------------------------------------

def _fail(code, record, out):
    text = dumps_json(record)
    sys.stdout.write(text)
    if out and os.path.isdir(out):
        with open(os.path.join(out, "error.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out if args.command != "check" else (args.out or args.run)
    try:
        if args.command == "check":
            os.makedirs(out, exist_ok=True)
            result = cmd_check(args.run, out)
        else:
            cfg = _load_config(args)
            os.makedirs(out, exist_ok=True)
            source = f"preset:{args.preset}" if args.preset else os.path.abspath(args.config)
            _provenance(out, args.command, cfg, source)
            if args.command == "scan":
                result = cmd_scan(cfg, out)
            elif args.command == "solve":
                result = cmd_solve(cfg, out, args.input)
            elif args.command == "synth":
                result = cmd_synth(cfg, out)
            else:
                result = cmd_trivialize(cfg, out, args.cocycle)
    except ConfigError as exc:
        return _fail(1, {"error": "config", "diagnostics": exc.diagnostics}, out)
    except TorikamError as exc:
        return _fail(2, exc.to_dict(), out)
    except (OSError, ValueError) as exc:
        return _fail(1, {"error": "input", "message": str(exc)}, out)
    sys.stdout.write(dumps_json({"status": "ok", **result}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
