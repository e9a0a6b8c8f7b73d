"""Command-line front end: ``eprsim <experiment> [options]``."""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field
import math
import os
from pathlib import Path
import sys

from . import experiments, ledger
from .errors import PreconditionError
from .report import FORMATS, render
from .scenario import parse_scenario

OUTPUT_DIR_ENV = "EPRSIM_OUTPUT_DIR"
EXTENSIONS = {"json": "json", "csv": "csv", "text-table": "txt"}
COMMANDS = ("epr-bohm", "epr-bohm-cat", "ghz", "chsh", "single-rotation", "timing", "steering",
            "noon", "ledger-replay", "dmr-search")


@dataclass
class RunConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    fmt: str = "json"
    output: str | None = None


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is the precondition code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise PreconditionError(message)


def _angles(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"angles must be comma-separated radians, got {text!r}") from None
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("expected four finite angles theta,theta',phi,phi' in radians")
    return vals


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="fmt", choices=tuple(FORMATS), default="json")
    common.add_argument("--output", "-o", help=f"output file (default: ${OUTPUT_DIR_ENV}/<experiment>.<ext> or stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="eprsim", description="Macroscopic EPR-Bohm and GHZ simulations.")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("epr-bohm", parents=[common], help="qubit EPR-Bohm steering")
    s.add_argument("--version", choices=("two-spin", "three-spin"), default="two-spin")

    s = sub.add_parser("epr-bohm-cat", parents=[common], help="cat-state EPR-Bohm pipeline")
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--beta", type=float, default=None)

    s = sub.add_parser("ghz", parents=[common], help="GHZ moments, dMR search and ledger replay")
    s.add_argument("--qubits-per-site", type=int, default=1)
    s.add_argument("--trials", type=int, default=100_000, help="ledger replay trials (0 to skip)")

    s = sub.add_parser("chsh", parents=[common], help="CHSH value on the Bell state")
    s.add_argument("--angles", type=_angles, default=(0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4),
                   help="theta,theta',phi,phi' in radians")
    s.add_argument("--trials", type=int, default=0, help="ledger replay trials (0 to skip)")

    s = sub.add_parser("single-rotation", parents=[common], help="entangled state vs mixture after one rotation")
    s.add_argument("--qubits-per-site", type=int, default=1)

    s = sub.add_parser("timing", parents=[common], help="readout timing invariance")
    s.add_argument("--scenario", help="scenario file (default: the built-in three-site sequence)")
    s.add_argument("--site", default="A")

    s = sub.add_parser("steering", parents=[common], help="weak local realism steering inequality")
    s.add_argument("--mode", choices=("qubit", "cat"), default="qubit")
    s.add_argument("--alpha", type=float, default=2.0)

    s = sub.add_parser("noon", parents=[common], help="NOON rotation gate search")
    s.add_argument("--N", dest="N_values", type=_int_list, default=(2, 4, 6, 8, 10))
    s.add_argument("--n-kappa", type=int, default=100)
    s.add_argument("--n-t", type=int, default=1000)

    s = sub.add_parser("ledger-replay", parents=[common], help="replay a scenario script through the ledger")
    s.add_argument("scenario")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--qubits-per-site", type=int, default=1)
    s.add_argument("--noon-n", type=int, default=2)

    s = sub.add_parser("dmr-search", parents=[common], help="exhaustive deterministic-realism search")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--preset", choices=("ghz",), default=None)
    g.add_argument("--constraints", help="e.g. xxx=-1,xyy=+1 (one axis per site A, B, C ...)")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "fmt", "output", "seed")}
    return RunConfig(ns.command, params, ns.seed, ns.fmt, ns.output)


def run(cfg: RunConfig):
    p, seed = cfg.params, cfg.seed
    cmd = cfg.experiment
    if cmd == "epr-bohm":
        return experiments.run_epr_bohm_qubit(p["version"])
    if cmd == "epr-bohm-cat":
        return experiments.run_epr_bohm_cat(p["alpha"], p["beta"])
    if cmd == "ghz":
        return experiments.run_ghz(p["qubits_per_site"], p["trials"], seed)
    if cmd == "chsh":
        return experiments.run_chsh(*p["angles"], trials=p["trials"], seed=seed)
    if cmd == "single-rotation":
        return experiments.run_single_rotation_equivalence(p["qubits_per_site"])
    if cmd == "timing":
        if p["scenario"]:
            script = parse_scenario(p["scenario"])
            if script.state_id != "ghz":
                raise PreconditionError("timing scenarios must prepare ghz")
            return experiments.run_timing_invariance(script.steps, site=p["site"])
        return experiments.run_timing_invariance(site=p["site"])
    if cmd == "steering":
        return experiments.run_wlr_steering(p["mode"], p["alpha"])
    if cmd == "noon":
        return experiments.run_noon(p["N_values"], p["n_kappa"], p["n_t"])
    if cmd == "ledger-replay":
        script = parse_scenario(p["scenario"])
        return experiments.run_ledger_replay(script, p["trials"], seed, p["alpha"], p["beta"],
                                             p["qubits_per_site"], p["noon_n"])
    if cmd == "dmr-search":
        if p["constraints"]:
            return experiments.run_dmr(experiments.parse_constraints(p["constraints"]))
        return experiments.run_dmr(ledger.ghz_constraints(), ledger.ghz_variables())
    raise PreconditionError(f"unknown experiment {cmd!r}")


def _destination(cfg: RunConfig) -> Path | None:
    if cfg.output:
        return Path(cfg.output)
    d = os.environ.get(OUTPUT_DIR_ENV)
    if d:
        return Path(d) / f"{cfg.experiment}.{EXTENSIONS[cfg.fmt]}"
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except PreconditionError as exc:
        print(f"eprsim: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    cfg = config_from_args(ns)
    try:
        text = render(run(cfg), cfg.fmt)
        dest = _destination(cfg)
        if dest is None:
            sys.stdout.write(text)
        else:
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text, encoding="utf-8", newline="\n")
    except PreconditionError as exc:
        print(f"eprsim: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"eprsim: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
