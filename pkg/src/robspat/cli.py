"""Command-line interface.

Every subcommand resolves its configuration as defaults, then an optional
``--config`` JSON file (a plain config or a previously written manifest),
then explicit flags. The resolved configuration is written to a manifest
next to the outputs, and ``--config <manifest>`` reruns it.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, NumericalError, RobspatError
from .inference import permutation_tests
from .influence import CurveSettings, influence_curves, write_curves_csv
from .lattice import LatticeSpec, WeightMatrix, build_lattice_weights, read_adjacency_csv
from .mcstudy import PowerStudyConfig, PowerTable, emit_table, run_power_study
from .measures import Centering, Field, MeasureKind, center, compute_measure
from .randfield import DistributionKind, MixtureLayout, RngStream, sar_generate
from .svg import bar_chart, line_chart

log = logging.getLogger("robspat")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

WEIGHT_DEFAULTS = {"grid": "10x10", "scheme": "rook", "torus": False, "adjacency": None}

DEFAULTS = {
    "gen": {
        **WEIGHT_DEFAULTS,
        "rho": 0.0,
        "dist": "normal",
        "mixture_layout": "iid",
        "seed": 42,
        "replication": 0,
        "center": "mean",
    },
    "measure": {**WEIGHT_DEFAULTS, "input": None, "kinds": [k.value for k in MeasureKind], "center": "mean"},
    "test": {
        **WEIGHT_DEFAULTS,
        "input": None,
        "kinds": ["MC"],
        "n_perm": 999,
        "alpha": 0.05,
        "seed": 42,
        "alternative": "two-sided",
        "center": "mean",
    },
    "influence": {
        **WEIGHT_DEFAULTS,
        "rho": 0.5,
        "dist": "normal",
        "kinds": ["MC", "GC", "APLE"],
        "runs": 1000,
        "seed": 42,
        "zmin": -10.0,
        "zmax": 10.0,
        "points": 41,
        "unit": None,
        "prezero": True,
    },
    "power": PowerStudyConfig().to_dict(),
    "report": {"table": None, "layout": "table1", "dist": None},
}


class _Usage(Exception):
    pass


def _add_weights(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--grid", default=S, help="lattice size RxC, e.g. 10x10")
    p.add_argument("--scheme", default=S, choices=["rook", "queen"])
    p.add_argument("--torus", default=S, action="store_true", help="wrap the lattice onto a torus")
    p.add_argument("--adjacency", default=S, help="adjacency CSV (i,j,w) instead of a lattice")


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON config or manifest to start from")
    p.add_argument("--out", default=None, help="output directory (default: current)")
    p.add_argument("--threads", type=int, default=None, help="worker cap (results do not depend on it)")
    p.add_argument("--seed", type=int, default=S)


def _kinds(text: str) -> list[str]:
    return [k.value for k in MeasureKind.parse_list(text)]


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="robspat", description="Classical and robust spatial autocorrelation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="simulate a SAR field")
    _add_common(p)
    _add_weights(p)
    p.add_argument("--rho", type=float, default=S)
    p.add_argument("--dist", default=S, choices=[d.value for d in DistributionKind])
    p.add_argument("--mixture-layout", dest="mixture_layout", default=S, choices=[m.value for m in MixtureLayout])
    p.add_argument("--replication", type=int, default=S, help="substream index")
    p.add_argument("--center", default=S, choices=["mean", "median"])

    p = sub.add_parser("measure", help="compute statistics on a field")
    _add_common(p)
    _add_weights(p)
    p.add_argument("--input", default=S, help="field CSV (column z)")
    p.add_argument("--kinds", type=_kinds, default=S)
    p.add_argument("--center", default=S, choices=["mean", "median"])

    p = sub.add_parser("test", help="permutation test of no spatial autocorrelation")
    _add_common(p)
    _add_weights(p)
    p.add_argument("--input", default=S)
    p.add_argument("--kinds", type=_kinds, default=S)
    p.add_argument("--n-perm", dest="n_perm", type=int, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--alternative", default=S, choices=["two-sided", "positive", "negative"])
    p.add_argument("--center", default=S, choices=["mean", "median"])

    p = sub.add_parser("influence", help="simulated influence curves")
    _add_common(p)
    _add_weights(p)
    p.add_argument("--rho", type=float, default=S)
    p.add_argument("--dist", default=S, choices=[d.value for d in DistributionKind])
    p.add_argument("--kinds", type=_kinds, default=S)
    p.add_argument("--runs", type=int, default=S)
    p.add_argument("--zmin", type=float, default=S)
    p.add_argument("--zmax", type=float, default=S)
    p.add_argument("--points", type=int, default=S)
    p.add_argument("--unit", type=int, default=S, help="fixed contaminated location (default: random)")
    p.add_argument("--no-prezero", dest="prezero", action="store_false", default=S)

    p = sub.add_parser("power", help="Monte Carlo power study")
    _add_common(p)
    p.add_argument("--grids", type=lambda s: s.split(","), default=S, help="e.g. 10x10,20x20")
    p.add_argument("--schemes", type=lambda s: s.split(","), default=S)
    p.add_argument("--rhos", type=lambda s: [float(x) for x in s.split(",")], default=S)
    p.add_argument("--dists", dest="distributions", type=lambda s: s.split(","), default=S)
    p.add_argument("--kinds", dest="measures", type=_kinds, default=S)
    p.add_argument("--reps", dest="replications", type=int, default=S)
    p.add_argument("--n-perm", dest="n_perm", type=int, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--alternative", default=S, choices=["directional", "two-sided", "positive", "negative"])
    p.add_argument("--mixture-layout", dest="mixture_layout", default=S, choices=[m.value for m in MixtureLayout])
    p.add_argument("--center", dest="centering", default=S, choices=["mean", "median"])
    p.add_argument("--torus", default=S, action="store_true")

    p = sub.add_parser("report", help="lay out a saved power table")
    _add_common(p)
    p.add_argument("--table", default=S, help="power.json written by 'power'")
    p.add_argument("--layout", default=S, choices=["table1", "appendix"])
    p.add_argument("--dist", default=S, choices=[d.value for d in DistributionKind])
    return parser


def _resolve(command: str, args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS[command])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from exc
        if "subcommand" in loaded:
            if loaded["subcommand"] != command:
                raise DataError(f"manifest is for '{loaded['subcommand']}', not '{command}'")
            loaded = loaded["config"]
        unknown = set(loaded) - set(config)
        if unknown:
            raise DataError(f"unknown config keys for '{command}': {sorted(unknown)}")
        config.update(loaded)
    skip = {"config", "out", "threads", "command", "verbose"}
    for key, value in vars(args).items():
        if key not in skip:
            config[key] = value
    return config


def _weights(cfg: dict) -> tuple[WeightMatrix, str]:
    if cfg.get("adjacency"):
        return read_adjacency_csv(cfg["adjacency"]), "custom"
    spec = LatticeSpec.parse_grid(cfg["grid"], cfg["scheme"], bool(cfg["torus"]))
    return build_lattice_weights(spec), spec.scheme.value


def read_field_csv(path: str | Path) -> np.ndarray:
    """Single column of values, optionally headed ``z``."""
    path = Path(path)
    try:
        lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if lines and lines[0].lower() == "z":
        lines = lines[1:]
    try:
        values = np.array([float(ln.split(",")[0]) for ln in lines])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric field value ({exc})") from None
    if values.size < 2:
        raise DataError(f"{path}: need at least 2 values")
    return values


def write_field_csv(values: np.ndarray, path: Path) -> None:
    with path.open("w", newline="") as fh:
        fh.write("z\n")
        for v in values:
            fh.write(f"{float(v)!r}\n")


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _write_manifest(out: Path, command: str, cfg: dict, outputs: list[Path]) -> Path:
    manifest = {
        "subcommand": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "version": __version__,
        "outputs": [p.name for p in outputs],
    }
    path = out / f"{command}_manifest.json"
    _dump(manifest, path)
    return path


def _input_field(cfg: dict, W: WeightMatrix) -> Field:
    if not cfg.get("input"):
        raise _Usage("--input is required")
    cfg["input"] = str(Path(cfg["input"]).resolve())
    field = center(read_field_csv(cfg["input"]), cfg["center"])
    if field.n != W.n:
        raise DataError(f"{cfg['input']}: field has {field.n} values but the weights describe {W.n} locations")
    return field


def cmd_gen(cfg: dict, out: Path, threads) -> list[Path]:
    W, _ = _weights(cfg)
    stream = RngStream(cfg["seed"], "gen", cfg["replication"])
    field = sar_generate(cfg["rho"], W, cfg["dist"], stream, cfg["mixture_layout"], cfg["center"])
    csv_path, side = out / "field.csv", out / "field.json"
    write_field_csv(field.values, csv_path)
    _dump(
        {
            "seed": cfg["seed"],
            "stream": {"experiment": stream.experiment, "replication": stream.replication},
            "rho": cfg["rho"],
            "kind": cfg["dist"],
            "mixture_layout": cfg["mixture_layout"],
            "spec": {k: cfg[k] for k in WEIGHT_DEFAULTS},
            "n": W.n,
        },
        side,
    )
    return [csv_path, side]


def cmd_measure(cfg: dict, out: Path, threads) -> list[Path]:
    W, scheme = _weights(cfg)
    field = _input_field(cfg, W)
    records = []
    for kind in MeasureKind.parse_list(cfg["kinds"]):
        value = compute_measure(kind, W, field)
        rec = {"kind": kind.value, "value": value, "n": W.n, "scheme": scheme}
        if kind.orientation < 0:
            rec["one_minus"] = 1.0 - value
        records.append(rec)
    path = out / "measures.json"
    _dump(records, path)
    print(json.dumps(records, indent=2))
    return [path]


def cmd_test(cfg: dict, out: Path, threads) -> list[Path]:
    W, _ = _weights(cfg)
    field = _input_field(cfg, W)
    results = permutation_tests(
        cfg["kinds"], W, field, cfg["n_perm"], cfg["alpha"], RngStream(cfg["seed"], "test"), cfg["alternative"]
    )
    records = [r.to_dict() for r in results]
    path = out / "test.json"
    _dump(records, path)
    print(json.dumps(records, indent=2))
    return [path]


def cmd_influence(cfg: dict, out: Path, threads) -> list[Path]:
    if cfg.get("adjacency"):
        raise _Usage("influence curves run on lattices; --adjacency is not supported here")
    if cfg["points"] < 2:
        raise DataError("--points must be >= 2")
    settings = CurveSettings(
        lattice=LatticeSpec.parse_grid(cfg["grid"], cfg["scheme"], bool(cfg["torus"])),
        rho=cfg["rho"],
        distribution=cfg["dist"],
        grid=tuple(np.linspace(cfg["zmin"], cfg["zmax"], cfg["points"])),
        runs=cfg["runs"],
        unit=cfg["unit"],
        prezero=cfg["prezero"],
        seed=cfg["seed"],
    )
    curves = influence_curves(cfg["kinds"], settings, threads or 1)
    csv_path, svg_path = out / "influence.csv", out / "influence.svg"
    write_curves_csv(list(curves.values()), csv_path)
    svg_path.write_text(
        line_chart(
            {k.value: (c.grid, c.mean_influence) for k, c in curves.items()},
            title=f"Simulated influence ({settings.runs} runs)",
            xlabel="contaminating value z1",
            ylabel="mean influence",
        )
    )
    return [csv_path, svg_path]


def _table_outputs(table: PowerTable, out: Path, layouts, dist=None) -> list[Path]:
    paths = []
    for layout in layouts:
        formatted = emit_table(table, layout, distribution=dist)
        suffix = f"_{dist}" if dist else ""
        path = out / f"{layout}{suffix}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(formatted.header)
            writer.writerows(formatted.csv_rows())
        paths.append(path)
    cfg = table.config
    if 0.0 in cfg.rhos:
        designs = cfg.designs()
        for d in cfg.distributions:
            series = {}
            for spec in designs:
                label = f"n={spec.n} {spec.scheme.short}"
                series[label] = [
                    table.rate(m, d, 0.0, spec.scheme, f"{spec.rows}x{spec.cols}") for m in cfg.measures
                ]
            svg = out / f"power_rho0_{d.value}.svg"
            svg.write_text(
                bar_chart(
                    [m.value for m in cfg.measures],
                    series,
                    title=f"Rejection rate at rho = 0, {d.value}",
                    ylabel="rejection rate",
                    reference=cfg.alpha,
                )
            )
            paths.append(svg)
    return paths


def cmd_power(cfg: dict, out: Path, threads) -> list[Path]:
    config = PowerStudyConfig.from_dict(cfg)
    table = run_power_study(config, threads)
    json_path, cells_path = out / "power.json", out / "power_cells.csv"
    json_path.write_text(table.to_json() + "\n")
    records = table.to_records()
    with cells_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(records[0]))
        writer.writeheader()
        for r in records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    layouts = ["appendix"] + (["table1"] if 0.0 in config.rhos else [])
    return [json_path, cells_path, *_table_outputs(table, out, layouts)]


def cmd_report(cfg: dict, out: Path, threads) -> list[Path]:
    if not cfg.get("table"):
        raise _Usage("--table is required")
    try:
        table = PowerTable.from_json(Path(cfg["table"]).read_text())
    except OSError as exc:
        raise DataError(f"cannot read {cfg['table']}: {exc}") from exc
    cfg["table"] = str(Path(cfg["table"]).resolve())
    return _table_outputs(table, out, [cfg["layout"]], cfg.get("dist"))


COMMANDS = {
    "gen": cmd_gen,
    "measure": cmd_measure,
    "test": cmd_test,
    "influence": cmd_influence,
    "power": cmd_power,
    "report": cmd_report,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _resolve(args.command, args)
        out = Path(args.out) if args.out else Path.cwd()
        out.mkdir(parents=True, exist_ok=True)
        threads = args.threads or os.cpu_count() or 1
        outputs = COMMANDS[args.command](cfg, out, threads)
        manifest = _write_manifest(out, args.command, cfg, outputs)
        log.info("wrote %s", ", ".join(str(p) for p in [*outputs, manifest]))
        return EXIT_OK
    except _Usage as exc:
        print(f"robspat {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"robspat {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"robspat {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RobspatError as exc:  # pragma: no cover - all subclasses handled above
        print(f"robspat {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(dispatch())
