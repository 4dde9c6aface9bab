"""Command-line front end.

    bosonwalk COMMAND [--config PATH] [--out DIR] [--seed U64] [--threads N]

Every run writes plot-ready CSV files, ``summary.json`` and
``manifest.json`` into the output directory.  Passing a manifest back as
``--config`` re-runs the recorded configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .errors import DomainError, NumericalError, SizingError
from .network import graph_to_dict, save_graph, validate

COMMANDS = ("gen-graph", "richness", "decohere-scan", "perturb-ensemble", "arkhipov", "overlap-scan")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

MANIFEST_VERSION = 1


class ConfigError(DomainError):
    pass


# key -> (expected type description, checker)
def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


def _num_list(v):
    return isinstance(v, list) and all(_is_num(x) for x in v)


_SCHEMA = {
    "modes": ("integer", _is_int),
    "n_bosons": ("integer", _is_int),
    "coupling_range_mhz": ("[lo, hi] numbers", lambda v: _num_list(v) and len(v) == 2),
    "t1_us": ("number or null", lambda v: v is None or _is_num(v)),
    "tphi_us": ("number or null", lambda v: v is None or _is_num(v)),
    "tf_ns": ("number", _is_num),
    "ensemble_size": ("integer", _is_int),
    "strength": ("number", _is_num),
    "strengths": ("list of numbers", _num_list),
    "members_per_strength": ("integer", _is_int),
    "seed": ("unsigned 64-bit integer", _is_int),
    "bins": ("integer", _is_int),
    "input_kind": ("string", lambda v: isinstance(v, str)),
    "metric": ("string", lambda v: isinstance(v, str)),
    "graph_file": ("string or null", lambda v: v is None or isinstance(v, str)),
    "vary": ("string", lambda v: isinstance(v, str)),
    "values": ("list of numbers/nulls or null",
               lambda v: v is None or (isinstance(v, list) and all(x is None or _is_num(x) for x in v))),
    "n_values": ("list of integers", lambda v: isinstance(v, list) and all(_is_int(x) for x in v)),
    "coherent_tail": ("number", _is_num),
    "coherent_statistic": ("string", lambda v: isinstance(v, str)),
    "overlap_density": ("string", lambda v: isinstance(v, str)),
    "open_dim_cap": ("integer", _is_int),
    "tol": ("number", _is_num),
}
_FLOAT_KEYS = {"t1_us", "tphi_us", "tf_ns", "strength", "coherent_tail", "tol"}

assert set(_SCHEMA) == {f.name for f in fields(ex.ExperimentConfig)}


def config_from_dict(data: dict) -> ex.ExperimentConfig:
    """Validate a config mapping and fill in defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(_SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        expected, ok = _SCHEMA[key]
        if not ok(value):
            raise ConfigError(f"config key {key!r} must be {expected}, got {value!r}")
        if key in _FLOAT_KEYS and value is not None:
            value = float(value)
        elif key in ("coupling_range_mhz", "strengths"):
            value = [float(x) for x in value]
        elif key == "values" and value is not None:
            value = [None if x is None else float(x) for x in value]
        kwargs[key] = value
    try:
        return ex.ExperimentConfig(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(cfg: ex.ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=1)


def parse_config(path) -> ex.ExperimentConfig:
    """Read a config file, or the config recorded in a run manifest."""
    if path is None:
        return ex.ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(data, dict) and "manifest_version" in data:
        data = data["config"]
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# output helpers

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands

_DEFAULT_SCAN_VALUES = {
    "T1": [10.0, 20.0, 50.0, 100.0, 200.0],
    "Tphi": [10.0, 20.0, 50.0, 100.0, 200.0],
    "Tf": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0],
    "N": [1, 2, 3],
}


def cmd_gen_graph(cfg, out, threads):
    g = ex.reference_graph(cfg)
    save_graph(g, out / "graph.json")
    rows = [(i, j, v) for i, j, v in graph_to_dict(g)["couplings"]]
    write_csv(out / "couplings.csv", ["i", "j", "coupling_mhz"], rows)
    off = g.couplings[np.triu_indices(g.modes, 1)]
    return ["graph.json", "couplings.csv"], {
        "modes": g.modes,
        "mean_coupling_mhz": float(off.mean()) if off.size else 0.0,
        "diagnostics": [d.message for d in validate(g)],
    }


def cmd_richness(cfg, out, threads):
    g = ex.reference_graph(cfg)
    res = ex.richness_time(g)
    m = g.modes
    write_csv(out / "richness.csv", ["t_ns", "variance", "normalized_variance"],
              ((t, v, v * m) for t, v in zip(res.times, res.variances)))
    return ["richness.csv"], {
        "modes": m,
        "t_rich_ns": res.t_rich,
        "found": res.found,
        "threshold": res.threshold,
        "min_variance": res.min_variance,
    }


def cmd_decohere_scan(cfg, out, threads):
    values = list(cfg.values) if cfg.values is not None else _DEFAULT_SCAN_VALUES[cfg.vary]
    rows = ex.decoherence_scan(cfg, cfg.vary, values)
    header = ["vary", "value", "n_bosons", "t_ns", "delta", "trace", "model_delta", "model_trace",
              "trace_error", "norm_error"]
    write_csv(out / "decoherence_scan.csv", header,
              ((cfg.vary, r.value, r.n_bosons, r.t_ns, r.delta, r.trace, r.model_delta,
                r.model_trace, r.trace_error, r.norm_error) for r in rows))
    return ["decoherence_scan.csv"], {
        "vary": cfg.vary,
        "points": len(rows),
        "max_delta": max(r.delta for r in rows),
        "max_trace": max(r.trace for r in rows),
        "max_trace_error": max(r.trace_error for r in rows),
        "max_norm_error": max(r.norm_error for r in rows),
    }


def cmd_perturb_ensemble(cfg, out, threads):
    kinds = ex.INPUT_KINDS if cfg.input_kind == "both" else (cfg.input_kind,)
    g = ex.reference_graph(cfg)
    t = ex.evolution_time(g)
    results = [ex.perturbation_ensemble(cfg, k, cfg.metric, threads=threads, t_ns=t, graph=g)
               for k in kinds]
    write_csv(out / "ensemble.csv", ["input_kind", "metric", "member", "seed", "value", "bound"],
              ((r.input_kind, r.metric, m.index, m.seed, m.value, m.bound)
               for r in results for m in r.records))
    return ["ensemble.csv"], {
        "t_ns": t,
        "strength": cfg.strength,
        "metric": cfg.metric,
        "ensembles": {r.input_kind: {"summary": r.summary, "fit": r.fit} for r in results},
    }


def cmd_arkhipov(cfg, out, threads):
    res = ex.arkhipov_check(cfg, threads=threads)
    write_csv(out / "arkhipov.csv", ["strength", "member", "lhs", "rhs", "ratio"],
              ((r.strength, r.member, r.lhs, r.rhs, r.ratio) for r in res.rows))
    ratios = res.ratios()
    return ["arkhipov.csv"], {
        "t_ns": res.t_ns,
        "members": len(res.rows),
        "violation_count": res.violation_count,
        "max_ratio": float(ratios.max()) if ratios.size else None,
        "median_ratio": float(np.median(ratios)) if ratios.size else None,
    }


def cmd_overlap_scan(cfg, out, threads):
    rows = ex.overlap_vs_n(cfg, threads=threads)
    write_csv(out / "overlap.csv", ["n_bosons", "overlap", "fock_mean", "coherent_mean"],
              ((r.n_bosons, r.overlap, r.fock_mean, r.coherent_mean) for r in rows))
    s = [r.overlap for r in rows]
    return ["overlap.csv"], {
        "density": cfg.overlap_density,
        "overlaps": {str(r.n_bosons): r.overlap for r in rows},
        "strictly_decreasing": all(a > b for a, b in zip(s, s[1:])),
    }


_DISPATCH = {
    "gen-graph": cmd_gen_graph,
    "richness": cmd_richness,
    "decohere-scan": cmd_decohere_scan,
    "perturb-ensemble": cmd_perturb_ensemble,
    "arkhipov": cmd_arkhipov,
    "overlap-scan": cmd_overlap_scan,
}


def run_command(name: str, cfg: ex.ExperimentConfig, out_dir, threads: int = 1) -> int:
    """Run one experiment and write its outputs; returns the exit status."""
    if name not in _DISPATCH:
        print(f"bosonwalk: unknown command {name!r}; choose from {', '.join(COMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    out = Path(out_dir)
    started = datetime.now(timezone.utc).isoformat()
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
    except OSError as exc:
        print(f"bosonwalk: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        files, summary = _DISPATCH[name](cfg, out, threads)
        write_json(out / "summary.json", {"command": name, **summary})
        manifest = {
            "manifest_version": MANIFEST_VERSION,
            "tool": "bosonwalk",
            "tool_version": __version__,
            "command": name,
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "started_at": started,
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "outputs": files + ["summary.json"],
        }
        write_json(out / "manifest.json", manifest)
    except (DomainError, SizingError) as exc:
        print(f"bosonwalk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"bosonwalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"bosonwalk: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser():
    p = _Parser(prog="bosonwalk", description="Multi-boson quantum walks on resonator networks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="JSON config or run manifest")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    p.add_argument("--seed", type=_u64, metavar="U64", help="override the config seed")
    p.add_argument("--threads", type=int, default=1, metavar="COUNT",
                   help="worker threads for ensembles, 0 = one per CPU")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = config_from_dict({**cfg.to_dict(), "seed": args.seed})
    except ConfigError as exc:
        print(f"bosonwalk: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bosonwalk: {exc}", file=sys.stderr)
        return EXIT_IO
    threads = os.cpu_count() or 1 if args.threads == 0 else max(1, args.threads)
    return run_command(args.command, cfg, args.out, threads)


if __name__ == "__main__":
    sys.exit(main())
