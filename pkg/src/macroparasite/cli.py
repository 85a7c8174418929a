"""Command-line front end.

Each subcommand reads one config file (JSON or TOML), prints a JSON summary
on stdout and, with ``--out DIR``, writes its data files there. CSV files
start with a ``# macroparasite <kind> v1`` schema line followed by a header
row.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 consistency-gate
failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pydantic

from . import compound, experiments, model, simulate, svg
from .config import CONFIG_TYPES, apply_overrides, build_clump, load_mapping
from .errors import ConsistencyError, InvalidParameters, MacroparasiteError
from .inversion import choose_k_max, invert

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CONSISTENCY = 0, 2, 3, 4
CSV_VERSION = "v1"


class ConfigError(Exception):
    """Unreadable, malformed or invalid experiment configuration."""


def _csv(kind: str, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# macroparasite {kind} {CSV_VERSION}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    # JSON has no NaN or infinity; write them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def _load_config(args, command: str, required: bool = True):
    mapping = {}
    if args.config is not None:
        try:
            mapping = load_mapping(args.config)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except ValueError as exc:
            raise ConfigError(f"cannot parse {args.config}: {exc}") from exc
    elif required:
        raise ConfigError(f"{command} needs --config")
    try:
        mapping = apply_overrides(mapping, args.set or [])
        return CONFIG_TYPES[command].model_validate(mapping)
    except pydantic.ValidationError as exc:
        raise ConfigError(f"invalid {command} config:\n{exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write(out: Optional[Path], name: str, text: str) -> Optional[str]:
    if out is None:
        return None
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return str(path)


def _pmf_csv(pmf) -> str:
    return _csv("pmf", ["k", "p"], ((k, float(p)) for k, p in enumerate(pmf.mass)))


def cmd_report(args) -> dict:
    cfg = _load_config(args, "report")
    params = cfg.build()
    inv = cfg.inversion
    if cfg.phi_mixture is None:
        rep = model.report(params, inv.mass_tol, inv.target_error)
    else:
        rep = model.phi_mixture_report(params, cfg.phi_mixture.phi, cfg.phi_mixture.weights, inv.mass_tol)
    result = {"params": params.to_dict(), "report": rep.to_dict()}
    if cfg.phi_mixture is not None:
        result["phi_mixture"] = cfg.phi_mixture.model_dump()
    files = [_write(args.out, "report.json", _json(result)), _write(args.out, "pmf.csv", _pmf_csv(rep.pmf))]
    return {**result, "files": [f for f in files if f]}


_FIGURE_AXES = {1: ("alpha", "k"), 2: ("mu_M", "m_C"), 3: ("m_C", None)}


def _figure_svgs(which: int, rows: List[dict]) -> dict:
    xkey, skey = _FIGURE_AXES[which]
    if skey is None:
        series = [(name, [r[xkey] for r in rows], [r[name] for r in rows])
                  for name in ("cv", "one_minus_prevalence", "gini", "pietra")]
        return {f"figure{which}.svg": svg.line_plot(series, xkey, "aggregation measure")}
    out = {}
    levels = sorted({r[skey] for r in rows})
    for name in ("cv", "one_minus_prevalence"):
        series = [(f"{skey}={level:g}", [r[xkey] for r in rows if r[skey] == level],
                   [r[name] for r in rows if r[skey] == level]) for level in levels]
        out[f"figure{which}_{name}.svg"] = svg.line_plot(series, xkey, name)
    return out


def cmd_figure(args) -> dict:
    cfg = _load_config(args, "figure", required=False)
    which = args.which or cfg.which
    if which is None:
        raise ConfigError("figure needs --which {1,2,3}")
    if args.svg and args.out is None:
        raise ConfigError("--svg needs --out")
    jobs = args.jobs or cfg.jobs
    rows = experiments.figure_rows(which, cfg.overrides(), cfg.inversion.mass_tol, jobs)
    columns = experiments.FIGURE_COLUMNS[which]
    text = _csv(f"figure{which}", columns, ([r[c] for c in columns] for r in rows))
    if args.out is None:
        sys.stdout.write(text)
        return None
    files = [_write(args.out, f"figure{which}.csv", text)]
    if args.svg:
        for name, doc in _figure_svgs(which, rows).items():
            files.append(_write(args.out, name, doc))
    return {"figure": which, "rows": len(rows), "columns": columns, "files": files}


def cmd_compare(args) -> dict:
    cfg = _load_config(args, "compare")
    result = experiments.compare(cfg.left.build(), cfg.right.build(), cfg.inversion.mass_tol)
    _write(args.out, "compare.json", _json(result))
    return result


def cmd_simulate(args) -> dict:
    cfg = _load_config(args, "simulate")
    seed = cfg.seed if args.seed is None else args.seed
    mixture = None
    if cfg.phi_mixture is not None:
        mixture = (tuple(cfg.phi_mixture.phi), tuple(cfg.phi_mixture.weights))
    params = cfg.build()
    sim = simulate.SimConfig(params, cfg.resolved_age(), cfg.replicates, seed, mixture, cfg.mode)
    res = simulate.run_ensemble(sim)
    summary = res.to_dict()
    pmf = summary.pop("empirical_pmf")
    result = {"params": params.to_dict(), "age": sim.age, "seed": seed, "mode": sim.mode,
              "phi_mixture": cfg.phi_mixture.model_dump() if cfg.phi_mixture else None, **summary}
    _write(args.out, "simulate.json", _json(result))
    if pmf is not None:
        _write(args.out, "empirical_pmf.csv", _csv("empirical_pmf", ["k", "p"], enumerate(pmf)))
    return result


def cmd_decompose(args) -> dict:
    cfg = _load_config(args, "decompose")
    clump = build_clump(cfg.clump)
    lam = cfg.resolved_lambda()
    weights, comps = compound.decompose(clump, lam, cfg.tol)
    K = cfg.columns
    header = ["j", "omega"] + [f"F{i}" for i in range(K)]
    rows = [[j, float(w)] + [float(x) for x in comp.padded(K)[:K]] for j, (w, comp) in enumerate(zip(weights, comps))]
    text = _csv("decompose", header, rows)
    if args.out is None:
        sys.stdout.write(text)
        return None
    path = _write(args.out, "decompose.csv", text)
    return {"lambda": lam, "J": len(comps) - 1, "weight_sum": float(weights.sum()), "files": [path]}


def cmd_invert(args) -> dict:
    cfg = _load_config(args, "invert")
    params = cfg.build()
    inv = cfg.inversion
    G = model.equilibrium_evaluator(params)
    k_max = cfg.k_max or choose_k_max(G, inv.mass_tol, inv.target_error)
    pmf = invert(G, k_max, inv.target_error)
    result = {"params": params.to_dict(), "k_max": k_max, "total_mass": pmf.total, "tail_bound": pmf.tail_bound,
              "clamped_mass": pmf.clamped_mass, "warning": pmf.warning}
    files = [_write(args.out, "invert.json", _json(result)), _write(args.out, "pmf.csv", _pmf_csv(pmf))]
    return {**result, "files": [f for f in files if f]}


COMMANDS = {
    "report": cmd_report,
    "figure": cmd_figure,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "decompose": cmd_decompose,
    "invert": cmd_invert,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON or TOML)")
    common.add_argument("--out", type=Path, help="directory for output files")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry, e.g. --set clump.mean=2 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="macroparasite", description="Macroparasite load distributions.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("report", parents=[common], help="aggregation indices and equilibrium pmf")
    fig = sub.add_parser("figure", parents=[common], help="data (and plots) for figures 1-3")
    fig.add_argument("--which", type=int, choices=(1, 2, 3))
    fig.add_argument("--svg", action="store_true", help="also write SVG line plots")
    fig.add_argument("--jobs", type=int, help="worker processes for the grid")
    sub.add_parser("compare", parents=[common], help="Lorenz and convex order between two systems")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo loads of surviving hosts")
    sim.add_argument("--seed", type=int, help="overrides the config seed")
    sub.add_parser("decompose", parents=[common], help="compound-Poisson weights and components")
    sub.add_parser("invert", parents=[common], help="equilibrium pmf by PGF inversion")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("seed", "svg", "which", "jobs"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        result = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except experiments.GridPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code_for(exc.cause)
    except (MacroparasiteError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code_for(exc)
    if result is not None:
        sys.stdout.write(_json(result))
    return EXIT_OK


def _code_for(exc: Exception) -> int:
    if isinstance(exc, ConsistencyError):
        return EXIT_CONSISTENCY
    if isinstance(exc, (InvalidParameters, ConfigError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
