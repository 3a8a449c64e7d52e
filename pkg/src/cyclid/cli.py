"""Command-line front end.

Exit codes: 0 success, 2 assumption violation, 3 numerical failure,
4 file or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as cio
from .closed_loop import check_assumptions
from .errors import CyclidError, DataFileError
from .pipeline import PipelineConfig, collect_data, identify, load_config, save_results
from .presets import PRESETS, get_preset

log = logging.getLogger("cyclid")

EXIT_OK, EXIT_ASSUMPTION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _seed_range(text):
    a, sep, b = text.partition("..")
    try:
        lo, hi = int(a), int(b if sep else a)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a..b', got {text!r}")
    if hi < lo:
        raise argparse.ArgumentTypeError("empty seed range")
    return list(range(lo, hi + 1))


def _add_model_args(p, orders=True):
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="JSON configuration file")
    if orders:
        p.add_argument("--order-np", type=int, dest="n_p", help="plant order n_p")
        p.add_argument("--order-nc", type=int, dest="n_c", help="controller order n_c")
        p.add_argument("--reduction", choices=("era", "bt"))
        p.add_argument("--relative-degree", type=int, dest="relative_degree")


def _add_sim_args(p):
    p.add_argument("--n", type=int, dest="N", help="number of samples")
    p.add_argument("--snr-db", type=float, dest="snr_db", help="measurement SNR in dB (inf: noise-free)")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclid", description=(
        "Closed-loop identification of periodically time-varying plants "
        "through cyclic reformulation."))
    ap.add_argument("-v", "--verbose", action="count", default=0, help="log pipeline stages")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a closed-loop experiment and write a dataset")
    _add_model_args(p, orders=False)
    _add_sim_args(p)
    p.add_argument("--out", required=True, help="dataset directory")

    p = sub.add_parser("identify", help="identify the plant from a dataset directory")
    p.add_argument("dataset", help="dataset directory (r.csv, y.csv, u.csv, metadata.json)")
    _add_model_args(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="simulate and identify")
    _add_model_args(p)
    _add_sim_args(p)
    p.add_argument("--seeds", type=_seed_range, help="seed sweep 'a..b' (one subdirectory per seed)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("check", help="check the structural assumptions for a plant/controller pair")
    p.add_argument("--plant", help="plant model JSON")
    p.add_argument("--controller", help="controller model JSON")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", help="write the report as JSON")

    p = sub.add_parser("export-preset", help="write a preset's models and configuration as files")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", required=True)
    return ap


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    if args.preset:
        cfg = replace(cfg, preset=args.preset)
    for key in ("N", "snr_db", "seed", "n_p", "n_c", "relative_degree"):
        val = getattr(args, key, None)
        if val is not None:
            cfg = replace(cfg, **{key: val})
    if getattr(args, "reduction", None):
        cfg = replace(cfg, reduction=args.reduction)
    return cfg.resolved()


def _write_outputs(out, res):
    save_results(out, res)
    if res.report is not None:
        print(res.report.summary())
    else:
        print(f"recovered plant written to {out}")


def cmd_simulate(args):
    cfg = _config_from_args(args)
    ds = collect_data(cfg)
    cio.save_dataset(args.out, ds)
    print(f"wrote {ds.N} samples to {args.out}")


def cmd_identify(args):
    cfg = _config_from_args(args)
    ds = cio.load_dataset(args.dataset)
    if cfg.controller is not None and cfg.controller.period != ds.period:
        raise DataFileError(f"controller period {cfg.controller.period} does not match dataset period {ds.period}")
    _write_outputs(args.out, identify(ds, cfg))


def cmd_run(args):
    cfg = _config_from_args(args)
    seeds = args.seeds or [cfg.seed]
    for seed in seeds:
        c = replace(cfg, seed=seed)
        stages = []
        ds = collect_data(c, stages)
        out = Path(args.out) / f"seed_{seed}" if args.seeds else Path(args.out)
        cio.save_dataset(out / "data", ds)
        if args.seeds:
            print(f"-- seed {seed}")
        _write_outputs(out, identify(ds, c, stages))


def cmd_check(args):
    if args.preset:
        p = get_preset(args.preset)
        plant, controller = p.plant, p.controller
    elif args.plant and args.controller:
        plant, controller = cio.load_periodic(args.plant), cio.load_periodic(args.controller)
    else:
        raise DataFileError("check needs --preset or both --plant and --controller")
    rep = check_assumptions(plant, controller)
    print(rep.summary())
    if args.out:
        cio.write_json(args.out, rep.as_dict())
    return EXIT_OK if rep.ok else EXIT_ASSUMPTION


def cmd_export_preset(args):
    p = get_preset(args.name)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataFileError(f"cannot create {out}: {exc}") from exc
    cio.save_periodic(out / "plant.json", p.plant)
    cio.save_periodic(out / "controller.json", p.controller)
    cfg = {"plant": "plant.json", "controller": "controller.json", "N": p.N,
           "snr_db": p.snr_db, "seed": p.seed}
    cio.write_json(out / "config.json", cfg)
    print(f"exported preset {p.name} to {out}")


COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "run": cmd_run,
            "check": cmd_check, "export-preset": cmd_export_preset}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        code = COMMANDS[args.command](args)
    except CyclidError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"[{stage}] " if stage else ""
        print(f"error: {prefix}{type(exc).__name__}: {exc}", file=sys.stderr)
        sv = getattr(exc, "singular_values", None)
        if sv is not None:
            sv = np.asarray(sv)
            more = f" ... ({len(sv)} values)" if len(sv) > 20 else ""
            print("observed spectrum: " + np.array2string(sv[:20], precision=3) + more, file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
