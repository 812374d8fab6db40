"""Command-line entry point: ``rainfall-forecast {ingest,dmd,dl,synth}``.

Each subcommand reads an optional YAML config (``--config``); explicit flags
override config values.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import yaml

from . import experiments as ex
from .errors import RainfallError
from .ingest import (
    NE_INDIA_BBOX,
    BoundingBox,
    GridPoint,
    drop_empty_points,
    file_digest,
    load_daily_csv,
    load_monthly_csv,
    monthly_average,
    select_point,
    select_region,
    write_daily_csv,
    write_monthly_csv,
)
from .nn import TrainConfig
from .synth import (
    LinearSystemSpec,
    SeasonalSpec,
    daily_from_monthly,
    gen_linear_system,
    linear_grid,
    seasonal_grid,
)

log = logging.getLogger("rainfall_forecast")


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise SystemExit(f"config {path} must be a mapping")
    return cfg


def _bbox(value) -> BoundingBox | None:
    if value is None:
        return None
    if isinstance(value, str) and value.lower() == "ne_india":
        return NE_INDIA_BBOX
    if isinstance(value, dict):
        return BoundingBox(**value)
    return BoundingBox(*map(float, value))


def cmd_ingest(args, cfg) -> int:
    data = args.data or cfg.get("data")
    if not data:
        raise SystemExit("ingest needs --data")
    records = load_daily_csv(data)
    if args.drop_empty or cfg.get("drop_empty", False):
        records = drop_empty_points(records)
    grid = monthly_average(records, how=args.aggregate or cfg.get("aggregate", "mean"))
    box = _bbox(args.bbox or cfg.get("bbox"))
    if box is not None:
        grid = select_region(grid, box)
    out = Path(args.out or cfg.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    write_monthly_csv(grid, out / "monthly.csv")
    log.info("wrote %d points x %d months to %s", grid.n_points, grid.n_months, out / "monthly.csv")
    return 0


def _synthetic_grid(scfg: dict):
    kind = scfg.get("kind", "linear")
    first = tuple(scfg.get("first_month", (2000, 1)))
    if kind == "linear":
        lam = [complex(z) for z in scfg.get("eigenvalues", ["0.8660254037844387+0.5j", "0.8660254037844387-0.5j", "0.98"])]
        spec = LinearSystemSpec(
            n=int(scfg.get("n", 8)), eigenvalues=lam, m=int(scfg.get("months", 12 * 30)), seed=int(scfg.get("seed", 0))
        )
        return linear_grid(gen_linear_system(spec), first)
    if kind == "seasonal":
        n = int(scfg.get("n", 4))
        points = tuple(GridPoint(25.0 + 0.25 * i, 91.0) for i in range(n))
        spec = SeasonalSpec(
            amplitude=float(scfg.get("amplitude", 10.0)),
            length=int(scfg.get("months", 480)),
            noise=float(scfg.get("noise", 0.5)),
            trend=float(scfg.get("trend", 0.0)),
            seed=int(scfg.get("seed", 0)),
        )
        return seasonal_grid(points, first, spec)
    raise SystemExit(f"unknown synthetic kind {kind!r}")


def _source(args, cfg):
    data = args.data or cfg.get("data")
    if data:
        return load_monthly_csv(data), file_digest(data)
    if "synthetic" in cfg:
        return _synthetic_grid(cfg["synthetic"]), None
    raise SystemExit("need --data or a 'synthetic' section in the config")


def cmd_dmd(args, cfg) -> int:
    grid, digest = _source(args, cfg)
    box = _bbox(cfg.get("bbox"))
    if box is not None:
        grid = select_region(grid, box)
    if args.start is not None or args.stop is not None or args.rank is not None:
        if None in (args.start, args.stop, args.rank):
            raise SystemExit("--start, --stop and --rank must be given together")
        triples = [(args.start, args.stop, args.rank)]
    else:
        triples = [tuple(t) for t in cfg.get("triples", ex.DEFAULT_DMD_TRIPLES)]
    spec = ex.DmdExperimentSpec(triples=triples, horizon=int(cfg.get("horizon", 12)))
    results = ex.run_dmd_experiments(grid, spec, workers=args.workers)

    out = Path(args.out or cfg.get("out", "dmd_out"))
    out.mkdir(parents=True, exist_ok=True)
    ex.write_table(results, out / "dmd_results.csv", ex.DMD_COLUMNS)
    n_err = ex.write_errors(results, out / "errors.csv")
    ex.emit_plot_data(results, out / "plots")
    ex.write_manifest(
        out / "manifest.json",
        command="dmd",
        config={"triples": [list(t) for t in triples], "horizon": spec.horizon},
        seed=None,
        data_hash=digest,
        results=results,
    )
    for r in results:
        c = r.config
        if r.ok:
            print(f"{c['start']}-{c['stop']} rank {c['rank']}: RMSE {r.rmse:.4f} MAE {r.mae:.4f} ({r.units})")
        else:
            print(f"{c['start']}-{c['stop']} rank {c['rank']}: FAILED {r.error}")
    return 1 if n_err == len(results) else 0


def _train_config(cfg: dict, args) -> TrainConfig:
    known = {f.name for f in fields(TrainConfig)}
    tc = TrainConfig(**{k: v for k, v in (cfg.get("train") or {}).items() if k in known})
    if args.epochs is not None:
        tc = replace(tc, epochs=args.epochs)
    if args.batch_size is not None:
        tc = replace(tc, batch_size=args.batch_size)
    return tc


def cmd_dl(args, cfg) -> int:
    grid, digest = _source(args, cfg)
    aliases = {**ex.LOCATION_ALIASES, **{k.lower(): tuple(v) for k, v in (cfg.get("aliases") or {}).items()}}
    name = args.location or cfg.get("location")
    if args.lat is not None and args.lon is not None:
        lat, lon = args.lat, args.lon
        name = name or f"{lat:g}_{lon:g}"
    elif name:
        if name.lower() not in aliases:
            raise SystemExit(f"unknown location {name!r}; known: {', '.join(sorted(aliases))}")
        lat, lon = aliases[name.lower()]
    elif grid.n_points == 1:
        lat, lon = grid.points[0].lat, grid.points[0].lon
        name = f"{lat:g}_{lon:g}"
    else:
        raise SystemExit("choose a location with --location or --lat/--lon")
    series = select_point(grid, lat, lon)

    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    spec = ex.DlExperimentSpec(
        location=(lat, lon),
        optimizers=[args.optimizer] if args.optimizer else cfg.get("optimizers", ["adamw", "nadam"]),
        input_windows=[args.window] if args.window else cfg.get("input_windows", [13, 14, 15]),
        dropouts=[args.dropout] if args.dropout is not None else cfg.get("dropouts", [0.0, 0.2]),
        train=_train_config(cfg, args),
        seed=seed,
        train_fraction=float(cfg.get("train_fraction", 0.8)),
    )
    results = ex.run_dl_experiments(series, spec, months=grid.months, workers=args.workers)

    out = Path(args.out or cfg.get("out", "dl_out"))
    out.mkdir(parents=True, exist_ok=True)
    ex.write_table(results, out / "dl_results.csv", ex.DL_COLUMNS)
    ex.write_best(results, out / "best.csv", ex.DL_COLUMNS)
    ex.emit_plot_data(results, out / "plots", location=name.lower())
    ex.write_manifest(
        out / "manifest.json",
        command="dl",
        config={
            "location": name,
            "lat": lat,
            "lon": lon,
            "optimizers": list(spec.optimizers),
            "input_windows": list(spec.input_windows),
            "dropouts": list(spec.dropouts),
            "train": spec.train,
            "train_fraction": spec.train_fraction,
        },
        seed=seed,
        data_hash=digest,
        results=results,
    )
    best = ex.flag_best(results)
    for i, r in enumerate(results):
        c = r.config
        marks = "".join(f" <- best {k.upper()}" for k, j in best.items() if j == i)
        print(
            f"{c['optimizer']:>6} W={c['input_window']} H={c['output_window']} dropout={c['dropout']:g}: "
            f"MAE {r.mae:.4f} RMSE {r.rmse:.4f}{marks}"
        )
    return 0


def cmd_synth(args, cfg) -> int:
    scfg = dict(cfg.get("synthetic") or {})
    if args.kind:
        scfg["kind"] = args.kind
    if args.seed is not None:
        scfg["seed"] = args.seed
    grid = _synthetic_grid(scfg)
    out = Path(args.out or cfg.get("out", "synthetic.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.daily:
        write_daily_csv(daily_from_monthly(grid), out)
    else:
        write_monthly_csv(grid, out)
    log.info("wrote synthetic %s data to %s", scfg.get("kind", "linear"), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rainfall-forecast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--data", help="input CSV")
        p.add_argument("--out", help="output directory (file for synth)")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("ingest", help="daily CSV -> monthly CSV")
    common(p)
    p.add_argument("--bbox", nargs=4, type=float, metavar=("LAT_MIN", "LAT_MAX", "LON_MIN", "LON_MAX"))
    p.add_argument("--aggregate", choices=["mean", "sum"])
    p.add_argument("--drop-empty", action="store_true", help="drop points that are missing on every day")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("dmd", help="DMD experiment grid")
    common(p)
    p.add_argument("--start", type=int)
    p.add_argument("--stop", type=int)
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_dmd)

    p = sub.add_parser("dl", help="LSTM experiment grid for one location")
    common(p)
    p.add_argument("--location", help="alias such as guwahati")
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.add_argument("--optimizer", choices=["adamw", "nadam"])
    p.add_argument("--window", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.set_defaults(func=cmd_dl)

    p = sub.add_parser("synth", help="write synthetic rainfall CSV")
    common(p)
    p.add_argument("--kind", choices=["linear", "seasonal"])
    p.add_argument("--daily", action="store_true", help="emit the daily ingest format")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = _load_config(args.config)
    try:
        return args.func(args, cfg)
    except RainfallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
