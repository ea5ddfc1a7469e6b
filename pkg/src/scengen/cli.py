"""Command-line entry point: scengen {fit, simulate, validate, make-fixture}.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
error, 1 anything else.  Every run writes a manifest recording the config
hash, seed and artifact versions; manifests carry no timestamps so reruns
with the same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .archive import SCHEMA_VERSION, load_model, panel_digest, save_model
from .config import RunConfig, load_config
from .data import HOURLY, aggregate_to_monthly, load_panel
from .errors import ConfigError, DataError, NumericError, ScenGenError
from .pipeline import fit_model, merge_monthly_panels, simulate_model
from .simulate import read_scenario_csv, write_scenario_csv
from .validate import build_report, write_report


def _threads(args) -> int:
    env = os.environ.get("SCENGEN_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"SCENGEN_THREADS must be an integer, got {env!r}")
    else:
        n = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


def _write_manifest(out_dir: Path, command: str, config_hash: str,
                    seed: int, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config_sha256": config_hash,
        "seed": seed,
        "schema_version": SCHEMA_VERSION,
        "scengen_version": __version__,
        "outputs": sorted(outputs),
    }
    with open(out_dir / f"manifest_{command}.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def _load_inputs(cfg: RunConfig):
    vre = load_panel(cfg.vre_path, cfg.meta_path)
    inflows = (load_panel(cfg.inflows_path, cfg.meta_path)
               if cfg.inflows_path else None)
    return vre, inflows


def cmd_fit(args) -> int:
    cfg, cfg_hash = load_config(args.config)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vre, inflows = _load_inputs(cfg)

    model = fit_model(vre, inflows, cfg.model_options())
    hourly_ref = None
    if model.disagg_model is not None:
        hourly_ref = {"data": cfg.vre_path, "meta": cfg.meta_path,
                      "sha256": panel_digest(vre)}
    model_path = out_dir / "model.json"
    save_model(model, model_path, hourly_ref)
    _write_manifest(out_dir, "fit", cfg_hash, cfg.seed, [model_path.name])

    dag = model.net.dag
    print(f"fit: {len(dag.nodes)} stations, {len(dag.edges())} edges, "
          f"score {model.net.score:.3f} -> {model_path}")
    return 0


def cmd_simulate(args) -> int:
    cfg, cfg_hash = load_config(args.config)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = load_model(args.model)

    evidence = None
    if args.evidence:
        hydro = [s for s in model.stations if s.is_evidence]
        evidence = read_scenario_csv(args.evidence, hydro)

    sim = simulate_model(model, cfg.n_scenarios, cfg.horizon_index(),
                         seed=cfg.seed, evidence=evidence,
                         threads=_threads(args))

    outputs = ["scenarios_monthly.csv"]
    write_scenario_csv(sim.monthly, out_dir / "scenarios_monthly.csv")
    if sim.disagg is not None:
        write_scenario_csv(sim.disagg.hourly, out_dir / "scenarios_hourly.csv")
        sim.disagg.provenance.to_csv(out_dir / "provenance.csv", index=False)
        sim.disagg.clipping.to_csv(out_dir / "clipping.csv", index=False)
        outputs += ["scenarios_hourly.csv", "provenance.csv", "clipping.csv"]
    _write_manifest(out_dir, "simulate", cfg_hash, cfg.seed, outputs)

    print(f"simulate: {cfg.n_scenarios} scenarios x {cfg.horizon_months} months "
          f"-> {out_dir}")
    return 0


def cmd_validate(args) -> int:
    cfg, cfg_hash = load_config(args.config)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = load_model(args.model)

    vre, inflows = _load_inputs(cfg)
    if vre.resolution == HOURLY:
        vre = aggregate_to_monthly(vre)
    historical = merge_monthly_panels(vre, inflows) if inflows else vre

    synthetic = read_scenario_csv(Path(args.scenarios) / "scenarios_monthly.csv",
                                  list(model.stations))
    report = build_report(historical, synthetic, alpha=cfg.alpha)
    write_report(report, out_dir)
    _write_manifest(out_dir, "validate", cfg_hash, cfg.seed,
                    ["report.json", "fisher_hist.csv", "corr_scatter.csv",
                     "bands.csv"])

    print(f"validate: pass fraction {report.pass_fraction:.3f} over "
          f"{len(report.pair_tests)} pairs at alpha {report.alpha} -> {out_dir}")
    return 0


def cmd_make_fixture(args) -> int:
    from .fixtures import write_fixture

    paths = write_fixture(args.out, n_vre=args.vre, n_hydro=args.hydro,
                          years=args.years, seed=args.seed,
                          hourly=not args.monthly_only)
    print("make-fixture:", json.dumps(paths, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scengen",
        description="Scenario synthesis for renewable generation and inflows")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the full model and write an archive")
    p_fit.add_argument("--config", required=True)
    p_fit.add_argument("--threads", type=int, default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="generate scenario CSVs")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--model", required=True)
    p_sim.add_argument("--evidence", default=None,
                       help="external inflow scenario CSV to clamp")
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_val = sub.add_parser("validate", help="score scenarios against history")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--model", required=True)
    p_val.add_argument("--scenarios", required=True,
                       help="directory holding scenarios_monthly.csv")
    p_val.add_argument("--threads", type=int, default=None)
    p_val.set_defaults(func=cmd_validate)

    p_fx = sub.add_parser("make-fixture",
                          help="write a synthetic dataset with known truth")
    p_fx.add_argument("--out", required=True)
    p_fx.add_argument("--seed", type=int, default=42)
    p_fx.add_argument("--vre", type=int, default=6)
    p_fx.add_argument("--hydro", type=int, default=2)
    p_fx.add_argument("--years", type=int, default=30)
    p_fx.add_argument("--monthly-only", action="store_true")
    p_fx.set_defaults(func=cmd_make_fixture)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (ScenGenError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
