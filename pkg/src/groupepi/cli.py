"""Command-line pipeline: simulate, infer, evaluate, experiment.

Flags can also be supplied through ``GROUPEPI_``-prefixed environment
variables (for example ``GROUPEPI_SEED``); explicit flags win over the
environment, which wins over config-file values.  Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical or constraint error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import dataio
from .errors import ConfigError, ConstraintError, DataError, GroupEpiError
from .evaluate import (
    ExperimentResult,
    baseline_mean_auc,
    pooled_cells,
    roc_auc,
    roc_curve_points,
    run_experiment_1,
    run_experiment_2,
    summarize,
)
from .gibbs import InferenceConfig, run_inference
from .model import HealthStateMatrix
from .simulate import SimulationConfig, make_dataset

ENV_PREFIX = "GROUPEPI_"

DATASET_1 = {
    "population_size": 100,
    "num_families": 33,
    "horizon_days": 360,
    "tests_per_family": 360,
    "rng_seed": 0,
}
# Daily pooled testing on the smaller population.  The contact layer is
# a touch denser than the population-size default: rejection sampling
# for an established, persistent epidemic (see
# evaluate.current_status_scoreable) is then workable, while individual
# exposure histories stay varied enough to rank people apart.
DATASET_2 = {
    "population_size": 64,
    "num_families": 15,
    "horizon_days": 128,
    "tests_per_family": 128,
    "contact_edge_prob": 0.08,
    "rng_seed": 0,
}
EXP1_DEFAULT_MU = [1, 2, 3, 4, 5, 6, 12, 25, 52, 360]
EXP2_DEFAULT_EVAL_DAYS = list(range(16, 129, 8))


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _env_int(name: str) -> int | None:
    raw = _env(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment variable {ENV_PREFIX}{name}={raw!r} is not an integer")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupepi",
        description="Epidemics on contact networks with pooled family tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw a synthetic dataset")
    p_sim.add_argument("--config", type=Path, default=None, help="simulation config JSON (or a manifest)")
    p_sim.add_argument("--out", type=Path, default=None, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_inf = sub.add_parser("infer", help="recover infection marginals from a dataset directory")
    p_inf.add_argument("data_dir", type=Path, help="directory produced by simulate")
    p_inf.add_argument("--config", type=Path, default=None, help="inference config JSON (or a manifest)")
    p_inf.add_argument("--out", type=Path, default=None, help="output directory")
    p_inf.add_argument("--seed", type=int, default=None, help="override the chain seed")
    p_inf.set_defaults(func=cmd_infer)

    p_eval = sub.add_parser("evaluate", help="score marginals against the ground truth")
    p_eval.add_argument("data_dir", type=Path, help="directory holding states.csv and manifest.json")
    p_eval.add_argument("marginals", type=Path, help="marginals.csv from infer")
    p_eval.add_argument("--mode", type=str, default=None, help="pooled (default) or at-day=T")
    p_eval.add_argument("--out", type=Path, default=None, help="output directory")
    p_eval.set_defaults(func=cmd_evaluate)

    p_exp = sub.add_parser("experiment", help="run a full experiment")
    p_exp.add_argument("name", choices=("exp1", "exp2", "baseline"))
    p_exp.add_argument("--config", type=Path, default=None, help="experiment config JSON (or a manifest)")
    p_exp.add_argument("--out", type=Path, default=None, help="output directory")
    p_exp.add_argument("--seed", type=int, default=None, help="override the simulation seed")
    p_exp.add_argument("--replicates", type=int, default=None, help="override the replicate count")
    p_exp.add_argument("--threads", type=int, default=None, help="worker processes for replicates")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def _resolve_out(arg: Path | None) -> Path:
    raw = arg if arg is not None else (_env("OUT") and Path(_env("OUT")))
    if not raw:
        raise ConfigError("an output directory is required (--out or GROUPEPI_OUT)")
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_config_path(arg: Path | None) -> Path | None:
    if arg is not None:
        return arg
    raw = _env("CONFIG")
    return Path(raw) if raw else None


def _resolve_seed(arg: int | None, manifest_seed: int | None, config_seed: int) -> int:
    if arg is not None:
        return arg
    env = _env_int("SEED")
    if env is not None:
        return env
    if manifest_seed is not None:
        return manifest_seed
    return config_seed


def cmd_simulate(args: argparse.Namespace) -> int:
    out = _resolve_out(args.out)
    config_path = _resolve_config_path(args.config)
    payload: dict[str, Any] = {}
    manifest_seed: int | None = None
    if config_path is not None:
        payload, manifest_seed = dataio.load_config_payload(config_path)
    config = SimulationConfig.from_dict(payload) if payload else SimulationConfig(**DATASET_1)
    seed = _resolve_seed(args.seed, manifest_seed, config.rng_seed)
    config = replace(config, rng_seed=seed)

    dataset = make_dataset(config)
    files = {
        dataio.FAMILIES_CSV: lambda p: dataio.write_families(p, dataset.families),
        dataio.CONTACTS_CSV: lambda p: dataio.write_contacts(p, dataset.network),
        dataio.STATES_CSV: lambda p: dataio.write_states(p, dataset.states),
        dataio.OBSERVATIONS_CSV: lambda p: dataio.write_observations(p, dataset.observations),
        dataio.PARAMS_JSON: lambda p: dataio.write_params(p, dataset.params),
    }
    for name, writer in files.items():
        writer(out / name)
    dataio.write_manifest(
        out, "simulate", config.as_dict(), seed,
        output_files=[out / name for name in files],
    )
    print(f"simulate: wrote {len(files)} files + manifest to {out}")
    return 0


def _load_dataset_dims(data_dir: Path) -> tuple[int, int]:
    manifest = dataio.read_json(data_dir / dataio.MANIFEST_JSON)
    config = manifest.get("config")
    if not isinstance(config, dict):
        raise DataError(f"{data_dir / dataio.MANIFEST_JSON} holds no simulation config")
    try:
        return int(config["population_size"]), int(config["horizon_days"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{data_dir / dataio.MANIFEST_JSON} lacks dataset dimensions: {exc}") from exc


def cmd_infer(args: argparse.Namespace) -> int:
    out = _resolve_out(args.out)
    data_dir: Path = args.data_dir
    config_path = _resolve_config_path(args.config)
    payload, manifest_seed = ({}, None)
    if config_path is not None:
        payload, manifest_seed = dataio.load_config_payload(config_path)
    config = InferenceConfig.from_dict(payload) if payload else InferenceConfig()
    seed = _resolve_seed(args.seed, manifest_seed, config.rng_seed)
    config = replace(config, rng_seed=seed)

    # Only the observable inputs are read here; the ground-truth states
    # file plays no part in inference.
    num_individuals, horizon = _load_dataset_dims(data_dir)
    families = dataio.read_families(data_dir / dataio.FAMILIES_CSV)
    if families.num_individuals != num_individuals:
        raise DataError(
            f"families.csv covers {families.num_individuals} individuals, "
            f"manifest says {num_individuals}"
        )
    network = dataio.read_contacts(data_dir / dataio.CONTACTS_CSV, horizon, num_individuals)
    observations = dataio.read_observations(data_dir / dataio.OBSERVATIONS_CSV)

    estimate = run_inference(observations, network, families, config)
    dataio.write_marginals(out / dataio.MARGINALS_CSV, estimate.marginals)
    dataio.write_learned_params(out / dataio.LEARNED_PARAMS_JSON, estimate)
    dataio.write_trace(out / dataio.TRACE_CSV, estimate.diagnostics)
    dataio.write_manifest(
        out, "infer", config.as_dict(), seed,
        input_files=[
            data_dir / dataio.FAMILIES_CSV,
            data_dir / dataio.CONTACTS_CSV,
            data_dir / dataio.OBSERVATIONS_CSV,
        ],
        output_files=[
            out / dataio.MARGINALS_CSV,
            out / dataio.LEARNED_PARAMS_JSON,
            out / dataio.TRACE_CSV,
        ],
    )
    print(f"infer: wrote marginals for {num_individuals} individuals x {horizon + 1} days to {out}")
    return 0


def _parse_mode(raw: str | None) -> tuple[str, int | None]:
    value = raw if raw is not None else (_env("MODE") or "pooled")
    if value == "pooled":
        return "pooled", None
    if value.startswith("at-day="):
        try:
            return "at_day", int(value.split("=", 1)[1])
        except ValueError:
            raise ConfigError(f"malformed --mode value {value!r}")
    raise ConfigError(f"--mode must be 'pooled' or 'at-day=T', got {value!r}")


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = _resolve_out(args.out)
    mode, day = _parse_mode(args.mode)
    num_individuals, horizon = _load_dataset_dims(args.data_dir)
    truth = dataio.read_states(args.data_dir / dataio.STATES_CSV, num_individuals, horizon)
    marginals = dataio.read_marginals(args.marginals)

    if mode == "pooled":
        if marginals.shape != truth.states.shape:
            raise DataError(
                f"marginals shape {marginals.shape} does not match ground truth "
                f"{truth.states.shape}"
            )
        scores, labels = pooled_cells(marginals, truth)
    else:
        assert day is not None
        if not 0 <= day < marginals.shape[0]:
            raise DataError(f"evaluation day {day} outside the marginals horizon")
        if day > truth.horizon:
            raise DataError(f"evaluation day {day} outside the ground-truth horizon")
        scores = marginals[day]
        labels = truth.states[day].astype(np.int64)

    auc = roc_auc(scores, labels)
    thresholds, fpr, tpr = roc_curve_points(scores, labels)
    metrics = {
        "auc": float(auc),
        "num_positives": int(labels.sum()),
        "num_negatives": int(labels.size - labels.sum()),
        "mode": mode,
        "day": day,
    }
    dataio.write_metrics(out / dataio.METRICS_JSON, metrics)
    dataio.write_roc_points(out / dataio.ROC_POINTS_CSV, thresholds, fpr, tpr)
    dataio.write_manifest(
        out, "evaluate",
        {"mode": mode, "day": day}, 0,
        input_files=[args.data_dir / dataio.STATES_CSV, args.marginals],
        output_files=[out / dataio.METRICS_JSON, out / dataio.ROC_POINTS_CSV],
    )
    print(f"evaluate: auc={auc:.4f} ({metrics['num_positives']} positives) -> {out}")
    return 0


def _experiment_config(name: str, payload: dict[str, Any]) -> dict[str, Any]:
    if name == "exp1":
        defaults: dict[str, Any] = {
            "simulation": dict(DATASET_1),
            "inference": {},
            "mu_values": list(EXP1_DEFAULT_MU),
            "replicates": 3,
        }
    elif name == "exp2":
        defaults = {
            "simulation": dict(DATASET_2),
            "inference": {},
            "eval_days": list(EXP2_DEFAULT_EVAL_DAYS),
            "replicates": 5,
        }
    else:
        defaults = {"datasets": [dict(DATASET_1), dict(DATASET_2)]}
    allowed = set(defaults) | {"experiment"}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown {name} config keys: {sorted(unknown)}")
    merged = {**defaults, **{k: v for k, v in payload.items() if k != "experiment"}}
    declared = payload.get("experiment")
    if declared is not None and declared != name:
        raise ConfigError(f"config declares experiment {declared!r} but {name!r} was requested")
    return merged


def cmd_experiment(args: argparse.Namespace) -> int:
    out = _resolve_out(args.out)
    config_path = _resolve_config_path(args.config)
    payload, manifest_seed = ({}, None)
    if config_path is not None:
        payload, manifest_seed = dataio.load_config_payload(config_path)
        if "config" not in payload and payload.get("experiment") not in (None, args.name):
            raise ConfigError("config file belongs to a different experiment")
    merged = _experiment_config(args.name, payload)
    threads = args.threads if args.threads is not None else (_env_int("THREADS") or 1)
    replicates_override = (
        args.replicates if args.replicates is not None else _env_int("REPLICATES")
    )

    results: list[ExperimentResult] = []
    results_path = out / dataio.RESULTS_CSV

    def flush() -> None:
        dataio.write_results(results_path, results)

    try:
        if args.name == "baseline":
            sim_payloads = merged["datasets"]
            if not isinstance(sim_payloads, list) or not sim_payloads:
                raise ConfigError("baseline config needs a non-empty 'datasets' list")
            for idx, sim_payload in enumerate(sim_payloads):
                sim_config = SimulationConfig.from_dict(sim_payload)
                seed = _resolve_seed(args.seed, manifest_seed, sim_config.rng_seed)
                sim_config = replace(sim_config, rng_seed=seed)
                results.append(_baseline_result(sim_config, idx))
                flush()
            resolved: dict[str, Any] = {
                "experiment": "baseline",
                "datasets": [SimulationConfig.from_dict(p).as_dict() for p in sim_payloads],
            }
            root_seed = results[0].seed if results else 0
        else:
            sim_config = SimulationConfig.from_dict(merged["simulation"])
            infer_config = InferenceConfig.from_dict(merged["inference"])
            replicates = (
                int(replicates_override)
                if replicates_override is not None
                else int(merged["replicates"])
            )
            if replicates < 1:
                raise ConfigError("replicates must be >= 1")
            seed = _resolve_seed(args.seed, manifest_seed, sim_config.rng_seed)
            sim_config = replace(sim_config, rng_seed=seed)
            root_seed = seed
            if args.name == "exp1":
                series = [int(m) for m in merged["mu_values"]]
                resolved = {
                    "experiment": "exp1",
                    "simulation": sim_config.as_dict(),
                    "inference": infer_config.as_dict(),
                    "mu_values": series,
                    "replicates": replicates,
                }
                for mu in series:
                    results.extend(run_experiment_1(
                        sim_config, infer_config, [mu], replicates, threads=threads,
                    ))
                    flush()
            else:
                series = [int(d) for d in merged["eval_days"]]
                for day in series:
                    if not 1 <= day <= sim_config.horizon_days:
                        raise ConfigError(
                            f"eval day {day} outside [1, {sim_config.horizon_days}]"
                        )
                resolved = {
                    "experiment": "exp2",
                    "simulation": sim_config.as_dict(),
                    "inference": infer_config.as_dict(),
                    "eval_days": series,
                    "replicates": replicates,
                }
                dataset_seeds = _exp2_dataset_seeds(sim_config, replicates)
                for day in series:
                    results.extend(_exp2_for_day(
                        sim_config, infer_config, dataset_seeds, day, replicates, threads,
                    ))
                    flush()
    except GroupEpiError:
        flush()
        raise

    flush()
    dataio.write_json(out / dataio.SUMMARY_JSON, summarize(results))
    dataio.write_manifest(
        out, f"experiment:{args.name}", resolved, root_seed,
        output_files=[results_path, out / dataio.SUMMARY_JSON],
    )
    print(f"experiment {args.name}: {len(results)} result rows -> {out}")
    return 0


def _exp2_dataset_seeds(sim_config, replicates):
    # Accepted once per replicate; every eval day then shares that
    # replicate's ground truth.
    from .evaluate import _dataset_for_replicate, current_status_scoreable

    return [
        _dataset_for_replicate(sim_config, r, current_status_scoreable)[1]
        for r in range(replicates)
    ]


def _exp2_for_day(sim_config, infer_config, dataset_seeds, day, replicates, threads):
    from .evaluate import _run_experiment_2_unit, _map_units

    units = [
        (sim_config, infer_config, dataset_seeds[r], int(day), r)
        for r in range(replicates)
    ]
    return _map_units(_run_experiment_2_unit, units, threads)


def _baseline_result(sim_config: SimulationConfig, replicate: int) -> ExperimentResult:
    from .evaluate import _dataset_for_replicate

    dataset, dataset_seed = _dataset_for_replicate(sim_config, replicate, None)
    auc = baseline_mean_auc(
        dataset.states, dataset.network, dataset.families, dataset_seed,
    )
    labels = dataset.states.states.ravel()
    return ExperimentResult(
        experiment="baseline",
        mu=None,
        eval_day=None,
        replicate=replicate,
        auc=float(auc),
        num_positives=int(labels.sum()),
        num_negatives=int(labels.size - labels.sum()),
        seed=dataset_seed,
        learned_params=None,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConstraintError as exc:
        print(f"constraint error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except GroupEpiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
