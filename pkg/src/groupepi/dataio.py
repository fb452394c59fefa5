"""Readers and writers for the on-disk dataset and result formats.

All CSV files are written with fixed column orders, ``\n`` newlines and
shortest round-tripping float representations, so identical inputs
produce byte-identical files.  Every command run is described by exactly
one ``manifest.json`` holding the resolved config, the seed, and a
checksum per output file; feeding a manifest back in as the config
replays the run.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ConstraintError, DataError
from .evaluate import ExperimentResult
from .gibbs import OuterIterationRecord, PosteriorEstimate
from .model import (
    PARAM_NAMES,
    FamilyPartition,
    HealthStateMatrix,
    ModelParameters,
    ObservationSet,
    TemporalContactNetwork,
)

FAMILIES_CSV = "families.csv"
CONTACTS_CSV = "contacts.csv"
STATES_CSV = "states.csv"
OBSERVATIONS_CSV = "observations.csv"
PARAMS_JSON = "params.json"
MANIFEST_JSON = "manifest.json"
MARGINALS_CSV = "marginals.csv"
LEARNED_PARAMS_JSON = "learned_params.json"
TRACE_CSV = "trace.csv"
METRICS_JSON = "metrics.json"
ROC_POINTS_CSV = "roc_points.csv"
RESULTS_CSV = "results.csv"
SUMMARY_JSON = "summary.json"


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_csv(path: Path, expected_header: Sequence[str]) -> list[list[str]]:
    if not path.exists():
        raise DataError(f"missing input file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if header != list(expected_header):
            raise DataError(f"{path} has header {header}, expected {list(expected_header)}")
        rows = list(reader)
    for row in rows:
        if len(row) != len(expected_header):
            raise DataError(f"{path} has a malformed row: {row}")
    return rows


def write_json(path: Path, payload: Mapping[str, Any]) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise DataError(f"missing input file {path}")
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path} must hold a JSON object")
    return payload


def write_families(path: Path, families: FamilyPartition) -> None:
    rows = [(f, i) for f in range(families.num_families) for i in families.members_of(f).tolist()]
    _write_csv(path, ("f", "i"), rows)


def read_families(path: Path) -> FamilyPartition:
    rows = _read_csv(path, ("f", "i"))
    groups: dict[int, list[int]] = {}
    try:
        for f_str, i_str in rows:
            groups.setdefault(int(f_str), []).append(int(i_str))
    except ValueError as exc:
        raise DataError(f"{path} has a non-integer entry: {exc}") from exc
    if not groups:
        raise DataError(f"{path} lists no families")
    if sorted(groups) != list(range(len(groups))):
        raise DataError(f"{path} family ids must be 0..F-1")
    try:
        return FamilyPartition([groups[f] for f in range(len(groups))])
    except ConstraintError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_contacts(path: Path, network: TemporalContactNetwork) -> None:
    _write_csv(path, ("t", "i", "j"), list(network.edges()))


def read_contacts(path: Path, num_steps: int, num_individuals: int) -> TemporalContactNetwork:
    rows = _read_csv(path, ("t", "i", "j"))
    try:
        edges = [(int(t), int(i), int(j)) for t, i, j in rows]
    except ValueError as exc:
        raise DataError(f"{path} has a non-integer entry: {exc}") from exc
    for t, i, j in edges:
        if not i < j:
            raise DataError(f"{path} rows must satisfy i < j, got ({t}, {i}, {j})")
    try:
        return TemporalContactNetwork.from_edges(num_steps, num_individuals, edges)
    except ConstraintError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_states(path: Path, states: HealthStateMatrix) -> None:
    arr = states.states
    rows = [
        (i, t, int(arr[t, i]))
        for i in range(states.num_individuals)
        for t in range(states.horizon + 1)
    ]
    _write_csv(path, ("i", "t", "x"), rows)


def read_states(path: Path, num_individuals: int, horizon: int) -> HealthStateMatrix:
    rows = _read_csv(path, ("i", "t", "x"))
    arr = np.full((horizon + 1, num_individuals), -1, dtype=np.int8)
    try:
        for i_str, t_str, x_str in rows:
            arr[int(t_str), int(i_str)] = int(x_str)
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path} has an out-of-range or malformed row: {exc}") from exc
    if (arr < 0).any():
        raise DataError(f"{path} does not cover every (i, t) cell")
    return HealthStateMatrix(arr)


def write_observations(path: Path, observations: ObservationSet) -> None:
    rows = [(f, t, y) for (f, t), y in observations.items()]
    _write_csv(path, ("f", "t", "result"), rows)


def read_observations(path: Path) -> ObservationSet:
    rows = _read_csv(path, ("f", "t", "result"))
    try:
        results = {(int(f), int(t)): int(y) for f, t, y in rows}
    except ValueError as exc:
        raise DataError(f"{path} has a non-integer entry: {exc}") from exc
    if len(results) != len(rows):
        raise DataError(f"{path} repeats a (family, day) test")
    try:
        return ObservationSet(results)
    except ConstraintError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_params(path: Path, params: ModelParameters) -> None:
    write_json(path, params.as_dict())


def read_params(path: Path) -> ModelParameters:
    payload = read_json(path)
    missing = [name for name in PARAM_NAMES if name not in payload]
    if missing:
        raise DataError(f"{path} is missing parameters {missing}")
    try:
        return ModelParameters.from_dict(payload)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_marginals(path: Path, marginals: np.ndarray) -> None:
    horizon_plus, n = marginals.shape
    rows = [
        (i, t, float(marginals[t, i]))
        for i in range(n)
        for t in range(horizon_plus)
    ]
    _write_csv(path, ("i", "t", "probability"), rows)


def read_marginals(path: Path) -> np.ndarray:
    rows = _read_csv(path, ("i", "t", "probability"))
    try:
        triples = [(int(i), int(t), float(p)) for i, t, p in rows]
    except ValueError as exc:
        raise DataError(f"{path} has a malformed row: {exc}") from exc
    if not triples:
        raise DataError(f"{path} holds no cells")
    n = max(i for i, _, _ in triples) + 1
    horizon_plus = max(t for _, t, _ in triples) + 1
    out = np.full((horizon_plus, n), np.nan)
    for i, t, p in triples:
        out[t, i] = p
    if np.isnan(out).any():
        raise DataError(f"{path} does not cover every (i, t) cell")
    if ((out < 0) | (out > 1)).any():
        raise DataError(f"{path} holds probabilities outside [0, 1]")
    return out


def write_trace(path: Path, diagnostics: Sequence[OuterIterationRecord]) -> None:
    header = ["iteration", *PARAM_NAMES, "flip_fraction", "sweeps"]
    count_keys: list[str] = []
    for name in PARAM_NAMES:
        count_keys += [f"n_{name}", f"hits_{name}"]
    header += count_keys
    rows = []
    for rec in diagnostics:
        row: list[Any] = [rec.iteration]
        row += [getattr(rec.params, name) for name in PARAM_NAMES]
        row += [rec.flip_fraction, rec.sweeps]
        counts = rec.counts.as_dict()
        row += [counts[k] for k in count_keys]
        rows.append(row)
    _write_csv(path, header, rows)


def write_metrics(path: Path, metrics: Mapping[str, Any]) -> None:
    write_json(path, metrics)


def write_roc_points(path: Path, thresholds: np.ndarray, fpr: np.ndarray, tpr: np.ndarray) -> None:
    rows = list(zip(
        (float(v) for v in fpr),
        (float(v) for v in tpr),
        (float(v) for v in thresholds),
    ))
    _write_csv(path, ("fpr", "tpr", "threshold"), rows)


RESULT_COLUMNS = (
    "experiment", "mu", "eval_day", "replicate", "auc",
    "num_positives", "num_negatives", "seed",
    "alpha", "beta", "beta_f", "gamma", "theta0", "theta1",
)


def write_results(path: Path, results: Sequence[ExperimentResult]) -> None:
    rows = []
    for result in results:
        row = result.as_row()
        rows.append([row[c] for c in RESULT_COLUMNS])
    _write_csv(path, RESULT_COLUMNS, rows)


def read_results(path: Path) -> list[dict[str, str]]:
    rows = _read_csv(path, RESULT_COLUMNS)
    return [dict(zip(RESULT_COLUMNS, row)) for row in rows]


def write_learned_params(path: Path, estimate: PosteriorEstimate) -> None:
    write_json(path, estimate.learned_params.as_dict())


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class Manifest:
    command: str
    config: dict[str, Any]
    seed: int
    inputs: dict[str, str]
    outputs: dict[str, str]
    created_at: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "created_at": self.created_at,
        }


def write_manifest(
    out_dir: Path,
    command: str,
    config: Mapping[str, Any],
    seed: int,
    input_files: Sequence[Path] = (),
    output_files: Sequence[Path] = (),
) -> Manifest:
    manifest = Manifest(
        command=command,
        config=dict(config),
        seed=int(seed),
        inputs={p.name: sha256_file(p) for p in input_files},
        outputs={p.name: sha256_file(p) for p in output_files},
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    write_json(out_dir / MANIFEST_JSON, manifest.as_dict())
    return manifest


def load_config_payload(path: Path) -> tuple[dict[str, Any], int | None]:
    """Load a config file, unwrapping a manifest when one is supplied.

    Returns the config mapping and, for manifests, the recorded seed.
    """
    payload = read_json(path)
    if "command" in payload and "config" in payload:
        config = payload["config"]
        if not isinstance(config, dict):
            raise ConfigError(f"{path} manifest holds a malformed config")
        seed = payload.get("seed")
        return config, (int(seed) if seed is not None else None)
    return payload, None
