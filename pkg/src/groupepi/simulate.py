"""Synthetic population, contact network, epidemic and group-test generators.

A dataset draws, in order: a family partition, day-by-day contact graphs
over non-family pairs, ground-truth rates, a forward-sampled epidemic
starting from an all-healthy population, and pooled per-family test
results on a random subset of days.  Each stage consumes its own derived
random stream, so a single root seed pins the whole dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np

from . import seeds
from .errors import ConfigError, ConstraintError
from .model import (
    PROB_CAP,
    FamilyPartition,
    HealthStateMatrix,
    ModelParameters,
    ObservationSet,
    OriginMatrix,
    TemporalContactNetwork,
    emission_positive_prob,
    family_infection_totals,
)

MAX_FAMILY_SIZE = 5
PARAM_REJECTION_BUDGET = 10_000


def default_contact_edge_prob(population_size: int) -> float:
    """Denser default for small populations, sparser for large ones."""
    return 0.05 if population_size <= 64 else 0.03


@dataclass(frozen=True)
class SimulationConfig:
    """Shape and parameter ranges of one synthetic dataset.

    ``tests_per_family`` counts distinct test days per family, drawn
    without replacement from days ``0..horizon_days - 1``; the special
    value ``horizon_days + 1`` schedules every day including the final
    one.  ``contact_edge_prob`` of None resolves to a population-size
    dependent default.
    """

    population_size: int
    num_families: int
    horizon_days: int
    tests_per_family: int
    contact_edge_prob: float | None = None
    rate_upper: float = 0.005
    theta0_range: tuple[float, float] = (0.01, 0.03)
    theta1_range: tuple[float, float] = (0.8, 1.0)
    gamma_range: tuple[float, float] = (0.1, 0.5)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        i, f, t = self.population_size, self.num_families, self.horizon_days
        if i < 1 or f < 1 or t < 1:
            raise ConfigError("population_size, num_families and horizon_days must be positive")
        if not f <= i <= MAX_FAMILY_SIZE * f:
            raise ConfigError(
                f"population_size={i} not coverable by {f} families of size 1..{MAX_FAMILY_SIZE}"
            )
        if not 1 <= self.tests_per_family <= t + 1:
            raise ConfigError(f"tests_per_family={self.tests_per_family} outside [1, {t + 1}]")
        if self.contact_edge_prob is not None and not 0.0 <= self.contact_edge_prob <= 1.0:
            raise ConfigError(f"contact_edge_prob={self.contact_edge_prob} outside [0, 1]")
        if not 0.0 < self.rate_upper < 1.0:
            raise ConfigError(f"rate_upper={self.rate_upper} outside (0, 1)")
        for name in ("theta0_range", "theta1_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi <= 1.0:
                raise ConfigError(f"{name}=({lo}, {hi}) is not an ordered range inside (0, 1]")
        if not self.theta0_range[1] < self.theta1_range[0]:
            raise ConfigError("theta0_range must lie strictly below theta1_range")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be non-negative")

    @property
    def edge_prob(self) -> float:
        if self.contact_edge_prob is not None:
            return self.contact_edge_prob
        return default_contact_edge_prob(self.population_size)

    def as_dict(self) -> dict[str, Any]:
        return {
            "population_size": self.population_size,
            "num_families": self.num_families,
            "horizon_days": self.horizon_days,
            "tests_per_family": self.tests_per_family,
            "contact_edge_prob": self.contact_edge_prob,
            "rate_upper": self.rate_upper,
            "theta0_range": list(self.theta0_range),
            "theta1_range": list(self.theta1_range),
            "gamma_range": list(self.gamma_range),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "SimulationConfig":
        known = {
            "population_size", "num_families", "horizon_days", "tests_per_family",
            "contact_edge_prob", "rate_upper", "theta0_range", "theta1_range",
            "gamma_range", "rng_seed",
        }
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown simulation config keys: {sorted(unknown)}")
        for key in ("population_size", "num_families", "horizon_days", "tests_per_family"):
            if key not in values:
                raise ConfigError(f"missing simulation config key {key!r}")
        kwargs: dict[str, Any] = {}
        try:
            for key in ("population_size", "num_families", "horizon_days", "tests_per_family"):
                kwargs[key] = int(values[key])
            if values.get("contact_edge_prob") is not None:
                kwargs["contact_edge_prob"] = float(values["contact_edge_prob"])
            if "rate_upper" in values:
                kwargs["rate_upper"] = float(values["rate_upper"])
            for key in ("theta0_range", "theta1_range", "gamma_range"):
                if key in values:
                    lo, hi = values[key]
                    kwargs[key] = (float(lo), float(hi))
            if "rng_seed" in values:
                kwargs["rng_seed"] = int(values["rng_seed"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed simulation config value: {exc}") from exc
        return cls(**kwargs)


def generate_families(config: SimulationConfig, rng: np.random.Generator) -> FamilyPartition:
    """Draw family sizes uniformly in 1..5, repair them to cover the
    population exactly, then assign shuffled individuals."""
    sizes = rng.integers(1, MAX_FAMILY_SIZE + 1, size=config.num_families)
    # Repair: trim the currently largest family or grow the smallest one
    # until the sizes sum to the population.
    while sizes.sum() > config.population_size:
        sizes[np.argmax(sizes)] -= 1
    while sizes.sum() < config.population_size:
        sizes[np.argmin(sizes)] += 1
    if sizes.min() < 1 or sizes.max() > MAX_FAMILY_SIZE:
        raise ConstraintError("family size repair left the 1..5 range")
    order = rng.permutation(config.population_size)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    groups = [order[bounds[f]:bounds[f + 1]] for f in range(config.num_families)]
    return FamilyPartition(groups)


def generate_network(
    config: SimulationConfig,
    families: FamilyPartition,
    rng: np.random.Generator,
) -> TemporalContactNetwork:
    """Independent per-day Erdos-Renyi graphs over the non-family pairs."""
    n = config.population_size
    same_family = families.family_of[:, None] == families.family_of[None, :]
    allowed = ~same_family
    np.fill_diagonal(allowed, False)
    allowed_upper = np.triu(allowed, 1)
    adj = np.zeros((config.horizon_days, n, n), dtype=bool)
    p = config.edge_prob
    for t in range(config.horizon_days):
        upper = (rng.random((n, n)) < p) & allowed_upper
        adj[t] = upper | upper.T
    return TemporalContactNetwork(adj)


def sample_ground_truth_parameters(
    config: SimulationConfig,
    rng: np.random.Generator,
) -> ModelParameters:
    """Uniform draws inside the configured ranges, with the three infection
    rates rejection-sampled until they come out strictly ordered."""
    for _ in range(PARAM_REJECTION_BUDGET):
        a, b, bf = rng.uniform(0.0, config.rate_upper, size=3)
        if 0.0 < a < b < bf:
            break
    else:
        raise ConstraintError("could not draw ordered infection rates")
    theta0 = float(rng.uniform(*config.theta0_range))
    theta1 = float(rng.uniform(*config.theta1_range))
    gamma = float(rng.uniform(*config.gamma_range))
    return ModelParameters(
        alpha=float(a), beta=float(b), beta_f=float(bf),
        gamma=gamma, theta0=theta0, theta1=theta1,
    )


def forward_sample_states(
    network: TemporalContactNetwork,
    families: FamilyPartition,
    params: ModelParameters,
    rng: np.random.Generator,
    track_origins: bool = False,
) -> HealthStateMatrix | tuple[HealthStateMatrix, OriginMatrix]:
    """Forward-sample an epidemic from an all-healthy population.

    Every step consumes one uniform per individual for the state update
    and one for the origin attribution, whether origins are recorded or
    not, so the sampled trajectory does not depend on ``track_origins``.
    """
    horizon = network.num_steps
    n = network.num_individuals
    if families.num_individuals != n:
        raise ConstraintError("family partition and network disagree on population size")
    states = np.zeros((horizon + 1, n), dtype=np.int8)
    origins = np.zeros((horizon, n), dtype=np.int8)
    family_of = families.family_of
    for t in range(horizon):
        x = states[t].astype(np.int64)
        u_state = rng.random(n)
        u_origin = rng.random(n)
        contacts = network.adjacency[t] @ x
        totals = np.bincount(family_of, weights=x, minlength=families.num_families)
        family_excl = totals[family_of] - x
        w_outside = np.full(n, params.alpha)
        w_family = params.beta_f * family_excl
        w_contact = params.beta * contacts
        p_infect = np.minimum(w_outside + w_family + w_contact, PROB_CAP)
        nxt = np.where(x == 1, (u_state >= params.gamma), (u_state < p_infect))
        states[t + 1] = nxt.astype(np.int8)
        new_infection = (x == 0) & (states[t + 1] == 1)
        if new_infection.any():
            r = u_origin * (w_outside + w_family + w_contact)
            label = 1 + (r >= w_outside).astype(np.int8) + (r >= w_outside + w_family).astype(np.int8)
            origins[t][new_infection] = label[new_infection]
    result = HealthStateMatrix(states)
    if track_origins:
        return result, OriginMatrix(origins)
    return result


def simulate_epidemic(
    network: TemporalContactNetwork,
    families: FamilyPartition,
    params: ModelParameters,
    rng: np.random.Generator,
) -> HealthStateMatrix:
    out = forward_sample_states(network, families, params, rng, track_origins=False)
    assert isinstance(out, HealthStateMatrix)
    return out


def schedule_and_sample_tests(
    states: HealthStateMatrix,
    families: FamilyPartition,
    params: ModelParameters,
    tests_per_family: int,
    rng: np.random.Generator,
) -> ObservationSet:
    """Draw each family's test days without replacement, then sample
    pooled results from the true infected counts on those days."""
    horizon = states.horizon
    if not 1 <= tests_per_family <= horizon + 1:
        raise ConstraintError(f"tests_per_family={tests_per_family} outside [1, {horizon + 1}]")
    totals = family_infection_totals(states.states, families)
    results: dict[tuple[int, int], int] = {}
    for f in range(families.num_families):
        if tests_per_family == horizon + 1:
            days = np.arange(horizon + 1)
        else:
            days = np.sort(rng.choice(horizon, size=tests_per_family, replace=False))
        size = int(families.sizes[f])
        for t in days.tolist():
            p_pos = emission_positive_prob(size, int(totals[t, f]), params)
            results[(f, t)] = int(rng.random() < p_pos)
    return ObservationSet(results)


@dataclass
class Dataset:
    """One fully drawn synthetic dataset plus its generating config."""

    config: SimulationConfig
    families: FamilyPartition
    network: TemporalContactNetwork
    params: ModelParameters
    states: HealthStateMatrix
    observations: ObservationSet
    origins: OriginMatrix


def make_dataset(config: SimulationConfig) -> Dataset:
    """Draw a dataset with per-stage streams derived from the config seed."""
    root = config.rng_seed
    families = generate_families(config, seeds.generator(root, seeds.FAMILIES))
    network = generate_network(config, families, seeds.generator(root, seeds.NETWORK))
    params = sample_ground_truth_parameters(config, seeds.generator(root, seeds.PARAMS))
    states, origins = forward_sample_states(
        network, families, params, seeds.generator(root, seeds.EPIDEMIC), track_origins=True
    )
    observations = schedule_and_sample_tests(
        states, families, params, config.tests_per_family, seeds.generator(root, seeds.TESTS)
    )
    return Dataset(config, families, network, params, states, observations, origins)


def with_seed(config: SimulationConfig, rng_seed: int) -> SimulationConfig:
    return replace(config, rng_seed=rng_seed)
