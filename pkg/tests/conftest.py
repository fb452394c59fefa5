"""Shared fixtures: small hand-built instances and random instance draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from groupepi.model import (
    FamilyPartition,
    HealthStateMatrix,
    ModelParameters,
    ObservationSet,
    TemporalContactNetwork,
)


@dataclass
class Instance:
    """A complete joint-model instance small enough to enumerate."""

    network: TemporalContactNetwork
    families: FamilyPartition
    observations: ObservationSet
    params: ModelParameters

    @property
    def family_of(self) -> list[int]:
        return self.families.family_of.tolist()

    @property
    def adjacency(self) -> np.ndarray:
        return self.network.adjacency

    @property
    def obs_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.observations.results)

    @property
    def params_dict(self) -> dict[str, float]:
        return self.params.as_dict()


@pytest.fixture
def mild_params() -> ModelParameters:
    """Rates large enough that tiny posteriors are far from degenerate."""
    return ModelParameters(alpha=0.05, beta=0.10, beta_f=0.15,
                           gamma=0.20, theta0=0.05, theta1=0.90)


@pytest.fixture
def small_rate_params() -> ModelParameters:
    """Rates within the simulation draw ranges."""
    return ModelParameters(alpha=0.002, beta=0.003, beta_f=0.005,
                           gamma=0.15, theta0=0.02, theta1=0.90)


def three_person_instance(params: ModelParameters) -> Instance:
    """Three singleton families over two steps, individually tested.

    Individuals 0 and 2 meet on day 0; on day 1 individual 2 meets both
    others.  Everyone is tested on days 0 and 1, individual 0 also on day
    2, and only individual 0's day-1 test is positive.  Six free cells.
    """
    network = TemporalContactNetwork.from_edges(
        num_steps=2, num_individuals=3,
        edges=[(0, 0, 2), (1, 0, 2), (1, 1, 2)],
    )
    families = FamilyPartition([[0], [1], [2]])
    observations = ObservationSet({
        (0, 0): 0, (1, 0): 0, (2, 0): 0,
        (0, 1): 1, (1, 1): 0, (2, 1): 0,
        (0, 2): 0,
    })
    return Instance(network, families, observations, params)


@pytest.fixture
def appendix_instance(mild_params: ModelParameters) -> Instance:
    return three_person_instance(mild_params)


def random_instance(
    rng: np.random.Generator,
    num_individuals: int = 4,
    horizon: int = 3,
    edge_prob: float = 0.4,
    test_prob: float = 0.6,
) -> Instance:
    """Draw a random small instance with random parameters and tests."""
    sizes: list[list[int]] = []
    i = 0
    while i < num_individuals:
        take = min(int(rng.integers(1, 4)), num_individuals - i)
        sizes.append(list(range(i, i + take)))
        i += take
    families = FamilyPartition(sizes)
    same = families.family_of[:, None] == families.family_of[None, :]
    adj = rng.random((horizon, num_individuals, num_individuals)) < edge_prob
    adj &= ~same[None, :, :]
    adj = np.triu(adj, 1) | np.triu(adj, 1).transpose(0, 2, 1)
    network = TemporalContactNetwork(adj)

    raw = np.sort(rng.uniform(0.01, 0.4, size=3))
    params = ModelParameters(
        alpha=float(raw[0]), beta=float(raw[1]), beta_f=float(raw[2]),
        gamma=float(rng.uniform(0.05, 0.6)),
        theta0=float(rng.uniform(0.01, 0.2)),
        theta1=float(rng.uniform(0.6, 0.99)),
    )
    results: dict[tuple[int, int], int] = {}
    for f in range(families.num_families):
        for t in range(horizon + 1):
            if rng.random() < test_prob:
                results[(f, t)] = int(rng.random() < 0.3)
    return Instance(network, families, ObservationSet(results), params)


def random_states(rng: np.random.Generator, instance: Instance) -> HealthStateMatrix:
    """Random 0/1 fill with the pinned all-healthy first row."""
    shape = (instance.network.num_steps + 1, instance.network.num_individuals)
    arr = (rng.random(shape) < 0.5).astype(np.int8)
    arr[0] = 0
    return HealthStateMatrix(arr)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
