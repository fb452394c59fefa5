"""Core domain types and probability kernels.

The model tracks a binary infection status for every individual on a
discrete time grid.  Individuals belong to static families and meet
non-family contacts on a day-by-day contact network.  A susceptible
individual is infected from outside the population, by an infected
non-family contact, or by an infected family member; an infected
individual recovers at a constant rate and becomes susceptible again.
Observations are pooled per-family test results: the probability that a
family tests positive interpolates linearly between the false-positive
and detection rates with the infected fraction of the family.

Everything downstream (simulator, Gibbs sampler, evaluation) is built on
the three kernels defined here: ``emission_positive_prob``,
``infection_prob`` and ``transition_prob``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConstraintError

# Upper clamp for the linearized infection probability.  The additive form
# can reach 1 for large infected-contact counts, which would make the
# susceptible row of the transition matrix degenerate.
PROB_CAP = 1.0 - 1e-9

PARAM_NAMES = ("alpha", "beta", "beta_f", "gamma", "theta0", "theta1")

# Infection origin labels.
ORIGIN_NONE = 0      # no new infection at this cell
ORIGIN_OUTSIDE = 1   # infected from outside the population
ORIGIN_FAMILY = 2    # infected by a family member
ORIGIN_CONTACT = 3   # infected by a non-family contact


@dataclass(frozen=True)
class ModelParameters:
    """Per-step rates of the infection and testing model.

    ``alpha``, ``beta`` and ``beta_f`` are the per-step infection
    probabilities from outside the population, per infected non-family
    contact, and per infected family member.  ``gamma`` is the per-step
    recovery probability.  ``theta0`` and ``theta1`` are the probabilities
    that a pooled family test comes back positive for a healthy and for an
    infected member.
    """

    alpha: float
    beta: float
    beta_f: float
    gamma: float
    theta0: float
    theta1: float

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConstraintError(f"parameter {name}={value!r} must lie in (0, 1)")
        if not self.alpha < self.beta < self.beta_f:
            raise ConstraintError(
                "rate ordering alpha < beta < beta_f violated: "
                f"alpha={self.alpha}, beta={self.beta}, beta_f={self.beta_f}"
            )
        if not self.theta0 < self.theta1:
            raise ConstraintError(
                f"test ordering theta0 < theta1 violated: theta0={self.theta0}, theta1={self.theta1}"
            )

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, values: Mapping[str, float]) -> "ModelParameters":
        return cls(**{name: float(values[name]) for name in PARAM_NAMES})

    def max_abs_difference(self, other: "ModelParameters") -> float:
        return max(abs(getattr(self, n) - getattr(other, n)) for n in PARAM_NAMES)


@dataclass(frozen=True)
class BetaPair:
    """Shape parameters (a, b) of one Beta prior/posterior."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ConstraintError(f"Beta shapes must be positive, got a={self.a}, b={self.b}")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


@dataclass(frozen=True)
class HyperParameters:
    """One Beta prior per model parameter."""

    alpha: BetaPair
    beta: BetaPair
    beta_f: BetaPair
    gamma: BetaPair
    theta0: BetaPair
    theta1: BetaPair

    def pair(self, name: str) -> BetaPair:
        if name not in PARAM_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def as_dict(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for name in PARAM_NAMES:
            pair = self.pair(name)
            out[f"a_{name}"] = float(pair.a)
            out[f"b_{name}"] = float(pair.b)
        return out

    @classmethod
    def from_dict(cls, values: Mapping[str, float]) -> "HyperParameters":
        return cls(**{
            name: BetaPair(float(values[f"a_{name}"]), float(values[f"b_{name}"]))
            for name in PARAM_NAMES
        })


class FamilyPartition:
    """Disjoint grouping of individuals ``0..I-1`` into families.

    Families are static over the whole horizon.  Membership is exposed
    both as per-family member arrays and as a flat ``family_of`` lookup.
    """

    def __init__(self, families: Sequence[Iterable[int]]):
        groups = [np.array(sorted(int(m) for m in fam), dtype=np.int64) for fam in families]
        if not groups:
            raise ConstraintError("a partition needs at least one family")
        for g in groups:
            if g.size == 0:
                raise ConstraintError("families must be non-empty")
        flat = np.concatenate(groups)
        n = flat.size
        covered = np.unique(flat)
        if covered.size != n or covered[0] != 0 or covered[-1] != n - 1:
            raise ConstraintError("families must partition individuals 0..I-1 exactly once")
        self._groups = groups
        self.family_of = np.empty(n, dtype=np.int64)
        for f, g in enumerate(groups):
            self.family_of[g] = f
        self.sizes = np.array([g.size for g in groups], dtype=np.int64)
        # CSR-style member layout, used by the sampling kernel.
        self.members = np.concatenate(groups)
        self.indptr = np.concatenate(([0], np.cumsum(self.sizes)))
        self._indicator: np.ndarray | None = None

    @property
    def num_individuals(self) -> int:
        return int(self.family_of.size)

    @property
    def num_families(self) -> int:
        return len(self._groups)

    def members_of(self, f: int) -> np.ndarray:
        return self._groups[f]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._groups)

    def indicator(self) -> np.ndarray:
        """(I, F) one-hot membership matrix, cached."""
        if self._indicator is None:
            m = np.zeros((self.num_individuals, self.num_families), dtype=np.int64)
            m[np.arange(self.num_individuals), self.family_of] = 1
            self._indicator = m
        return self._indicator


class TemporalContactNetwork:
    """Per-step symmetric contact graphs over the non-family pairs.

    ``adjacency`` has shape (T, I, I); entry (t, i, j) says i and j met on
    day t.  Day t edges drive the transition from time t to time t + 1.
    """

    def __init__(self, adjacency: np.ndarray):
        adj = np.asarray(adjacency, dtype=bool)
        if adj.ndim != 3 or adj.shape[1] != adj.shape[2]:
            raise ConstraintError(f"adjacency must have shape (T, I, I), got {adj.shape}")
        if any(adj[t].diagonal().any() for t in range(adj.shape[0])):
            raise ConstraintError("self-contacts are not allowed")
        if not np.array_equal(adj, adj.transpose(0, 2, 1)):
            raise ConstraintError("contact graphs must be symmetric")
        self.adjacency = adj

    @property
    def num_steps(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def num_individuals(self) -> int:
        return int(self.adjacency.shape[1])

    def contacts_of(self, i: int, t: int) -> np.ndarray:
        return np.nonzero(self.adjacency[t, i])[0]

    def truncated(self, num_steps: int) -> "TemporalContactNetwork":
        if not 0 <= num_steps <= self.num_steps:
            raise ConstraintError(f"cannot truncate {self.num_steps} steps to {num_steps}")
        return TemporalContactNetwork(self.adjacency[:num_steps])

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield (t, i, j) with i < j, sorted."""
        for t in range(self.num_steps):
            ii, jj = np.nonzero(np.triu(self.adjacency[t], 1))
            for i, j in zip(ii.tolist(), jj.tolist()):
                yield t, i, j

    def validate_disjoint_from(self, families: FamilyPartition) -> None:
        same_family = families.family_of[:, None] == families.family_of[None, :]
        if np.any(self.adjacency & same_family[None, :, :]):
            raise ConstraintError("contact network must not contain within-family pairs")

    @classmethod
    def from_edges(
        cls,
        num_steps: int,
        num_individuals: int,
        edges: Iterable[tuple[int, int, int]],
    ) -> "TemporalContactNetwork":
        adj = np.zeros((num_steps, num_individuals, num_individuals), dtype=bool)
        for t, i, j in edges:
            if not (0 <= t < num_steps and 0 <= i < num_individuals and 0 <= j < num_individuals):
                raise ConstraintError(f"edge ({t}, {i}, {j}) out of range")
            if i == j:
                raise ConstraintError("self-contacts are not allowed")
            adj[t, i, j] = True
            adj[t, j, i] = True
        return cls(adj)


class HealthStateMatrix:
    """Binary infection states on the (time, individual) grid.

    Row t holds every individual's status at time t (time-major layout),
    so ``states`` has shape (T + 1, I) for a horizon of T steps.
    """

    def __init__(self, states: np.ndarray):
        arr = np.asarray(states)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConstraintError(f"states must be a non-empty 2-d array, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ConstraintError("states must be 0/1 valued")
        self.states = arr.astype(np.int8)

    @classmethod
    def zeros(cls, num_individuals: int, horizon: int) -> "HealthStateMatrix":
        return cls(np.zeros((horizon + 1, num_individuals), dtype=np.int8))

    @property
    def num_individuals(self) -> int:
        return int(self.states.shape[1])

    @property
    def horizon(self) -> int:
        return int(self.states.shape[0] - 1)

    def copy(self) -> "HealthStateMatrix":
        return HealthStateMatrix(self.states.copy())


class ObservationSet:
    """Sparse family-level test results keyed by (family, time)."""

    def __init__(self, results: Mapping[tuple[int, int], int]):
        clean: dict[tuple[int, int], int] = {}
        for (f, t), y in results.items():
            f, t, y = int(f), int(t), int(y)
            if y not in (0, 1):
                raise ConstraintError(f"test result for family {f} at t={t} must be 0/1, got {y}")
            if f < 0 or t < 0:
                raise ConstraintError(f"negative observation key ({f}, {t})")
            clean[(f, t)] = y
        self.results = clean

    def items(self) -> list[tuple[tuple[int, int], int]]:
        return sorted(self.results.items())

    def __len__(self) -> int:
        return len(self.results)

    @property
    def schedule(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for (f, t) in self.results:
            out.setdefault(f, []).append(t)
        return {f: tuple(sorted(ts)) for f, ts in out.items()}

    @property
    def max_time(self) -> int:
        """Latest tested day, -1 when empty."""
        return max((t for (_, t) in self.results), default=-1)

    def restrict(self, max_time: int) -> "ObservationSet":
        """Keep only results observed at or before ``max_time``."""
        return ObservationSet({k: y for k, y in self.results.items() if k[1] <= max_time})

    def to_matrix(self, num_families: int, horizon: int) -> np.ndarray:
        """(T + 1, F) int8 matrix with -1 marking untested cells."""
        out = np.full((horizon + 1, num_families), -1, dtype=np.int8)
        for (f, t), y in self.results.items():
            if f >= num_families or t > horizon:
                raise ConstraintError(f"observation ({f}, {t}) outside a {num_families}x{horizon + 1} grid")
            out[t, f] = y
        return out


class OriginMatrix:
    """Infection origin label for each transition cell.

    Shape (T, I); entry (t, i) labels the transition from time t to t + 1.
    Non-zero exactly where a new infection lands at time t + 1.
    """

    def __init__(self, origins: np.ndarray):
        arr = np.asarray(origins)
        if arr.ndim != 2:
            raise ConstraintError(f"origins must be 2-d, got shape {arr.shape}")
        if not np.isin(arr, (ORIGIN_NONE, ORIGIN_OUTSIDE, ORIGIN_FAMILY, ORIGIN_CONTACT)).all():
            raise ConstraintError("origin labels must be in {0, 1, 2, 3}")
        self.origins = arr.astype(np.int8)

    @property
    def num_individuals(self) -> int:
        return int(self.origins.shape[1])

    @property
    def num_steps(self) -> int:
        return int(self.origins.shape[0])


def emission_positive_prob(family_size: int, num_infected: int, params: ModelParameters) -> float:
    """Probability that a pooled test of a family comes back positive.

    Interpolates linearly between the healthy and infected per-member
    rates with the infected fraction of the family.
    """
    if family_size < 1:
        raise ValueError(f"family_size must be >= 1, got {family_size}")
    if not 0 <= num_infected <= family_size:
        raise ValueError(f"num_infected={num_infected} outside [0, {family_size}]")
    return ((family_size - num_infected) * params.theta0 + num_infected * params.theta1) / family_size


def infection_prob(
    num_infected_contacts: int,
    num_infected_family: int,
    params: ModelParameters,
    mode: str = "linear",
) -> float:
    """Per-step probability that a susceptible individual becomes infected.

    ``linear`` adds the exposure rates and clamps at ``PROB_CAP``; it
    first-order overestimates the ``exact`` complement-product form, and
    the two agree closely in the small-rate regime.
    """
    if num_infected_contacts < 0 or num_infected_family < 0:
        raise ValueError("infected counts must be non-negative")
    if mode == "linear":
        p = params.alpha + params.beta * num_infected_contacts + params.beta_f * num_infected_family
        return min(p, PROB_CAP)
    if mode == "exact":
        survive = (
            (1.0 - params.alpha)
            * (1.0 - params.beta) ** num_infected_contacts
            * (1.0 - params.beta_f) ** num_infected_family
        )
        return 1.0 - survive
    raise ValueError(f"unknown mode {mode!r}")


def transition_prob(
    x_now: int,
    x_next: int,
    num_infected_contacts: int,
    num_infected_family: int,
    params: ModelParameters,
) -> float:
    """One-step transition probability for a single individual."""
    if x_now not in (0, 1) or x_next not in (0, 1):
        raise ValueError("states must be 0/1")
    if x_now == 1:
        return params.gamma if x_next == 0 else 1.0 - params.gamma
    p = infection_prob(num_infected_contacts, num_infected_family, params, mode="linear")
    return p if x_next == 1 else 1.0 - p


def contact_infection_counts(adjacency: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Per (t, i) count of infected non-family contacts.

    ``adjacency`` is (T, I, I) boolean, ``states`` is (T + 1, I) or (T, I);
    only the first T rows of ``states`` are read.
    """
    num_steps = adjacency.shape[0]
    out = np.empty((num_steps, adjacency.shape[1]), dtype=np.int64)
    x = states.astype(np.int64)
    for t in range(num_steps):
        out[t] = adjacency[t] @ x[t]
    return out


def family_infection_totals(states: np.ndarray, families: FamilyPartition) -> np.ndarray:
    """Per (t, f) count of infected members, including each member itself."""
    return states.astype(np.int64) @ families.indicator()
