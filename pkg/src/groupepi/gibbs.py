"""Gibbs-sampling recovery of hidden infection states from pooled tests.

The sampler alternates two phases.  The inner phase resamples every
hidden cell from its full conditional (prior from its predecessors,
likelihood of its successors, and the family test result when one exists
that day) until the per-sweep flip fraction falls below a threshold.
The outer phase attributes each sampled new infection to an origin
(outside, family, or non-family contact), accumulates Beta-conjugate
sufficient statistics, folds them into the hyperparameters, and redraws
the six model parameters.  After the outer loop settles, additional
sweeps are averaged into posterior marginals.

Time 0 is pinned to the all-healthy state and never resampled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np

from . import _kernel
from .errors import ConfigError, ConstraintError, DataError, InitializationError
from .model import (
    PARAM_NAMES,
    PROB_CAP,
    BetaPair,
    FamilyPartition,
    HealthStateMatrix,
    HyperParameters,
    ModelParameters,
    ObservationSet,
    OriginMatrix,
    TemporalContactNetwork,
    contact_infection_counts,
    emission_positive_prob,
    family_infection_totals,
)
from .simulate import forward_sample_states

RESAMPLE_BUDGET = 10_000


@dataclass(frozen=True)
class InferenceConfig:
    """Stopping rules and seed of one inference run."""

    inner_flip_threshold: float = 0.01
    inner_max_sweeps: int = 100
    outer_param_tol: float = 1e-3
    outer_max_iters: int = 50
    burn_in_sweeps: int = 20
    accumulation_sweeps: int = 50
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.inner_flip_threshold <= 1.0:
            raise ConfigError(f"inner_flip_threshold={self.inner_flip_threshold} outside [0, 1]")
        if self.inner_max_sweeps < 1 or self.outer_max_iters < 1:
            raise ConfigError("inner_max_sweeps and outer_max_iters must be >= 1")
        if self.outer_param_tol < 0:
            raise ConfigError("outer_param_tol must be >= 0")
        if self.burn_in_sweeps < 0 or self.accumulation_sweeps < 1:
            raise ConfigError("burn_in_sweeps must be >= 0 and accumulation_sweeps >= 1")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be non-negative")

    def as_dict(self) -> dict[str, Any]:
        return {
            "inner_flip_threshold": self.inner_flip_threshold,
            "inner_max_sweeps": self.inner_max_sweeps,
            "outer_param_tol": self.outer_param_tol,
            "outer_max_iters": self.outer_max_iters,
            "burn_in_sweeps": self.burn_in_sweeps,
            "accumulation_sweeps": self.accumulation_sweeps,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "InferenceConfig":
        known = {
            "inner_flip_threshold", "inner_max_sweeps", "outer_param_tol",
            "outer_max_iters", "burn_in_sweeps", "accumulation_sweeps", "rng_seed",
        }
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown inference config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        try:
            for key in ("inner_flip_threshold", "outer_param_tol"):
                if key in values:
                    kwargs[key] = float(values[key])
            for key in ("inner_max_sweeps", "outer_max_iters", "burn_in_sweeps",
                        "accumulation_sweeps", "rng_seed"):
                if key in values:
                    kwargs[key] = int(values[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed inference config value: {exc}") from exc
        return cls(**kwargs)


@dataclass(frozen=True)
class CountPair:
    """Exposure count and success count for one Beta update."""

    total: int
    hits: int

    def __post_init__(self) -> None:
        if not 0 <= self.hits <= self.total:
            raise ConstraintError(f"hits={self.hits} outside [0, total={self.total}]")


@dataclass(frozen=True)
class SufficientCounts:
    """Per-parameter (exposures, successes) gathered from one state sample."""

    alpha: CountPair
    beta: CountPair
    beta_f: CountPair
    gamma: CountPair
    theta0: CountPair
    theta1: CountPair

    def pair(self, name: str) -> CountPair:
        if name not in PARAM_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def as_dict(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for name in PARAM_NAMES:
            pair = self.pair(name)
            out[f"n_{name}"] = pair.total
            out[f"hits_{name}"] = pair.hits
        return out


@dataclass(frozen=True)
class OuterIterationRecord:
    """Diagnostics captured at the end of one outer iteration."""

    iteration: int
    params: ModelParameters
    flip_fraction: float
    sweeps: int
    counts: SufficientCounts


@dataclass
class PosteriorEstimate:
    """Result of one inference run.

    ``marginals`` holds the posterior infection probability per (time,
    individual) cell, time-major like the state matrices.
    """

    marginals: np.ndarray
    learned_params: ModelParameters
    diagnostics: list[OuterIterationRecord]


INIT_ATTEMPT_BUDGET = 10_000
INIT_REDRAWS_PER_ATTEMPT = 50

# During the estimation phase the parameters are refreshed from their
# conditional posterior once per this many sweeps.
PARAM_REFRESH_SWEEPS = 10

# Ranges for the randomized initial priors.  Daily infection probabilities
# are small, family tests rarely fire on an all-healthy family and usually
# fire on an infected one; recovery can sit anywhere.  The counts gathered
# from a dataset of realistic size overwhelm these within a few updates,
# so they steer only where the chain starts, not where it ends.
INIT_RATE_TAIL = (200, 2000)
INIT_FALSE_POS_TAIL = (30, 300)
INIT_TRUE_POS_HEAD = (5, 50)
INIT_RECOVERY_RANGE = (1, 10)


def initialize(rng: np.random.Generator) -> tuple[HyperParameters, ModelParameters]:
    """Draw randomized weak priors and ordered initial parameters.

    Each attempt draws one integer per tail/head range above, then tries
    to draw ordered parameters from the resulting Betas.  Attempts whose
    priors leave too little mass on the orderings are thrown away and
    redrawn rather than exhausting the whole budget on one bad prior.
    """
    for _ in range(INIT_ATTEMPT_BUDGET):
        hypers = HyperParameters(
            alpha=BetaPair(1.0, float(rng.integers(*INIT_RATE_TAIL))),
            beta=BetaPair(1.0, float(rng.integers(*INIT_RATE_TAIL))),
            beta_f=BetaPair(1.0, float(rng.integers(*INIT_RATE_TAIL))),
            gamma=BetaPair(
                float(rng.integers(INIT_RECOVERY_RANGE[0], INIT_RECOVERY_RANGE[1] + 1)),
                float(rng.integers(INIT_RECOVERY_RANGE[0], INIT_RECOVERY_RANGE[1] + 1)),
            ),
            theta0=BetaPair(1.0, float(rng.integers(*INIT_FALSE_POS_TAIL))),
            theta1=BetaPair(float(rng.integers(*INIT_TRUE_POS_HEAD)), 1.0),
        )
        try:
            params = resample_parameters(hypers, rng, max_redraws=INIT_REDRAWS_PER_ATTEMPT)
        except ConstraintError:
            continue
        return hypers, params
    raise InitializationError(
        f"no ordered initial parameters found in {INIT_ATTEMPT_BUDGET} attempts"
    )


def resample_parameters(
    hypers: HyperParameters,
    rng: np.random.Generator,
    max_redraws: int = RESAMPLE_BUDGET,
) -> ModelParameters:
    """Draw each parameter from its Beta posterior, redrawing whichever
    group violates its ordering constraint until both orderings hold."""
    def draw(name: str) -> float:
        pair = hypers.pair(name)
        return float(rng.beta(pair.a, pair.b))

    values = {name: draw(name) for name in PARAM_NAMES}
    for _ in range(max_redraws):
        rates_ok = 0.0 < values["alpha"] < values["beta"] < values["beta_f"] < 1.0
        tests_ok = 0.0 < values["theta0"] < values["theta1"] < 1.0
        gamma_ok = 0.0 < values["gamma"] < 1.0
        if rates_ok and tests_ok and gamma_ok:
            return ModelParameters(**values)
        if not rates_ok:
            for name in ("alpha", "beta", "beta_f"):
                values[name] = draw(name)
        if not tests_ok:
            for name in ("theta0", "theta1"):
                values[name] = draw(name)
        if not gamma_ok:
            values["gamma"] = draw("gamma")
    means = {name: hypers.pair(name).mean for name in PARAM_NAMES}
    raise ConstraintError(
        f"parameter redraw budget of {max_redraws} exhausted; posterior means {means}"
    )


def _truncated_beta(
    pair: BetaPair,
    lo: float,
    hi: float,
    rng: np.random.Generator,
) -> float:
    """Inverse-CDF draw from Beta(a, b) restricted to (lo, hi).

    When the restriction carries almost no mass the draw collapses to the
    feasible boundary instead of failing, which is what keeps the chain
    alive under badly ordered posteriors.
    """
    from scipy.special import betainc, betaincinv

    f_lo = float(betainc(pair.a, pair.b, max(lo, 0.0)))
    f_hi = float(betainc(pair.a, pair.b, min(hi, 1.0)))
    u = f_lo + rng.random() * max(f_hi - f_lo, 0.0)
    u = min(max(u, 1e-15), 1.0 - 1e-15)
    x = float(betaincinv(pair.a, pair.b, u))
    # Guard against round-off pushing the draw onto a boundary.
    width = hi - lo
    return min(max(x, lo + 1e-12 * max(width, 1e-6)), hi - 1e-12 * max(width, 1e-6))


def constrained_posterior_draw(
    hypers: HyperParameters,
    rng: np.random.Generator,
    scans: int = 10,
) -> ModelParameters:
    """Draw parameters from the posterior restricted to the ordered region.

    A short Gibbs scan over the three rates and the two test rates, each
    conditional being a truncated Beta.  Used when plain rejection cannot
    find an ordered draw.
    """
    eps = 1e-12
    beta_f = _truncated_beta(hypers.pair("beta_f"), eps, 1.0 - eps, rng)
    beta = _truncated_beta(hypers.pair("beta"), eps, beta_f, rng)
    alpha = _truncated_beta(hypers.pair("alpha"), eps, beta, rng)
    theta1 = _truncated_beta(hypers.pair("theta1"), eps, 1.0 - eps, rng)
    theta0 = _truncated_beta(hypers.pair("theta0"), eps, theta1, rng)
    for _ in range(scans):
        alpha = _truncated_beta(hypers.pair("alpha"), eps, beta, rng)
        beta = _truncated_beta(hypers.pair("beta"), alpha, beta_f, rng)
        beta_f = _truncated_beta(hypers.pair("beta_f"), beta, 1.0 - eps, rng)
        theta0 = _truncated_beta(hypers.pair("theta0"), eps, theta1, rng)
        theta1 = _truncated_beta(hypers.pair("theta1"), theta0, 1.0 - eps, rng)
    gamma_pair = hypers.pair("gamma")
    gamma = float(rng.beta(gamma_pair.a, gamma_pair.b))
    if not 0.0 < gamma < 1.0:
        gamma = _truncated_beta(gamma_pair, eps, 1.0 - eps, rng)
    return ModelParameters(
        alpha=alpha, beta=beta, beta_f=beta_f,
        gamma=gamma, theta0=theta0, theta1=theta1,
    )


def update_hyperparameters(hypers: HyperParameters, counts: SufficientCounts) -> HyperParameters:
    """Fold successes into a and failures into b, per parameter."""
    new_pairs = {}
    for name in PARAM_NAMES:
        pair = hypers.pair(name)
        count = counts.pair(name)
        new_pairs[name] = BetaPair(pair.a + count.hits, pair.b + (count.total - count.hits))
    return HyperParameters(**new_pairs)


def _exposure_counts(
    states: HealthStateMatrix,
    network: TemporalContactNetwork,
    families: FamilyPartition,
) -> tuple[np.ndarray, np.ndarray]:
    """(T, I) infected non-family contacts and (T+1, I) infected family
    members excluding the individual itself."""
    arr = states.states
    contacts = contact_infection_counts(network.adjacency, arr)
    totals = family_infection_totals(arr, families)
    family_excl = totals[:, families.family_of] - arr
    return contacts, family_excl


def sample_origins(
    states: HealthStateMatrix,
    network: TemporalContactNetwork,
    families: FamilyPartition,
    params: ModelParameters,
    rng: np.random.Generator,
) -> OriginMatrix:
    """Attribute each sampled new infection to an origin.

    The three origins are weighted by their share of the additive
    infection probability at the moment of exposure: the outside rate,
    the family rate times infected family members, and the contact rate
    times infected non-family contacts.
    """
    arr = states.states
    horizon = states.horizon
    contacts, family_excl = _exposure_counts(states, network, families)
    events = (arr[:horizon] == 0) & (arr[1:] == 1)
    w_outside = np.full((horizon, states.num_individuals), params.alpha)
    w_family = params.beta_f * family_excl[:horizon]
    w_contact = params.beta * contacts
    r = rng.random((horizon, states.num_individuals)) * (w_outside + w_family + w_contact)
    labels = 1 + (r >= w_outside).astype(np.int8) + (r >= w_outside + w_family).astype(np.int8)
    origins = np.where(events, labels, np.int8(0))
    return OriginMatrix(origins)


def count_sufficient_statistics(
    states: HealthStateMatrix,
    origins: OriginMatrix,
    observations: ObservationSet,
    network: TemporalContactNetwork,
    families: FamilyPartition,
) -> SufficientCounts:
    """Gather the Beta-update exposure/success counts from one sample.

    Exposure counts: healthy cells before the horizon for the outside
    rate, cells with at least one infected non-family contact (family
    member) on the previous day for the contact (family) rate, infected
    cells before the horizon for the recovery rate, and healthy/infected
    members at tested (family, day) cells for the two test rates.
    """
    arr = states.states
    horizon = states.horizon
    if origins.num_steps != horizon or origins.num_individuals != states.num_individuals:
        raise DataError("origin matrix shape does not match the state matrix")
    contacts, family_excl = _exposure_counts(states, network, families)

    n_alpha = int((arr[:horizon] == 0).sum())
    n_gamma = int((arr[:horizon] == 1).sum())
    hits_gamma = int(((arr[:horizon] == 1) & (arr[1:] == 0)).sum())
    n_beta = int((contacts > 0).sum())
    n_beta_f = int((family_excl[:horizon] > 0).sum())

    lab = origins.origins
    hits_alpha = int((lab == 1).sum())
    hits_family = int((lab == 2).sum())
    hits_contact = int((lab == 3).sum())

    n_theta0 = hits_theta0 = n_theta1 = hits_theta1 = 0
    for (f, t), y in observations.items():
        members = families.members_of(f)
        infected = int(arr[t, members].sum())
        healthy = members.size - infected
        n_theta0 += healthy
        n_theta1 += infected
        if y == 1:
            hits_theta0 += healthy
            hits_theta1 += infected

    return SufficientCounts(
        alpha=CountPair(n_alpha, hits_alpha),
        beta=CountPair(n_beta, hits_contact),
        beta_f=CountPair(n_beta_f, hits_family),
        gamma=CountPair(n_gamma, hits_gamma),
        theta0=CountPair(n_theta0, hits_theta0),
        theta1=CountPair(n_theta1, hits_theta1),
    )


def gibbs_conditional(
    i: int,
    t: int,
    states: HealthStateMatrix,
    observations: ObservationSet,
    network: TemporalContactNetwork,
    families: FamilyPartition,
    params: ModelParameters,
) -> float:
    """Full-conditional probability that cell (i, t) is infected.

    Multiplies the prior from the cell's predecessors, the likelihood of
    every successor the cell can infect (itself, susceptible family
    members, susceptible day-t contacts), and the family's test result at
    time t when one exists.  The successor block is skipped at the final
    time step.  Mirrors the compiled sweep factor-for-factor.
    """
    arr = states.states
    horizon = states.horizon
    n = states.num_individuals
    if not 1 <= t <= horizon:
        raise ValueError(f"t={t} outside the resampled range 1..{horizon}")
    if not 0 <= i < n:
        raise ValueError(f"individual {i} out of range")
    family_of = families.family_of
    f = int(family_of[i])
    members = families.members_of(f)
    cur = int(arr[t, i])

    def infected_contacts(j: int, at: int) -> int:
        return int(arr[at, network.contacts_of(j, at)].sum())

    def infected_family(j: int, at: int) -> int:
        fam = families.members_of(int(family_of[j]))
        return int(arr[at, fam].sum()) - int(arr[at, j])

    x_prev = int(arr[t - 1, i])
    if x_prev == 1:
        n1 = 1.0 - params.gamma
        n0 = params.gamma
    else:
        p = params.alpha + params.beta * infected_contacts(i, t - 1) \
            + params.beta_f * infected_family(i, t - 1)
        p = min(p, PROB_CAP)
        n1 = p
        n0 = 1.0 - p

    if t < horizon:
        x_next = int(arr[t + 1, i])
        f1 = (1.0 - params.gamma) if x_next == 1 else params.gamma
        p = params.alpha + params.beta * infected_contacts(i, t) \
            + params.beta_f * (int(arr[t, members].sum()) - cur)
        p = min(p, PROB_CAP)
        f0 = p if x_next == 1 else 1.0 - p
        n1 *= f1
        n0 *= f0
        for j in members.tolist():
            if j == i or arr[t, j] == 1:
                continue
            base = int(arr[t, members].sum()) - int(arr[t, j]) - cur
            cj = infected_contacts(j, t)
            p0 = min(params.alpha + params.beta * cj + params.beta_f * base, PROB_CAP)
            p1 = min(params.alpha + params.beta * cj + params.beta_f * (base + 1), PROB_CAP)
            if arr[t + 1, j] == 1:
                n0 *= p0
                n1 *= p1
            else:
                n0 *= 1.0 - p0
                n1 *= 1.0 - p1
        for j in network.contacts_of(i, t).tolist():
            if arr[t, j] == 1:
                continue
            base = infected_contacts(j, t) - cur
            nj = infected_family(j, t)
            p0 = min(params.alpha + params.beta * base + params.beta_f * nj, PROB_CAP)
            p1 = min(params.alpha + params.beta * (base + 1) + params.beta_f * nj, PROB_CAP)
            if arr[t + 1, j] == 1:
                n0 *= p0
                n1 *= p1
            else:
                n0 *= 1.0 - p0
                n1 *= 1.0 - p1

    y = observations.results.get((f, t))
    if y is not None:
        size = members.size
        base = int(arr[t, members].sum()) - cur
        pos0 = ((size - base) * params.theta0 + base * params.theta1) / size
        pos1 = ((size - (base + 1)) * params.theta0 + (base + 1) * params.theta1) / size
        if y == 1:
            n0 *= pos0
            n1 *= pos1
        else:
            n0 *= 1.0 - pos0
            n1 *= 1.0 - pos1

    total = n0 + n1
    if not total > 0.0:
        raise ConstraintError(f"degenerate conditional at cell ({i}, {t})")
    return n1 / total


class GibbsState:
    """Mutable state of one Gibbs chain.

    Owns the current state sample, the latest origin attribution, the
    current parameters and hyperparameters, the posterior accumulator,
    and the chain's private random stream.
    """

    def __init__(
        self,
        observations: ObservationSet,
        network: TemporalContactNetwork,
        families: FamilyPartition,
        params: ModelParameters,
        hypers: HyperParameters,
        rng: np.random.Generator,
        initial_states: HealthStateMatrix | None = None,
    ):
        if families.num_individuals != network.num_individuals:
            raise DataError("family partition and network disagree on population size")
        if observations.max_time > network.num_steps:
            raise DataError("observations extend past the network horizon")
        self.network = network
        self.families = families
        self.params = params
        self.hypers = hypers
        self.rng = rng
        horizon = network.num_steps
        n = network.num_individuals
        if initial_states is None:
            initial_states = forward_sample_states(network, families, params, rng)
        if initial_states.horizon != horizon or initial_states.num_individuals != n:
            raise DataError("initial states shape does not match the network")
        self.x = initial_states
        self.origins = OriginMatrix(np.zeros((horizon, n), dtype=np.int8))
        self.sweep_count = 0
        self.outer_iteration = 0
        self.accumulator = np.zeros((horizon + 1, n), dtype=np.float64)
        self._obs_matrix = observations.to_matrix(families.num_families, horizon)
        self._observations = observations
        self.refresh_counts()

    def refresh_counts(self) -> None:
        """Rebuild the incremental infected-neighbor counts from scratch."""
        arr = self.x.states
        self._fam_inf = family_infection_totals(arr, self.families)
        self._con_inf = contact_infection_counts(self.network.adjacency, arr)

    def sweep(self, uniforms: np.ndarray | None = None) -> float:
        """Resample every cell once; returns the flip fraction."""
        horizon = self.network.num_steps
        n = self.network.num_individuals
        if uniforms is None:
            uniforms = self.rng.random((horizon, n))
        p = self.params
        flips = _kernel.sweep(
            self.x.states,
            self.network.adjacency,
            self.families.family_of,
            self.families.indptr,
            self.families.members,
            self._obs_matrix,
            p.alpha, p.beta, p.beta_f, p.gamma, p.theta0, p.theta1,
            self._fam_inf,
            self._con_inf,
            uniforms,
        )
        self.sweep_count += 1
        return flips / (n * horizon)

    def set_params(self, params: ModelParameters) -> None:
        self.params = params

    def accumulate(self) -> None:
        self.accumulator += self.x.states


def forward_initialize_states(
    network: TemporalContactNetwork,
    families: FamilyPartition,
    params: ModelParameters,
    rng: np.random.Generator,
) -> HealthStateMatrix:
    """Initial chain state: a forward sample under the current parameters."""
    out = forward_sample_states(network, families, params, rng)
    assert isinstance(out, HealthStateMatrix)
    return out


def run_inference(
    observations: ObservationSet,
    network: TemporalContactNetwork,
    families: FamilyPartition,
    config: InferenceConfig,
) -> PosteriorEstimate:
    """Run one full chain and return posterior marginals.

    Args:
        observations: pooled test results; the only data the sampler sees.
        network: day-by-day contact graphs defining the horizon.
        families: static family partition.
        config: stopping rules and the chain's random seed.

    Returns:
        PosteriorEstimate with (horizon + 1, I) marginals, the final
        parameter draw, and per-outer-iteration diagnostics.
    """
    rng = np.random.default_rng(config.rng_seed)
    prior_hypers, params = initialize(rng)
    state = GibbsState(observations, network, families, params, prior_hypers, rng)
    diagnostics: list[OuterIterationRecord] = []

    def parameter_step() -> tuple[ModelParameters, SufficientCounts]:
        state.origins = sample_origins(state.x, network, families, state.params, rng)
        counts = count_sufficient_statistics(
            state.x, state.origins, observations, network, families)
        # Complete-data conjugate step: the posterior always combines the
        # fixed prior with the counts of the current imputation, so one
        # noisy early sample cannot contaminate every later iteration.
        state.hypers = update_hyperparameters(prior_hypers, counts)
        try:
            new_params = resample_parameters(state.hypers, rng)
        except ConstraintError:
            # A bad imputation can concentrate the posterior on the wrong
            # side of an ordering; rejection then never terminates, so
            # draw from the order-restricted posterior directly.
            new_params = constrained_posterior_draw(state.hypers, rng)
        state.set_params(new_params)
        return new_params, counts

    for iteration in range(1, config.outer_max_iters + 1):
        state.outer_iteration = iteration
        sweeps = 0
        flip_fraction = 1.0
        while sweeps < config.inner_max_sweeps:
            flip_fraction = state.sweep()
            sweeps += 1
            if flip_fraction < config.inner_flip_threshold:
                break
        previous = state.params
        new_params, counts = parameter_step()
        shift = new_params.max_abs_difference(previous)
        diagnostics.append(OuterIterationRecord(
            iteration=iteration,
            params=new_params,
            flip_fraction=flip_fraction,
            sweeps=sweeps,
            counts=counts,
        ))
        if shift < config.outer_param_tol:
            break

    # Estimation phase: keep alternating state sweeps with parameter
    # steps so the accumulated marginals average over the parameter
    # posterior instead of hanging on one final draw.
    for k in range(config.burn_in_sweeps):
        state.sweep()
        if (k + 1) % PARAM_REFRESH_SWEEPS == 0:
            parameter_step()
    for k in range(config.accumulation_sweeps):
        state.sweep()
        state.accumulate()
        if (k + 1) % PARAM_REFRESH_SWEEPS == 0:
            parameter_step()
    marginals = state.accumulator / config.accumulation_sweeps
    return PosteriorEstimate(
        marginals=marginals,
        learned_params=state.params,
        diagnostics=diagnostics,
    )


def with_seed(config: InferenceConfig, rng_seed: int) -> InferenceConfig:
    return replace(config, rng_seed=rng_seed)
