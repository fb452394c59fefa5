"""Model-layer types and per-site probability formulas."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupepi.errors import ConstraintError
from groupepi.model import (
    PROB_CAP,
    BetaPair,
    FamilyPartition,
    HealthStateMatrix,
    HyperParameters,
    ModelParameters,
    ObservationSet,
    TemporalContactNetwork,
    contact_infection_counts,
    emission_positive_prob,
    family_infection_totals,
    infection_prob,
    transition_prob,
)
from oracles import exact_infection_prob, linear_infection_prob


def make_params(**overrides):
    values = dict(alpha=0.001, beta=0.003, beta_f=0.005,
                  gamma=0.2, theta0=0.02, theta1=0.9)
    values.update(overrides)
    return ModelParameters(**values)


rate_triples = st.tuples(
    st.floats(1e-6, 0.3), st.floats(1e-6, 0.3), st.floats(1e-6, 0.3),
).map(sorted).filter(lambda r: r[0] < r[1] < r[2])


@st.composite
def param_sets(draw):
    a, b, bf = draw(rate_triples)
    t0 = draw(st.floats(0.001, 0.4))
    t1 = draw(st.floats(0.5, 0.999))
    g = draw(st.floats(0.001, 0.999))
    return ModelParameters(alpha=a, beta=b, beta_f=bf, gamma=g,
                           theta0=t0, theta1=t1)


class TestModelParameters:
    def test_accepts_ordered_rates(self):
        p = make_params()
        assert p.alpha < p.beta < p.beta_f
        assert p.theta0 < p.theta1

    @pytest.mark.parametrize("overrides", [
        {"alpha": 0.004},            # alpha >= beta
        {"beta": 0.005},             # beta >= beta_f
        {"beta_f": 0.002},
        {"theta0": 0.95},            # theta0 >= theta1
        {"theta1": 0.01},
    ])
    def test_rejects_misordered(self, overrides):
        with pytest.raises(ConstraintError):
            make_params(**overrides)

    @pytest.mark.parametrize("overrides", [
        {"alpha": 0.0}, {"alpha": -0.1}, {"gamma": 1.0}, {"gamma": 0.0},
        {"theta1": 1.0}, {"theta0": 0.0},
    ])
    def test_rejects_out_of_range(self, overrides):
        with pytest.raises(ConstraintError):
            make_params(**overrides)

    def test_dict_round_trip(self):
        p = make_params()
        assert ModelParameters.from_dict(p.as_dict()) == p

    def test_max_abs_difference(self):
        p = make_params()
        q = make_params(gamma=0.27)
        assert p.max_abs_difference(q) == pytest.approx(0.07)
        assert p.max_abs_difference(p) == 0.0


class TestHyperParameters:
    def test_pair_accessor_and_round_trip(self):
        h = HyperParameters(**{n: BetaPair(1.0, float(k + 1))
                               for k, n in enumerate(ModelParameters.as_dict(make_params()))})
        assert h.pair("alpha").mean == pytest.approx(0.5)
        assert HyperParameters.from_dict(h.as_dict()) == h
        with pytest.raises(KeyError):
            h.pair("delta")

    def test_beta_pair_mean(self):
        assert BetaPair(2.0, 6.0).mean == pytest.approx(0.25)

    def test_beta_pair_rejects_nonpositive(self):
        with pytest.raises(ConstraintError):
            BetaPair(0.0, 1.0)


class TestFamilyPartition:
    def test_lookup_tables(self):
        fam = FamilyPartition([[0, 2], [1], [3, 4]])
        assert fam.family_of.tolist() == [0, 1, 0, 2, 2]
        assert fam.sizes.tolist() == [2, 1, 2]
        assert fam.num_individuals == 5
        assert fam.num_families == 3
        assert sorted(fam.members_of(2)) == [3, 4]

    def test_indicator_matches_family_of(self):
        fam = FamilyPartition([[0, 2], [1], [3, 4]])
        m = fam.indicator()
        assert m.shape == (5, 3)
        assert (m.sum(axis=1) == 1).all()
        assert m[np.arange(5), fam.family_of].all()

    @pytest.mark.parametrize("groups", [
        [[0, 1], [3]],          # gap
        [[0, 1], [1, 2]],       # overlap
        [[0], []],              # empty family
        [],
    ])
    def test_rejects_non_partition(self, groups):
        with pytest.raises(ConstraintError):
            FamilyPartition(groups)


class TestTemporalContactNetwork:
    def test_from_edges_round_trip(self):
        edges = [(0, 0, 2), (1, 0, 2), (1, 1, 2)]
        net = TemporalContactNetwork.from_edges(2, 3, edges)
        assert sorted(net.edges()) == sorted(edges)
        assert net.num_steps == 2
        assert net.num_individuals == 3

    def test_symmetry_enforced(self):
        adj = np.zeros((1, 3, 3), dtype=bool)
        adj[0, 0, 1] = True
        with pytest.raises(ConstraintError):
            TemporalContactNetwork(adj)

    def test_self_loop_rejected(self):
        with pytest.raises(ConstraintError):
            TemporalContactNetwork.from_edges(1, 3, [(0, 1, 1)])

    def test_truncated_keeps_prefix(self):
        net = TemporalContactNetwork.from_edges(3, 3, [(0, 0, 1), (2, 1, 2)])
        short = net.truncated(1)
        assert short.num_steps == 1
        assert list(short.edges()) == [(0, 0, 1)]

    def test_contacts_of(self):
        net = TemporalContactNetwork.from_edges(2, 4, [(0, 0, 1), (0, 0, 3)])
        assert sorted(net.contacts_of(0, 0)) == [1, 3]
        assert net.contacts_of(0, 1).size == 0

    def test_family_overlap_detected(self):
        fam = FamilyPartition([[0, 1], [2]])
        net = TemporalContactNetwork.from_edges(1, 3, [(0, 0, 1)])
        with pytest.raises(ConstraintError):
            net.validate_disjoint_from(fam)
        ok = TemporalContactNetwork.from_edges(1, 3, [(0, 0, 2)])
        ok.validate_disjoint_from(fam)


class TestHealthStateMatrix:
    def test_zeros_shape(self):
        m = HealthStateMatrix.zeros(horizon=4, num_individuals=3)
        assert m.states.shape == (5, 3)
        assert m.horizon == 4
        assert m.num_individuals == 3

    def test_rejects_non_binary(self):
        with pytest.raises(ConstraintError):
            HealthStateMatrix(np.full((2, 2), 2, dtype=np.int8))

    def test_copy_is_independent(self):
        m = HealthStateMatrix.zeros(2, 2)
        c = m.copy()
        c.states[1, 0] = 1
        assert m.states[1, 0] == 0


class TestObservationSet:
    def test_items_sorted_and_max_time(self):
        obs = ObservationSet({(1, 3): 1, (0, 2): 0, (1, 0): 1})
        assert obs.items() == [((0, 2), 0), ((1, 0), 1), ((1, 3), 1)]
        assert obs.max_time == 3
        assert ObservationSet({}).max_time == -1

    def test_restrict_drops_later_tests(self):
        obs = ObservationSet({(0, 0): 1, (0, 5): 0, (1, 3): 1})
        kept = obs.restrict(3)
        assert set(kept.results) == {(0, 0), (1, 3)}

    def test_to_matrix_marks_untested(self):
        obs = ObservationSet({(0, 1): 1, (2, 0): 0})
        m = obs.to_matrix(num_families=3, horizon=2)
        assert m.shape == (3, 3)
        assert m[1, 0] == 1 and m[0, 2] == 0
        assert (m == -1).sum() == 7

    def test_to_matrix_rejects_out_of_grid(self):
        with pytest.raises(ConstraintError):
            ObservationSet({(5, 0): 1}).to_matrix(num_families=2, horizon=3)

    def test_rejects_bad_results(self):
        with pytest.raises(ConstraintError):
            ObservationSet({(0, 0): 2})
        with pytest.raises(ConstraintError):
            ObservationSet({(-1, 0): 1})


class TestEmission:
    def test_single_infected_of_four(self):
        p = make_params()
        assert emission_positive_prob(4, 1, p) == pytest.approx(0.24)

    def test_endpoints(self):
        p = make_params()
        assert emission_positive_prob(3, 0, p) == pytest.approx(p.theta0)
        assert emission_positive_prob(3, 3, p) == pytest.approx(p.theta1)

    def test_rejects_bad_counts(self):
        p = make_params()
        with pytest.raises(ValueError):
            emission_positive_prob(0, 0, p)
        with pytest.raises(ValueError):
            emission_positive_prob(2, 3, p)

    @given(param_sets(), st.integers(1, 8))
    def test_monotone_in_infected_count(self, params, size):
        probs = [emission_positive_prob(size, k, params) for k in range(size + 1)]
        assert all(a < b for a, b in zip(probs, probs[1:]))
        eps = 1e-12
        assert all(params.theta0 - eps <= q <= params.theta1 + eps for q in probs)


class TestInfectionProb:
    def test_linear_value(self):
        p = make_params()
        assert infection_prob(2, 1, p) == pytest.approx(0.012)

    def test_exact_value(self):
        p = make_params()
        expected = 1.0 - 0.999 * 0.997**2 * 0.995
        assert infection_prob(2, 1, p, mode="exact") == pytest.approx(expected, abs=1e-15)

    def test_linear_clamps_at_cap(self):
        p = make_params()
        assert infection_prob(10_000, 10_000, p) == PROB_CAP

    def test_rejects_negative_counts_and_bad_mode(self):
        p = make_params()
        with pytest.raises(ValueError):
            infection_prob(-1, 0, p)
        with pytest.raises(ValueError):
            infection_prob(0, -1, p, mode="exact")
        with pytest.raises(ValueError):
            infection_prob(0, 0, p, mode="quadratic")

    @given(param_sets(), st.integers(0, 40), st.integers(0, 6))
    def test_matches_oracles(self, params, c, n):
        got_lin = infection_prob(c, n, params)
        got_exact = infection_prob(c, n, params, mode="exact")
        assert got_lin == pytest.approx(
            linear_infection_prob(params.alpha, params.beta, params.beta_f, c, n),
            abs=1e-15,
        )
        assert got_exact == pytest.approx(
            exact_infection_prob(params.alpha, params.beta, params.beta_f, c, n),
            abs=1e-15,
        )

    @given(param_sets(), st.integers(0, 40), st.integers(0, 6))
    def test_linear_dominates_exact_within_quadratic_gap(self, params, c, n):
        lin = infection_prob(c, n, params)
        exact = infection_prob(c, n, params, mode="exact")
        assert lin >= exact - 1e-12
        s = params.alpha + params.beta * c + params.beta_f * n
        assert lin - exact <= s * s / 2.0 + 1e-12


class TestTransitionProb:
    @given(param_sets(), st.integers(0, 20), st.integers(0, 5),
           st.sampled_from([0, 1]))
    def test_rows_sum_to_one(self, params, c, n, x):
        total = sum(transition_prob(x, nxt, c, n, params) for nxt in (0, 1))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_recovery_uses_gamma(self):
        p = make_params()
        assert transition_prob(1, 0, 7, 3, p) == p.gamma
        assert transition_prob(1, 1, 0, 0, p) == 1.0 - p.gamma

    def test_rejects_non_binary_states(self):
        with pytest.raises(ValueError):
            transition_prob(2, 0, 0, 0, make_params())


class TestCountHelpers:
    def test_contact_counts_small_case(self):
        net = TemporalContactNetwork.from_edges(2, 3, [(0, 0, 2), (1, 0, 2), (1, 1, 2)])
        states = np.array([[0, 0, 1], [1, 0, 1], [1, 1, 0]], dtype=np.int8)
        counts = contact_infection_counts(net.adjacency, states)
        assert counts.tolist() == [[1, 0, 0], [1, 1, 1]]

    def test_family_totals_small_case(self):
        fam = FamilyPartition([[0, 1], [2]])
        states = np.array([[0, 1, 1], [1, 1, 0]], dtype=np.int8)
        totals = family_infection_totals(states, fam)
        assert totals.tolist() == [[1, 1], [2, 0]]

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_counts_match_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        t, i = 3, 5
        adj = rng.random((t, i, i)) < 0.4
        adj = np.triu(adj, 1) | np.triu(adj, 1).transpose(0, 2, 1)
        states = (rng.random((t + 1, i)) < 0.5).astype(np.int8)
        counts = contact_infection_counts(adj, states)
        for s in range(t):
            for j in range(i):
                brute = sum(states[s, k] for k in range(i) if adj[s, j, k])
                assert counts[s, j] == brute
