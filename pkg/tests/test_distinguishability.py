import math

import numpy as np
import pytest

from helpers import random_positive_mixture, random_psd_gram
from loqc_certify.combinatorics import (
    conjugate,
    cycle_type,
    enumerate_partitions,
    enumerate_permutations,
    full_block_partition,
    singleton_partition,
)
from loqc_certify.distinguishability import (
    DirectGI,
    GIVector,
    PartitionMixture,
    PureProduct,
    RepresentationError,
    gi_from_gram,
    gi_from_partition,
    gram_gi_vector,
    indistinguishable_coefficient,
    model_from_json,
    model_gi_vector,
    model_to_json,
    obb_model,
    overlaps_from_visibilities,
    partition_gi_vector,
    partition_weights_from_gi,
    symmetric_weight,
    time_delay_gram,
    twirl,
    validate_gram,
)


def test_gi_from_gram_identity_and_ones():
    rng = np.random.default_rng(0)
    g = random_psd_gram(4, rng)
    assert gi_from_gram(g, (0, 1, 2, 3)) == pytest.approx(1.0)
    ones = np.ones((3, 3))
    for sigma in enumerate_permutations(3):
        assert gi_from_gram(ones, sigma) == pytest.approx(1.0)


def test_gi_from_gram_cycle_skips_unlinked_pair():
    # photons 1 and 3 (0-based) fully distinguishable, everything else overlapping
    v = np.zeros((4, 5))
    v[0] = [1, 0, 0, 0, 0]
    v[1] = [0.6, 0.8, 0, 0, 0]
    v[2] = [0.5, 0.5, 1, 0, 0]
    v[3] = [0.7, -0.525, 0, 0.3, 0]
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    g = v @ v.T
    assert abs(g[1, 3]) < 1e-12
    cycle = (1, 2, 3, 0)  # 0->1->2->3->0
    value = gi_from_gram(g, cycle)
    assert value == pytest.approx(g[0, 1] * g[1, 2] * g[2, 3] * g[3, 0])
    assert abs(value) > 1e-6


def test_gi_vector_invariants_from_random_grams():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4):
        gi = gram_gi_vector(random_psd_gram(n, rng))
        perms = enumerate_permutations(n)
        assert gi.value(perms[0]) == pytest.approx(1.0)
        assert np.abs(gi.values).max() <= 1 + 1e-9
        for sigma in perms:
            inv = tuple(int(i) for i in np.argsort(sigma))
            assert gi.value(inv) == pytest.approx(np.conj(gi.value(sigma)))


def test_gi_from_partition_examples():
    full = PartitionMixture(3, {full_block_partition(3): 1.0})
    singles = PartitionMixture(3, {singleton_partition(3): 1.0})
    for sigma in enumerate_permutations(3):
        assert gi_from_partition(full, sigma) == pytest.approx(1.0)
        expected = 1.0 if sigma == (0, 1, 2) else 0.0
        assert gi_from_partition(singles, sigma) == pytest.approx(expected)
    mix = PartitionMixture(3, {((0, 1), (2,)): 0.5, ((0, 1, 2),): 0.5})
    assert gi_from_partition(mix, (1, 0, 2)) == pytest.approx(1.0)
    assert gi_from_partition(mix, (1, 2, 0)) == pytest.approx(0.5)


def test_partition_weights_trivial_and_time_delay():
    gi = partition_gi_vector(PartitionMixture(3, {full_block_partition(3): 1.0}))
    w = partition_weights_from_gi(gi)
    assert w.weights[full_block_partition(3)] == pytest.approx(1.0)

    tau = 1.0
    gi = gram_gi_vector(time_delay_gram([0.0, tau, -tau]))
    w = partition_weights_from_gi(gi)
    assert w.weights[((0,), (1, 2))] == pytest.approx(
        math.exp(-2 * tau**2) - math.exp(-1.5 * tau**2), abs=1e-12
    )
    assert w.is_quasi


def test_partition_weights_closed_form_identities():
    # For any orbit-invariant table: pair weight = pair value - cycle value,
    # singleton weight = 1 - sum(pairs) + 2 * cycle value.
    rng = np.random.default_rng(9)
    g = random_psd_gram(3, rng, complex_entries=False)
    gi = gram_gi_vector(g)
    w = partition_weights_from_gi(gi)
    pair01 = gi.value((1, 0, 2)).real
    pair02 = gi.value((2, 1, 0)).real
    pair12 = gi.value((0, 2, 1)).real
    cyc = gi.value((1, 2, 0)).real
    assert w.weights[((0, 1), (2,))] == pytest.approx(pair01 - cyc)
    assert w.weights[((0, 2), (1,))] == pytest.approx(pair02 - cyc)
    assert w.weights[((0,), (1, 2))] == pytest.approx(pair12 - cyc)
    assert w.weights[((0, 1, 2),)] == pytest.approx(cyc)
    assert w.weights[singleton_partition(3)] == pytest.approx(
        1 - pair01 - pair02 - pair12 + 2 * cyc
    )


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_partition_round_trip(n):
    rng = np.random.default_rng(40 + n)
    mixture = random_positive_mixture(n, rng)
    gi = partition_gi_vector(mixture)
    back = partition_weights_from_gi(gi)
    again = partition_gi_vector(back)
    assert np.abs(gi.values - again.values).max() <= 1e-9
    for lam in enumerate_partitions(n):
        assert back.weights[lam] == pytest.approx(mixture.weights.get(lam, 0.0), abs=1e-9)


def test_partition_weights_reject_non_orbit_invariant():
    rng = np.random.default_rng(17)
    g = random_psd_gram(3, rng, complex_entries=True)
    gi = gram_gi_vector(g)
    # complex cycles give conjugate-distinct values on the two 3-cycles
    with pytest.raises(RepresentationError):
        partition_weights_from_gi(gi)


def test_twirl_examples_and_idempotence():
    n = 3
    perms = enumerate_permutations(n)
    ones = GIVector(n, np.ones(len(perms)))
    assert np.abs(twirl(ones).values - 1.0).max() <= 1e-15

    values = []
    trans = {(1, 0, 2): 0.9, (2, 1, 0): 0.6, (0, 2, 1): 0.3}
    for sigma in perms:
        if sigma in trans:
            values.append(trans[sigma])
        elif cycle_type(sigma) == (3,):
            values.append(0.5)
        else:
            values.append(1.0)
    gi = GIVector(n, values)
    tw = twirl(gi)
    for sigma in trans:
        assert tw.value(sigma) == pytest.approx(0.6)
    assert np.abs(twirl(tw).values - tw.values).max() <= 1e-12


def test_twirl_matches_literal_conjugation_average():
    rng = np.random.default_rng(2)
    for n in (2, 3, 4):
        gi = gram_gi_vector(random_psd_gram(n, rng))
        tw = twirl(gi)
        perms = enumerate_permutations(n)
        for sigma in perms:
            literal = np.mean([gi.value(conjugate(sigma, tau)) for tau in perms])
            assert tw.value(sigma) == pytest.approx(literal, abs=1e-12)


def test_twirl_output_constant_on_classes():
    rng = np.random.default_rng(21)
    gi = gram_gi_vector(random_psd_gram(4, rng))
    tw = twirl(gi)
    groups = {}
    for sigma in enumerate_permutations(4):
        groups.setdefault(cycle_type(sigma), []).append(tw.value(sigma))
    for vals in groups.values():
        assert max(abs(v - vals[0]) for v in vals) <= 1e-12


def test_symmetric_weight_examples():
    n = 3
    perms = enumerate_permutations(n)
    assert symmetric_weight(GIVector(n, np.ones(len(perms)))) == pytest.approx(1.0)
    dist = partition_gi_vector(PartitionMixture(n, {singleton_partition(n): 1.0}))
    assert symmetric_weight(dist) == pytest.approx(1 / math.factorial(n))
    x = 0.37
    gi2 = gram_gi_vector(np.array([[1.0, x], [x, 1.0]]))
    assert symmetric_weight(gi2) == pytest.approx((1 + x**2) / 2)


def test_symmetric_weight_twirl_invariant_and_bounds_cn():
    rng = np.random.default_rng(8)
    gi = gram_gi_vector(random_psd_gram(4, rng))
    assert symmetric_weight(twirl(gi)) == pytest.approx(symmetric_weight(gi), abs=1e-12)
    for n in (3, 4):
        mix = random_positive_mixture(n, rng)
        gi = partition_gi_vector(mix)
        assert symmetric_weight(gi) >= indistinguishable_coefficient(mix) - 1e-12


def test_time_delay_gram_values():
    g = time_delay_gram([0.5, 0.5, 0.5])
    assert np.abs(g - 1.0).max() <= 1e-15
    tau = 0.8
    g = time_delay_gram([0.0, tau, -tau])
    # pairwise expectation values, not raw amplitudes
    assert gi_from_gram(g, (1, 0, 2)) == pytest.approx(math.exp(-(tau**2) / 2))
    assert gi_from_gram(g, (2, 1, 0)) == pytest.approx(math.exp(-(tau**2) / 2))
    assert gi_from_gram(g, (0, 2, 1)) == pytest.approx(math.exp(-2 * tau**2))
    assert gi_from_gram(g, (1, 2, 0)) == pytest.approx(math.exp(-1.5 * tau**2))


def test_obb_model_weights():
    assert obb_model(3, 0.0).weights[full_block_partition(3)] == pytest.approx(1.0)
    assert obb_model(3, 1.0).weights[singleton_partition(3)] == pytest.approx(1.0)
    m = obb_model(3, 0.1)
    assert m.weights[full_block_partition(3)] == pytest.approx(0.9**3)
    assert indistinguishable_coefficient(m) == pytest.approx(0.729)
    # one bad photon leaves a two-photon block plus a singleton
    assert m.weights[((0, 1), (2,))] == pytest.approx(0.1 * 0.9**2)
    # two bad photons and three bad photons both land on all-singletons
    assert m.weights[singleton_partition(3)] == pytest.approx(3 * 0.01 * 0.9 + 0.001)
    assert math.fsum(m.weights.values()) == pytest.approx(1.0, abs=1e-12)


def test_indistinguishable_coefficient_examples():
    assert indistinguishable_coefficient(
        PartitionMixture(3, {singleton_partition(3): 1.0})
    ) == 0.0
    tau = 0.7
    gi = gram_gi_vector(time_delay_gram([0.0, tau, -tau]))
    mix = partition_weights_from_gi(gi)
    assert indistinguishable_coefficient(mix) == pytest.approx(math.exp(-1.5 * tau**2))


def test_validate_gram_clipping_and_rejection():
    g = np.array([[1.0, 1.0], [1.0, 1.0]])
    g[0, 1] = g[1, 0] = 1.0 + 4e-11  # tiny PSD violation gets clipped
    validate_gram(g)
    bad = np.array([[1.0, 1.1], [1.1, 1.0]])
    with pytest.raises(ValueError):
        validate_gram(bad)
    with pytest.raises(ValueError):
        validate_gram(np.array([[1.0, 0.2], [0.3, 1.0]]))  # not hermitian
    with pytest.raises(ValueError):
        validate_gram(np.array([[0.9, 0.0], [0.0, 1.0]]))  # diagonal


def test_quasi_flag_and_weight_sum_check():
    quasi = PartitionMixture(
        2, {full_block_partition(2): 1.2, singleton_partition(2): -0.2}
    )
    assert quasi.is_quasi
    with pytest.raises(ValueError):
        PartitionMixture(2, {full_block_partition(2): 0.5})


def test_model_serialization_round_trips():
    rng = np.random.default_rng(12)
    models = [
        PureProduct(random_psd_gram(3, rng)),
        random_positive_mixture(3, rng),
        DirectGI(gram_gi_vector(random_psd_gram(3, rng))),
    ]
    for model in models:
        again = model_from_json(model_to_json(model))
        assert type(again) is type(model)
        assert np.abs(
            model_gi_vector(again).values - model_gi_vector(model).values
        ).max() <= 1e-15


def test_overlaps_from_visibilities():
    x = overlaps_from_visibilities(np.array([0.49, 1.0, 0.0]))
    assert np.allclose(x, [0.7, 1.0, 0.0])
    with pytest.raises(ValueError):
        overlaps_from_visibilities(np.array([-0.1]))
