import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beamkey.array_channel import ArrayGeometry, steering_vector
from beamkey.beam_weights import (
    HardwareProfile,
    WeightVector,
    _null_projection,
    directional_codebook,
    los_fraction_batch,
    los_power_fraction,
    null_weight_ideal,
    null_weight_practical,
    quantize_phase,
    random_weight,
    realize,
)
from beamkey.errors import InfeasibleWeightError

from oracles import exhaustive_minimum, feasible_space, los_fraction


@st.composite
def feasible_weights(draw, n_max=9):
    n = draw(st.integers(2, n_max))
    codes = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    on = draw(st.lists(st.booleans(), min_size=n, max_size=n).filter(any))
    return WeightVector(tuple(codes), tuple(on))


def test_realize_identity_phases():
    hw = HardwareProfile(total_power=2)
    np.testing.assert_allclose(realize(WeightVector((0, 0), (True, True)), hw), [1, 1])


def test_realize_pi_phase():
    hw = HardwareProfile(total_power=2)
    np.testing.assert_allclose(realize(WeightVector((0, 2), (True, True)), hw), [1, -1], atol=1e-15)


def test_realize_partial_on():
    hw = HardwareProfile(total_power=3)
    w = realize(WeightVector((0, 1, 3), (True, False, True)), hw)
    s = math.sqrt(1.5)
    np.testing.assert_allclose(w, [s, 0, s * np.exp(1.5j * np.pi)], atol=1e-12)
    assert np.sum(np.abs(w) ** 2) == pytest.approx(3.0, abs=1e-12)


def test_all_off_is_infeasible():
    with pytest.raises(InfeasibleWeightError):
        WeightVector((0, 1), (False, False))


@given(feasible_weights())
def test_realized_power_and_objective_bounds(w):
    geom = ArrayGeometry(w.n)
    hw = HardwareProfile.default(geom)
    v = realize(w, hw)
    assert abs(np.vdot(v, v).real - hw.total_power) <= 1e-9
    for angle in (0.0, 17.0, -45.0):
        assert 0.0 <= los_power_fraction(w, geom, angle, hw) <= 1.0


@given(feasible_weights(n_max=6), st.sampled_from([0.0, 17.0, 45.0, -60.0]))
def test_objective_matches_reference_formula(w, angle):
    geom = ArrayGeometry(w.n)
    hw = HardwareProfile.default(geom)
    ref = los_fraction(w.phase_codes, w.on_bits, w.n, angle)
    assert los_power_fraction(w, geom, angle, hw) == pytest.approx(ref, abs=1e-12)


def test_coherent_beam_gives_unit_objective():
    geom = ArrayGeometry(9)
    hw = HardwareProfile.default(geom)
    assert los_power_fraction(WeightVector((0,) * 9, (True,) * 9), geom, 0.0, hw) == pytest.approx(1.0, abs=1e-12)


def test_discrete_null_two_elements():
    geom = ArrayGeometry(2)
    hw = HardwareProfile.default(geom)
    assert los_power_fraction(WeightVector((0, 2), (True, True)), geom, 0.0, hw) <= 1e-12


def test_three_element_exhaustive_minimum_at_17_degrees():
    geom = ArrayGeometry(3)
    hw = HardwareProfile.default(geom)
    space = list(feasible_space(3))
    assert len(space) == 448
    best, minimizers = exhaustive_minimum(3, 17.0)
    codes = np.array([c for c, _ in space])
    on = np.array([o for _, o in space])
    f = los_fraction_batch(codes, on, geom, 17.0, hw)
    assert f.min() == pytest.approx(best, abs=1e-12)
    winner = space[int(np.argmin(f))]
    assert winner in minimizers


def test_batch_and_scalar_objective_bit_identical():
    geom = ArrayGeometry(9)
    hw = HardwareProfile.default(geom)
    rng = np.random.default_rng(0)
    codes = rng.integers(0, 4, (50, 9))
    on = rng.random((50, 9)) < 0.7
    on[:, 0] = True
    batch = los_fraction_batch(codes, on, geom, 23.0, hw)
    for i in range(50):
        w = WeightVector(tuple(codes[i]), tuple(on[i]))
        assert los_power_fraction(w, geom, 23.0, hw) == batch[i]


def test_weight_equality_ignores_scale():
    a = WeightVector((1, 2, 3), (True, False, True))
    b = WeightVector([1, 2, 3], [1, 0, 1])
    assert a == b and hash(a) == hash(b)
    assert a.scale(HardwareProfile(total_power=3)) != a.scale(HardwareProfile(total_power=5))


def test_serialization_round_trip():
    w = WeightVector((0, 1, 3, 2), (True, True, False, True))
    assert w.serialize() == "codes:0132;on:1101"
    assert WeightVector.parse(w.serialize()) == w
    wide = WeightVector((12, 0, 15), (True, True, True))
    assert WeightVector.parse(wide.serialize()) == wide


def test_random_weight_domain_and_determinism():
    hw = HardwareProfile(total_power=9)
    seq1 = [random_weight(hw, 9, np.random.default_rng(4)) for _ in range(3)]
    rng = np.random.default_rng(4)
    first = random_weight(hw, 9, rng)
    assert first == seq1[0]
    for w in [first] + [random_weight(hw, 9, rng) for _ in range(20)]:
        assert set(w.phase_codes) <= {0, 1, 2, 3}
        assert all(w.on_bits)


def test_random_weight_sequences_reproducible():
    hw = HardwareProfile(total_power=9)
    r1, r2 = np.random.default_rng(8), np.random.default_rng(8)
    assert [random_weight(hw, 9, r1) for _ in range(10)] == [random_weight(hw, 9, r2) for _ in range(10)]


def test_random_weight_code_frequencies_uniform():
    hw = HardwareProfile(total_power=9)
    rng = np.random.default_rng(0)
    codes = np.array([random_weight(hw, 9, rng).phase_codes for _ in range(10_000)])
    for m in range(9):
        freq = np.bincount(codes[:, m], minlength=4) / len(codes)
        assert np.all((freq >= 0.24) & (freq <= 0.26)), (m, freq)


def test_random_weight_allow_off_flag():
    hw = HardwareProfile(total_power=9)
    rng = np.random.default_rng(1)
    ws = [random_weight(hw, 9, rng, allow_off=True) for _ in range(200)]
    assert any(not all(w.on_bits) for w in ws)
    assert all(any(w.on_bits) for w in ws)


@pytest.mark.parametrize("angle", [0.0, 17.0, -38.0, 72.0])
def test_continuous_projection_is_a_null(angle):
    geom = ArrayGeometry(9)
    w = _null_projection(geom, angle, np.random.default_rng(2))
    assert abs(steering_vector(geom, angle) @ w) < 1e-10


def test_practical_null_exact_for_two_elements():
    geom = ArrayGeometry(2)
    hw = HardwareProfile.default(geom)
    for seed in range(20):
        w = null_weight_practical(geom, 0.0, hw, np.random.default_rng(seed))
        assert los_power_fraction(w, geom, 0.0, hw) <= 1e-12


def test_practical_null_is_feasible_but_leaky():
    geom = ArrayGeometry(9)
    hw = HardwareProfile.default(geom)
    rng = np.random.default_rng(0)
    f = [los_power_fraction(null_weight_practical(geom, 17.0, hw, rng), geom, 17.0, hw) for _ in range(200)]
    assert np.mean(f) > 1e-4


def test_ideal_null_properties():
    geom = ArrayGeometry(9)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        angle = float(rng.uniform(-90, 90))
        w = null_weight_ideal(geom, angle, 9.0, rng)
        assert abs(steering_vector(geom, angle) @ w) < 1e-10
        assert np.sum(np.abs(w) ** 2) == pytest.approx(9.0, abs=1e-9)
        assert los_power_fraction(w, geom, angle) < 1e-20


def test_quantize_phase_nearest_with_lower_tie():
    step = np.pi / 2
    phases = np.array([0.0, 0.2, step - 0.1, 0.5 * step, 1.5 * step, 3.5 * step, 3.6 * step, -0.1])
    np.testing.assert_array_equal(quantize_phase(phases, 2), [0, 0, 1, 0, 1, 3, 0, 0])


def test_directional_codebook_shape_and_broadside_beam():
    geom = ArrayGeometry(9)
    hw = HardwareProfile.default(geom)
    book = directional_codebook(geom, hw)
    assert book.shape == (181, 9)
    np.testing.assert_allclose(book[90], np.ones(9))
    np.testing.assert_allclose(np.sum(np.abs(book) ** 2, axis=1), 9.0)
