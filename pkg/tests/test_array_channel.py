import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamkey.array_channel import (
    PURE_LOS,
    PURE_NLOS,
    ArrayGeometry,
    NoiseModel,
    calibrate_noise,
    draw_channel,
    observe,
    parse_db,
    steering_vector,
)
from beamkey.beam_weights import HardwareProfile, directional_codebook
from beamkey.errors import ConfigError, InputDomainError

angles = st.floats(min_value=-90, max_value=90, allow_nan=False)


def test_steering_broadside_two_elements():
    np.testing.assert_allclose(steering_vector(ArrayGeometry(2), 0.0), [1, 1], atol=1e-15)


def test_steering_endfire_two_elements():
    np.testing.assert_allclose(steering_vector(ArrayGeometry(2), 90.0), [1, -1], atol=1e-15)


def test_steering_thirty_degrees_matches_hand_evaluation():
    a = steering_vector(ArrayGeometry(9), 30.0)
    expected = [cmath.exp(-1j * math.pi * m * 0.5) for m in range(9)]
    np.testing.assert_allclose(a, expected, atol=1e-12)
    assert abs(a[2] - (-1)) < 1e-12
    assert a[0] == 1 + 0j


@pytest.mark.parametrize("bad", [-90.5, 91.0, 180.0])
def test_steering_rejects_out_of_range(bad):
    with pytest.raises(InputDomainError):
        steering_vector(ArrayGeometry(4), bad)


@pytest.mark.parametrize("kwargs", [{"n_antennas": 1}, {"spacing_wavelengths": 0}, {"spacing_wavelengths": 1.5}])
def test_geometry_invariants(kwargs):
    with pytest.raises(ConfigError):
        ArrayGeometry(**kwargs)


@given(angles, st.integers(min_value=2, max_value=16))
def test_steering_unit_modulus_and_conjugate_symmetry(angle, n):
    geom = ArrayGeometry(n)
    a = steering_vector(geom, angle)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)
    np.testing.assert_allclose(steering_vector(geom, -angle), np.conj(a), atol=1e-12)


def test_pure_los_and_pure_nlos_sentinels():
    geom = ArrayGeometry(5)
    los = draw_channel(geom, 20.0, PURE_LOS, np.random.default_rng(1))
    np.testing.assert_array_equal(los.h, steering_vector(geom, 20.0))
    nlos = draw_channel(geom, 20.0, PURE_NLOS, np.random.default_rng(1))
    np.testing.assert_array_equal(nlos.h, nlos.nlos)
    assert parse_db("inf") == PURE_LOS and parse_db("−inf") == PURE_NLOS


def test_channel_composition_and_reproducibility():
    geom = ArrayGeometry(9)
    c1 = draw_channel(geom, -12.0, 7.0, np.random.default_rng(42))
    c2 = draw_channel(geom, -12.0, 7.0, np.random.default_rng(42))
    assert c1.h.tobytes() == c2.h.tobytes()
    k = 10 ** 0.7
    expected = math.sqrt(k / (k + 1)) * steering_vector(geom, -12.0) + math.sqrt(1 / (k + 1)) * c1.nlos
    np.testing.assert_allclose(c1.h, expected, rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        c1.h[0] = 0


def _empirical_k_ratio(k_db, draws=10_000, seed=0):
    geom = ArrayGeometry(9)
    rng = np.random.default_rng(seed)
    k = 10 ** (k_db / 10)
    w_nlos = math.sqrt(1 / (k + 1))
    los_power = nlos_power = 0.0
    for _ in range(draws):
        ch = draw_channel(geom, 0.0, k_db, rng)
        nlos_part = w_nlos * ch.nlos
        los_part = ch.h - nlos_part
        los_power += np.sum(np.abs(los_part) ** 2)
        nlos_power += np.sum(np.abs(nlos_part) ** 2)
    return los_power / nlos_power


def test_k_factor_zero_db_ratio_near_one():
    assert 0.94 <= _empirical_k_ratio(0.0) <= 1.06


def test_nlos_unit_variance():
    geom = ArrayGeometry(9)
    rng = np.random.default_rng(3)
    samples = np.concatenate([draw_channel(geom, 0, PURE_NLOS, rng).h for _ in range(5000)])
    assert abs(np.mean(np.abs(samples) ** 2) - 1.0) < 0.03
    assert abs(np.mean(samples)) < 0.03


def test_calibrate_noise_zero_db_equals_best_power():
    geom = ArrayGeometry(2)
    h = np.array([1.0, 0.0])
    noise = calibrate_noise(geom, h, 0.0, training_codebook=[[3.0, 0.0], [1.0, 1.0]])
    assert noise.noise_power == pytest.approx(9.0)


def test_calibrate_noise_ten_db():
    geom = ArrayGeometry(2)
    noise = calibrate_noise(geom, np.array([1.0, 0.0]), 10.0, training_codebook=[[3.0, 0.0]])
    assert noise.noise_power == pytest.approx(0.9)


def test_calibrate_noise_pure_los_broadside():
    geom = ArrayGeometry(9)
    hw = HardwareProfile.default(geom)
    h = draw_channel(geom, 0.0, PURE_LOS, np.random.default_rng(0))
    book = directional_codebook(geom, hw)
    p_best = float(np.max(np.abs(book @ h.h) ** 2))
    assert p_best == pytest.approx(81.0, abs=1e-9)
    noise = calibrate_noise(geom, h, 31.4, hw=hw)
    assert noise.noise_power == pytest.approx(81 / 10**3.14, rel=1e-12)
    assert noise.noise_power == pytest.approx(0.0587, abs=5e-5)


def test_calibrate_noise_rejects_empty_codebook():
    with pytest.raises(ConfigError):
        calibrate_noise(ArrayGeometry(2), np.ones(2), 10.0, training_codebook=np.empty((0, 2)))


def test_calibrate_noise_infinite_snr_is_noiseless():
    noise = calibrate_noise(ArrayGeometry(3), np.ones(3), "inf")
    assert noise.noise_power == 0.0


def test_observe_noiseless_is_exact():
    rng = np.random.default_rng(0)
    h = np.array([1 + 2j, -0.5j, 3.0])
    w = np.array([1j, 1.0, -1.0])
    assert observe(h, w, NoiseModel(0.0, math.inf), rng) == complex(h @ w)


def test_observe_perfect_null_leaves_only_noise():
    rng = np.random.default_rng(5)
    h = np.array([1.0, 1.0])
    w = np.array([1.0, -1.0]) / math.sqrt(2)
    assert observe(h, w, NoiseModel(0.0, math.inf), rng) == 0
    ys = np.array([observe(h, w, NoiseModel(1.0, 0.0), rng) for _ in range(20_000)])
    assert abs(ys.mean()) < 0.03


def test_observe_noise_variance():
    rng = np.random.default_rng(11)
    h = np.array([0.3 - 1j, 2.0])
    w = np.array([1.0, 1j])
    clean = complex(h @ w)
    noise = NoiseModel(1.0, 0.0)
    z = np.array([observe(h, w, noise, rng) for _ in range(100_000)]) - clean
    assert 0.99 <= np.var(z) <= 1.01


@settings(max_examples=50)
@given(
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=4, max_size=4),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.integers(0, 2**32),
)
def test_observe_is_linear_in_weights(hs, alpha, beta, seed):
    rng = np.random.default_rng(seed)
    h = np.array(hs)
    w1 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    w2 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    silent = NoiseModel(0.0, math.inf)
    lhs = observe(h, alpha * w1 + beta * w2, silent, rng)
    rhs = alpha * observe(h, w1, silent, rng) + beta * observe(h, w2, silent, rng)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))
