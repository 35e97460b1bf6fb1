import math
from fractions import Fraction

import numpy as np
import pytest

from classical_casimir.core import Channel, DomainError, MirrorModel, geometry_from_x, make_geometry
from classical_casimir.linalg import log_det_one_minus
from classical_casimir.scattering import (
    RAW,
    balance,
    balance_dense,
    build_channel_matrix,
    electric_coefficient,
    magnetic_coefficient,
    translation_kernel,
)
from classical_casimir.specfun import log_binomial
from oracles import exact_electric_coefficient, image_round_trip, mie_small_frequency, mp_log_det_one_minus

E, M = Channel.ELECTRIC, Channel.MAGNETIC


@pytest.mark.parametrize("ell, expected", [(1, Fraction(-2, 3)), (2, Fraction(1, 30)),
                                           (3, Fraction(-4, 4725))])
def test_electric_coefficient_examples(ell, expected):
    for model in ("drude", "perfect"):
        assert float(electric_coefficient(ell, model)) == pytest.approx(float(expected), rel=1e-14)


def test_magnetic_coefficient_examples():
    assert float(magnetic_coefficient(1, "perfect")) == pytest.approx(1 / 3, rel=1e-14)
    assert magnetic_coefficient(1, "drude").is_zero
    assert float(magnetic_coefficient(2, "perfect")) == pytest.approx(-1 / 45, rel=1e-14)
    with pytest.raises(DomainError):
        electric_coefficient(0)


@pytest.mark.parametrize("ell", range(1, 40))
def test_coefficient_invariants(ell):
    a = electric_coefficient(ell)
    b = magnetic_coefficient(ell)
    assert a.sign == (-1) ** ell
    assert b.sign == (-1) ** (ell + 1)
    assert b.log_magnitude - a.log_magnitude == pytest.approx(math.log(ell / (ell + 1)), abs=1e-13)
    if ell <= 15:
        assert float(a) == pytest.approx(float(exact_electric_coefficient(ell)), rel=1e-13)


@pytest.mark.parametrize("ell", [1, 2, 3, 4, 6])
def test_coefficients_match_small_frequency_mie(ell):
    # Leading power of the exact perfect-conductor amplitudes, Richardson
    # extrapolated in xi^2 from two small frequencies.
    xs = (2e-3, 1e-3)
    ratios = [np.array(mie_small_frequency(ell, xi)) / xi ** (2 * ell + 1) for xi in xs]
    limit = (4 * ratios[1] - ratios[0]) / 3
    assert limit[0] == pytest.approx(float(electric_coefficient(ell)), rel=1e-8)
    assert limit[1] == pytest.approx(float(magnetic_coefficient(ell)), rel=1e-8)


@pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("channel", [E, M])
@pytest.mark.parametrize("m", [0, 1, 2])
def test_raw_block_matches_image_quadrature(x, channel, m):
    g = geometry_from_x(x)
    oracle = image_round_trip(g.z, m, 4, channel.value)
    built = build_channel_matrix(g, "perfect", channel, m, 4, convention=RAW).to_dense()
    np.testing.assert_allclose(built, oracle, rtol=1e-10, atol=0)


@pytest.mark.parametrize("channel", [E, M])
@pytest.mark.parametrize("m", [0, 1, 2])
def test_symmetric_block_is_similar_to_raw(channel, m):
    g = geometry_from_x(0.5)
    raw = build_channel_matrix(g, "perfect", channel, m, 30, convention=RAW)
    sym = build_channel_matrix(g, "perfect", channel, m, 30)
    balanced_raw = balance(raw).entries
    np.testing.assert_allclose(balanced_raw, balance(sym).entries, rtol=1e-12, atol=1e-300)
    assert log_det_one_minus(balance(raw)).value == pytest.approx(
        log_det_one_minus(balance(sym)).value, rel=1e-12)


def test_kernel_times_mie_gives_entries():
    g = geometry_from_x(0.7)
    for channel in (E, M):
        block = build_channel_matrix(g, "perfect", channel, 1, 8)
        for ell in range(1, 9):
            for lp in range(1, 9):
                c_l = electric_coefficient(ell) if channel is E else magnetic_coefficient(ell)
                c_lp = electric_coefficient(lp) if channel is E else magnetic_coefficient(lp)
                k = translation_kernel(g, ell, lp, 1, channel)
                expected = c_l.sign * k.sign * math.exp(
                    0.5 * (c_l.log_magnitude + c_lp.log_magnitude) + k.log_magnitude)
                assert float(block.entry(ell, lp)) == pytest.approx(expected, rel=1e-12)
                assert k.log_magnitude == pytest.approx(
                    translation_kernel(g, lp, ell, 1, channel).log_magnitude, rel=1e-14)


@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_dipole_closed_form(x):
    z = 1.0 / (1.0 + x)
    g = geometry_from_x(x)
    m0 = build_channel_matrix(g, "drude", E, 0, 1)
    m1 = build_channel_matrix(g, "drude", E, 1, 1)
    assert m0.dimension == 1
    assert float(m0.entry(1, 1)) == pytest.approx(z**3 / 4, rel=1e-12)
    assert float(m1.entry(1, 1)) == pytest.approx(z**3 / 8, rel=1e-12)
    assert float(build_channel_matrix(g, "perfect", M, 0, 1).entry(1, 1)) == pytest.approx(z**3 / 8, rel=1e-12)


def test_dimension_and_errors():
    g = geometry_from_x(1.0)
    assert build_channel_matrix(g, "perfect", E, 0, 10).dimension == 10
    assert build_channel_matrix(g, "perfect", E, 4, 10).dimension == 7
    with pytest.raises(DomainError):
        build_channel_matrix(g, "drude", M, 0, 10)
    with pytest.raises(DomainError):
        build_channel_matrix(g, "perfect", E, 5, 4)


def test_power_law_in_z():
    g1, g2 = geometry_from_x(0.2), geometry_from_x(3.0)
    for channel in (E, M):
        b1 = build_channel_matrix(g1, "perfect", channel, 2, 25)
        b2 = build_channel_matrix(g2, "perfect", channel, 2, 25)
        ells = b1.ells
        expected = (ells[:, None] + ells[None, :] + 1) * (math.log(g2.z) - math.log(g1.z))
        np.testing.assert_allclose(b2.logs - b1.logs, expected, rtol=1e-13, atol=1e-11)


def test_large_separation_decoupling():
    big = build_channel_matrix(geometry_from_x(1e6), "drude", E, 0, 5)
    assert np.all(np.abs(big.to_dense()) < 1e-17)


@pytest.mark.parametrize("x", [0.01, 0.3, 5.0])
@pytest.mark.parametrize("m", [0, 3, 17])
def test_balanced_electric_block_symmetric(x, m):
    b = balance(build_channel_matrix(geometry_from_x(x), "drude", E, m, 60)).entries
    np.testing.assert_array_equal(b, b.T)


def test_balanced_entries_bounded_by_diagonal():
    # |M_ll'| / sqrt(M_ll M_l'l') = C(l+l', l) / sqrt(C(2l, l) C(2l', l')) <= 1
    for ell in range(1, 51):
        for lp in range(1, 51):
            ratio = log_binomial(ell + lp, ell) - 0.5 * (log_binomial(2 * ell, ell) + log_binomial(2 * lp, lp))
            assert ratio <= 1e-12
    block = balance(build_channel_matrix(geometry_from_x(0.2), "perfect", E, 0, 2)).entries
    assert abs(block[0, 1]) <= math.sqrt(block[0, 0] * block[1, 1]) * (1 + 1e-12)


def test_balance_one_by_one():
    block = build_channel_matrix(geometry_from_x(2.0), "drude", E, 0, 1)
    b = balance(block)
    assert b.entries[0, 0] == pytest.approx(float(block.entry(1, 1)))
    assert b.diagonal_logs[0] == block.logs[0, 0]


def test_balance_random_similarity():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = 20
        a = rng.standard_normal((n, n))
        a *= 0.9 / np.max(np.abs(np.linalg.eigvals(a)))
        d = rng.uniform(-300, 300, n)
        # M = D A D^-1 with entries far outside the double range, in log form.
        logs = np.log(np.abs(a)) + d[:, None] - d[None, :]
        signs = np.sign(a).astype(np.int8)
        entries, _ = balance_dense(signs, logs)
        assert log_det_one_minus(entries).value == pytest.approx(mp_log_det_one_minus(a), rel=1e-10)
