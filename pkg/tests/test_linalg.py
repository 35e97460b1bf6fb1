import math

import numpy as np
import pytest
import scipy.linalg

from classical_casimir.core import Channel, geometry_from_x
from classical_casimir.linalg import NonContractionError, log_det_one_minus, spectral_radius_estimate
from classical_casimir.scattering import balance, build_channel_matrix
from oracles import mp_log_det_one_minus


def random_contraction(rng, n, symmetric=False, radius=0.9):
    a = rng.standard_normal((n, n))
    if symmetric:
        a = a + a.T
    return a * radius / np.max(np.abs(np.linalg.eigvals(a)))


def test_trivial_values():
    for n in (1, 5, 40):
        assert log_det_one_minus(np.zeros((n, n))).value == 0.0
    r = log_det_one_minus(np.array([[0.5]]))
    assert r.value == pytest.approx(-0.6931471805599453, rel=1e-15)
    assert r.sign_product == 1 and r.dimension == 1


def test_random_symmetric_50_against_extended_precision():
    a = random_contraction(np.random.default_rng(50), 50, symmetric=True)
    assert log_det_one_minus(a).value == pytest.approx(mp_log_det_one_minus(a), rel=1e-10)


def test_similarity_invariance():
    rng = np.random.default_rng(11)
    for n in (3, 17, 40):
        a = random_contraction(rng, n)
        d = np.diag(np.exp(rng.uniform(-5, 5, n)))
        b = d @ a @ np.linalg.inv(d)
        assert log_det_one_minus(b).value == pytest.approx(mp_log_det_one_minus(a), rel=1e-10)


def test_block_additivity():
    rng = np.random.default_rng(5)
    a = random_contraction(rng, 12, symmetric=True)
    b = random_contraction(rng, 7)
    both = scipy.linalg.block_diag(a, b)
    assert log_det_one_minus(both).value == pytest.approx(
        log_det_one_minus(a).value + log_det_one_minus(b).value, rel=1e-12)


def test_non_contraction_rejected():
    with pytest.raises(NonContractionError):
        log_det_one_minus(np.array([[1.5]]))
    with pytest.raises(NonContractionError):
        log_det_one_minus(np.array([[1.0]]))


def test_spectral_radius():
    assert spectral_radius_estimate(np.diag([0.3, 0.7]), 200) >= 0.7 - 1e-6
    assert spectral_radius_estimate(np.zeros((4, 4)), 10) == 0.0


# Regression pin; the largest eigenvalue from a dense solver is the reference.
PHYSICAL_RADIUS = 0.39541951001


def test_physical_block_radius():
    block = balance(build_channel_matrix(geometry_from_x(0.1), "drude", Channel.ELECTRIC, 0, 50))
    estimate = spectral_radius_estimate(block, 200)
    exact = np.max(np.abs(np.linalg.eigvalsh(block.entries)))
    assert estimate == pytest.approx(exact, rel=1e-10)
    assert estimate == pytest.approx(PHYSICAL_RADIUS, rel=1e-9)
    assert estimate < 1.0


def test_monotone_truncation():
    g = geometry_from_x(0.1)
    values = [abs(log_det_one_minus(balance(build_channel_matrix(g, "perfect", ch, 2, lmax))).value)
              for ch in (Channel.ELECTRIC, Channel.MAGNETIC) for lmax in (5, 10, 20, 40)]
    for ch in range(2):
        seq = values[4 * ch: 4 * ch + 4]
        assert all(b >= a for a, b in zip(seq, seq[1:]))


def test_large_block_is_stable():
    block = balance(build_channel_matrix(geometry_from_x(0.002), "drude", Channel.ELECTRIC, 3, 3000))
    r = log_det_one_minus(block)
    assert math.isfinite(r.value) and r.value < 0 and r.dimension == 2998


def test_series_branch_keeps_tiny_contributions():
    m = np.diag([1e-30, 2e-40])
    report = log_det_one_minus(m)
    assert report.value == pytest.approx(-1e-30, rel=1e-14)


@pytest.mark.parametrize("scale", [0.01, 0.049, 0.051, 0.2])
def test_series_and_lu_agree_near_crossover(scale):
    rng = np.random.default_rng(7)
    a = rng.standard_normal((12, 12))
    m = scale * (a + a.T) / np.linalg.norm(a + a.T)
    expected = float(mp_log_det_one_minus(m))
    assert log_det_one_minus(m).value == pytest.approx(expected, rel=1e-13)
