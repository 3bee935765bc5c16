import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from expofuse import metrics
from expofuse.baselines import max_fuse
from expofuse.metrics import entropy, evaluate_all, mutual_information, qabf, ssim, vif, vif_fusion

planes16 = arrays(np.float64, (16, 16), elements=st.floats(0, 1))


def textured(rng, shape):
    return np.clip(rng.random(shape) * 0.6 + 0.2, 0, 1)


# entropy / mutual information ---------------------------------------------------

def test_entropy_examples(rng):
    assert entropy(np.full((8, 8), 0.4)) == 0.0
    half = np.zeros((4, 4))
    half[:2] = 1.0
    assert entropy(half) == pytest.approx(1.0, abs=1e-15)
    p = rng.random((16, 16))
    assert entropy(p) == pytest.approx(oracles.entropy(p), abs=1e-12)


def test_mi_examples(rng):
    p = rng.random((16, 16))
    assert mutual_information(p, p) == pytest.approx(entropy(p), abs=1e-12)
    assert mutual_information(p, np.full_like(p, 0.3)) == 0.0
    q = rng.random((16, 16))
    assert mutual_information(p, q) == pytest.approx(oracles.mutual_information(p, q), abs=1e-12)
    with pytest.raises(ValueError):
        mutual_information(p, q[:, :8])


@settings(max_examples=40)
@given(planes16, planes16)
def test_mi_symmetric_and_bounded(a, b):
    mab, mba = mutual_information(a, b), mutual_information(b, a)
    assert mab == pytest.approx(mba, abs=1e-12)
    assert 0 <= mab <= min(entropy(a), entropy(b)) + 1e-9
    assert 0 <= entropy(a) <= 8


# SSIM ---------------------------------------------------------------------------

def test_ssim_examples(rng):
    a = rng.random((32, 32))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    c1 = 0.01 ** 2
    expect = (2 * 0.3 * 0.7 + c1) / (0.3 ** 2 + 0.7 ** 2 + c1)
    assert ssim(np.full((12, 12), 0.3), np.full((12, 12), 0.7)) == pytest.approx(expect, abs=1e-12)
    b = rng.random((32, 32))
    assert ssim(a, b) == pytest.approx(oracles.ssim(a, b), abs=1e-9)
    with pytest.raises(ValueError):
        ssim(a[:10, :10], b[:10, :10])


def test_ssim_symmetric_and_ranged(rng):
    for _ in range(10):
        a, b = rng.random((20, 24)), rng.random((20, 24))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-14)
        assert -1 <= ssim(a, b) <= 1
        assert -1 <= ssim(a, 1 - a) <= 1


# Qabf ---------------------------------------------------------------------------

def test_qabf_examples(rng):
    a = textured(rng, (16, 16))
    assert qabf(a, a, a) == pytest.approx(1.0, abs=1e-9)
    b = textured(rng, (16, 16))
    assert qabf(a, b, np.full_like(a, 0.5)) == pytest.approx(0.0, abs=1e-9)
    f = rng.random((16, 16))
    assert qabf(a, b, f) == pytest.approx(oracles.qabf(a, b, f), abs=1e-12)


def test_qabf_region_matches_oracle(rng):
    a, b, f = (rng.random((16, 16)) for _ in range(3))
    region = rng.random((16, 16)) < 0.3
    assert qabf(a, b, f, region) == pytest.approx(oracles.qabf(a, b, f, region), abs=1e-12)


def test_qabf_flat_sources_give_zero():
    flat = np.full((8, 8), 0.2)
    assert qabf(flat, flat, np.eye(8)) == 0.0


def test_qabf_equal_strength_opposite_sign_is_full():
    # orientation is taken modulo pi, so a sign flip is not a loss
    a = np.tile(np.linspace(0, 1, 16), (16, 1))
    assert qabf(a, a, 1 - a) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30)
@given(planes16, planes16, planes16)
def test_qabf_symmetric_and_ranged(a, b, f):
    q = qabf(a, b, f)
    assert 0 <= q <= 1
    assert q == pytest.approx(qabf(b, a, f), abs=1e-12)


# VIF ----------------------------------------------------------------------------

def test_vif_identity_and_constant(rng):
    a = textured(rng, (64, 64))
    b = textured(rng, (64, 64))
    assert vif(a, a) == pytest.approx(1.0, abs=1e-6)
    assert vif_fusion(a, a, a) == pytest.approx(1.0, abs=1e-6)
    assert vif_fusion(a, b, np.full_like(a, 0.5)) < 0.05


def test_vif_matches_scale_by_scale_oracle(rng):
    for _ in range(3):
        a, f = rng.random((64, 64)), rng.random((64, 64))
        f = 0.5 * a + 0.5 * f
        assert vif(a, f) == pytest.approx(oracles.vif_single(a, f), abs=1e-6)


def test_vif_sum_mode_and_size_limits(rng):
    a, b, f = (rng.random((48, 44)) for _ in range(3))
    assert vif_fusion(a, b, f, mode="sum") == pytest.approx(2 * vif_fusion(a, b, f), abs=1e-12)
    side = metrics.vif_min_size()
    assert side == 41
    vif(rng.random((side, side)), rng.random((side, side)))
    with pytest.raises(ValueError, match="at least 41"):
        vif(rng.random((side - 1, side)), rng.random((side - 1, side)))
    with pytest.raises(ValueError):
        vif_fusion(a, b, f, mode="median")


# evaluate_all ---------------------------------------------------------------------

def test_evaluate_identity(rng):
    x = textured(rng, (64, 64))
    rep = evaluate_all(x, x, x)
    assert rep.ssim == pytest.approx(1.0, abs=1e-9)
    assert rep.qabf == pytest.approx(1.0, abs=1e-9)
    assert rep.vif == pytest.approx(1.0, abs=1e-6)
    assert rep.mi == pytest.approx(2 * entropy(x), abs=1e-9)


def test_evaluate_constant_fused(rng):
    vi, ir = textured(rng, (48, 48)), textured(rng, (48, 48))
    rep = evaluate_all(vi, ir, np.full_like(vi, 0.5))
    assert rep.en == 0.0 and rep.qabf == pytest.approx(0.0, abs=1e-9)


def test_evaluate_composes_single_metrics(mini_pairs):
    for pair in mini_pairs:
        vi, ir = pair["vi_oe"], pair["ir"]
        f = max_fuse(vi, ir)
        rep = evaluate_all(vi, ir, f)
        assert rep.columns() == {
            "EN": entropy(f),
            "MI": mutual_information(vi, f) + mutual_information(ir, f),
            "VIF": (vif(vi, f) + vif(ir, f)) / 2,
            "Qabf": qabf(vi, ir, f),
            "SSIM": (ssim(vi, f) + ssim(ir, f)) / 2,
        }
        assert rep.columns()["EN"] == pytest.approx(oracles.entropy(f), abs=1e-12)
        assert all(math.isfinite(v) for v in rep.columns().values())
        assert rep.params["vif_mode"] == "mean"
