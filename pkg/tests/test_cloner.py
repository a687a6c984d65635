import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twoway_qkd.cloner import (
    GqcmParams,
    UncertaintyViolationError,
    gqcm_joint_cm,
    joint_output_state,
    sample_asymmetric_kept_clone,
    sample_asymmetric_sent_clone,
    sample_symmetric_pair,
    validate,
)
from twoway_qkd.core_math import ComplexAmplitude
from twoway_qkd.phase_space import partial_trace, symplectic_eigenvalues_brute

N = 10**6


def test_params_symmetric_optimal():
    p = validate(GqcmParams(0.5, 0.5))
    assert p.is_optimal and p.is_symmetric


def test_params_asymmetric_optimal():
    p = GqcmParams(0.3, 1 / (4 * 0.3))
    assert p.is_optimal and not p.is_symmetric
    assert GqcmParams.optimal(0.3) == p


def test_params_reject_uncertainty_violation():
    with pytest.raises(UncertaintyViolationError):
        GqcmParams(0.4, 0.4)
    with pytest.raises(ValueError):
        GqcmParams(0.0, 1.0)
    assert not GqcmParams(1.0, 1.0).is_optimal


def test_joint_cm_blocks_at_half():
    v = gqcm_joint_cm(0.5)
    np.testing.assert_array_equal(v[:2, :2], np.eye(2))
    np.testing.assert_array_equal(v[2:, 2:], np.eye(2))
    np.testing.assert_array_equal(v[:2, 2:], 0.5 * np.eye(2))
    np.testing.assert_allclose(symplectic_eigenvalues_brute(v), [0.5, 1.5], atol=1e-12)
    with pytest.raises(ValueError):
        gqcm_joint_cm(0.0)


@given(st.floats(1e-3, 1e3))
def test_joint_cm_optimality_identity(s):
    v = gqcm_joint_cm(s)
    assert (v[0, 0] - 0.5) * (v[2, 2] - 0.5) == pytest.approx(0.25, rel=1e-12)
    assert (v[1, 1] - 0.5) * (v[3, 3] - 0.5) == pytest.approx(0.25, rel=1e-12)
    assert symplectic_eigenvalues_brute(v)[0] >= 0.5 - 1e-9


def test_joint_output_state():
    s = joint_output_state(ComplexAmplitude(0, 0), 0.5)
    np.testing.assert_array_equal(s.mean, 0)
    np.testing.assert_array_equal(s.cov, gqcm_joint_cm(0.5))
    one = partial_trace(joint_output_state(ComplexAmplitude(3, -1), 0.2), [0])
    np.testing.assert_allclose(one.cov, 0.7 * np.eye(2))
    assert one.mode_mean(0) == (3, -1)
    assert joint_output_state(ComplexAmplitude(3, -1), 0.2).mode_mean(1) == (3, -1)


def test_universality():
    rng = np.random.default_rng(0)
    ref = joint_output_state(ComplexAmplitude(0, 0), 0.8).cov
    for _ in range(10):
        amp = ComplexAmplitude(*rng.normal(0, 30, 2))
        np.testing.assert_array_equal(joint_output_state(amp, 0.8).cov, ref)


def test_symmetric_pair_labels_equal():
    rng = np.random.default_rng(1)
    for _ in range(100):
        inp = ComplexAmplitude(*rng.normal(size=2))
        s = sample_symmetric_pair(inp, rng)
        assert s.clone1 == s.clone2 == inp + s.shared_shift
    batch = sample_symmetric_pair(np.zeros((N, 2)), rng)
    assert np.array_equal(batch.clone1, batch.clone2)
    np.testing.assert_allclose(batch.shared_shift.var(axis=0, ddof=1), 0.5, rtol=0.01)


def _entry_standard_errors(samples: np.ndarray, emp: np.ndarray) -> np.ndarray:
    c = samples - samples.mean(axis=0)
    n = samples.shape[0]
    prod = c[:, :, None] * c[:, None, :]
    return np.sqrt(((prod - emp) ** 2).mean(axis=0) / n)


def test_decomposition_matches_joint_cm():
    """Coherent labels displaced by a shared mu, plus vacuum noise, reproduce the clone CM."""
    rng = np.random.default_rng(2)
    pair = sample_symmetric_pair(np.zeros((N, 2)), rng)
    quad = np.hstack([pair.clone1, pair.clone2]) + rng.normal(0, math.sqrt(0.5), (N, 4))
    emp = np.cov(quad.T)
    se = _entry_standard_errors(quad, emp)
    assert np.all(np.abs(emp - gqcm_joint_cm(0.5)) < 3 * se)


def test_asymmetric_kept_clone():
    rng = np.random.default_rng(3)
    zero = np.zeros((N, 2))
    np.testing.assert_allclose(sample_asymmetric_kept_clone(zero, 0.25, rng).var(axis=0, ddof=1), 1.0, rtol=0.01)
    inp = np.tile([2.0, -5.0], (N, 1))
    out = sample_asymmetric_kept_clone(inp, 0.5, rng)
    np.testing.assert_allclose(out.var(axis=0, ddof=1), 0.5, rtol=0.01)
    assert np.all(np.abs(out.mean(axis=0) - [2.0, -5.0]) < 3 * math.sqrt(0.5 / N))
    assert isinstance(sample_asymmetric_kept_clone(ComplexAmplitude(1, 1), 0.5, rng), ComplexAmplitude)
    with pytest.raises(ValueError):
        sample_asymmetric_kept_clone(zero, 0.0, rng)


def test_asymmetric_sent_clone():
    rng = np.random.default_rng(4)
    zero = np.zeros((N, 2))
    nu = sample_asymmetric_sent_clone(zero, 0.5, rng)
    np.testing.assert_allclose(nu.var(axis=0, ddof=1), 0.5, rtol=0.01)
    lam = sample_asymmetric_kept_clone(zero, 0.5, rng)
    assert abs(np.corrcoef(nu[:, 0], lam[:, 0])[0, 1]) < 0.005
    with pytest.raises(ValueError):
        sample_asymmetric_sent_clone(zero, -1.0, rng)


@pytest.mark.parametrize("omega_sq", [0.25, 0.5, 1.5])
def test_bob_path_accumulated_noise(omega_sq):
    rng = np.random.default_rng(5)
    beta = rng.normal(0, 10, (N, 2))
    fwd = sample_symmetric_pair(beta, rng).clone1
    back = sample_asymmetric_sent_clone(fwd, omega_sq, rng)
    np.testing.assert_allclose((back - beta).var(axis=0, ddof=1), 0.5 + omega_sq, rtol=0.01)
