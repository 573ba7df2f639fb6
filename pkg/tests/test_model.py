import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amlediff.errors import DomainError, InputError, SingularDiffusionError
from amlediff.heston import HestonParams, heston_model
from amlediff.model import (
    ModelSpec,
    ParameterDomain,
    check_drift_jacobian,
    check_uniform_ellipticity,
    eval_diffusion_matrix,
    eval_drift,
    invert_diffusion_matrix,
    sensitivity_g,
)
from amlediff.models import ou_model

X_PAPER = np.array([0.5, math.log(100.0)])
THETA_PAPER = np.array([2.0, -0.8, 0.02, 2.0])


def identity_model(k=2, scale=1.0):
    """mu(x, theta) = theta (k = d), nu = scale * I."""
    return ModelSpec(
        name="ident",
        k=k,
        d=k,
        drift=lambda x, th: np.broadcast_to(th, np.shape(x)).astype(float),
        diffusion=lambda x: np.broadcast_to(scale * np.eye(k), np.shape(x)[:-1] + (k, k)).copy(),
        drift_jac_theta=lambda x, th: np.broadcast_to(np.eye(k), np.shape(x)[:-1] + (k, k)).copy(),
        drift_affine=True,
    )


def test_heston_drift_by_hand(heston):
    assert np.allclose(eval_drift(heston, X_PAPER, THETA_PAPER), [2.4, -0.98], atol=1e-15)


def test_zero_drift_and_zero_params(heston):
    zero = ModelSpec("zero", 2, 3, drift=lambda x, th: np.zeros(np.shape(x)),
                     diffusion=lambda x: np.broadcast_to(np.eye(2), np.shape(x)[:-1] + (2, 2)).copy())
    assert not eval_drift(zero, [1.0, -4.0], [1.0, 2.0, 3.0]).any()
    assert not eval_drift(heston, [1.7, 3.0], np.zeros(4)).any()


def test_drift_domain_violation_names_component(heston):
    with pytest.raises(DomainError, match="Y"):
        eval_drift(heston, [-0.1, 1.0], THETA_PAPER)
    with pytest.raises(InputError):
        eval_drift(heston, [0.1, 1.0], [1.0, 2.0])


def test_diffusion_matrix_identity_and_heston(heston):
    assert np.array_equal(eval_diffusion_matrix(identity_model(), [3.0, 4.0]), np.eye(2))
    S = eval_diffusion_matrix(heston, X_PAPER)
    assert np.allclose(S, [[0.245, -0.168], [-0.168, 0.18]], atol=1e-15)
    assert np.max(np.abs(S - S.T)) <= 1e-14 * np.abs(S).max()


def test_zero_diffusion_is_flagged():
    m = identity_model(scale=0.0)
    S = eval_diffusion_matrix(m, [0.0, 0.0])
    assert not S.any()
    with pytest.raises(SingularDiffusionError):
        invert_diffusion_matrix(S)


def test_invert_simple():
    assert np.allclose(invert_diffusion_matrix(np.eye(3)), np.eye(3))
    assert np.allclose(invert_diffusion_matrix(np.diag([4.0, 0.25])), np.diag([0.25, 4.0]))


def test_invert_heston_against_adjugate(heston):
    S = eval_diffusion_matrix(heston, X_PAPER)
    adj = np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]]) / (S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0])
    inv = invert_diffusion_matrix(S)
    assert np.max(np.abs(inv - adj)) <= 1e-12 * np.abs(adj).max()
    assert np.max(np.abs(S @ inv - np.eye(2))) <= 1e-12
    assert np.array_equal(inv, inv.T)


def test_invert_stack_reports_index():
    stack = np.stack([np.eye(2), np.eye(2), np.diag([1.0, 0.0])])
    with pytest.raises(SingularDiffusionError) as info:
        invert_diffusion_matrix(stack)
    assert info.value.index == 2


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_invert_product_is_identity(seed, n):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((n, n)) + 2 * np.eye(n)
    S = F @ F.T + 0.1 * np.eye(n)
    assert np.max(np.abs(S @ invert_diffusion_matrix(S) - np.eye(n))) <= 1e-10


def test_sensitivity_identity_model():
    m = identity_model(k=3)
    for j in range(3):
        assert np.allclose(sensitivity_g(m, [0.1, 0.2, 0.3], np.ones(3), j), np.eye(3)[j])


def test_sensitivity_heston_b_constant(heston):
    expected = -(1 / 0.36) * np.array([1 / 0.49, 0.8 / 0.42])
    for y in (0.05, 0.5, 3.0):
        g = sensitivity_g(heston, [y, 4.0], THETA_PAPER, 1)
        assert np.allclose(g, expected, rtol=1e-12)


def test_sensitivity_zero_column():
    m = ModelSpec("partial", 2, 2,
                  drift=lambda x, th: np.stack([th[0] * np.ones(np.shape(x)[:-1]), np.zeros(np.shape(x)[:-1])], -1),
                  diffusion=lambda x: np.broadcast_to(np.eye(2), np.shape(x)[:-1] + (2, 2)).copy())
    assert not sensitivity_g(m, [1.0, 1.0], [1.0, 5.0], 1).any()


@pytest.mark.parametrize("model_name", ["heston", "ou"])
def test_sensitivity_solves_linear_system(model_name):
    m = heston_model() if model_name == "heston" else ou_model()
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = np.array([rng.uniform(0.05, 3.0), rng.normal()])
        th = rng.normal(size=4)
        S = eval_diffusion_matrix(m, x)
        dmu = m.drift_jac_theta(x, th)
        for j in range(4):
            g = sensitivity_g(m, x, th, j)
            assert np.max(np.abs(S @ g - dmu[:, j])) <= 1e-10 * max(1.0, np.abs(dmu[:, j]).max())


def test_ellipticity_identity():
    r = check_uniform_ellipticity(identity_model(), [[0, 0], [1, 2], [5, -3]], 0.5)
    assert r.min_eigenvalue == pytest.approx(1.0) and r.uniform
    r2 = check_uniform_ellipticity(identity_model(scale=2.0), [[0, 0]], 0.5)
    assert r2.min_eigenvalue == pytest.approx(4.0)


def test_ellipticity_heston_degenerates(heston_params, heston):
    sample = [[y, 4.6] for y in (0.01, 0.5, 1.0)]
    r = check_uniform_ellipticity(heston, sample, 0.1)
    C = heston_params.correlation_matrix()
    tr, det = np.trace(C), np.linalg.det(C)
    lam_min_C = 0.5 * (tr - math.sqrt(tr * tr - 4 * det))
    assert r.arg_min[0] == 0.01
    assert r.min_eigenvalue == pytest.approx(0.01 * lam_min_C, rel=1e-10)
    assert not r.uniform


@pytest.mark.parametrize("model", [heston_model(), ou_model(), heston_model(HestonParams(rho=0.3))])
def test_drift_jacobian_matches_fd(model):
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = np.array([rng.uniform(0.05, 3.0), rng.normal()])
        assert check_drift_jacobian(model, x, rng.normal(size=4)) <= 1e-5


def test_heston_guard_idempotent(heston):
    rng = np.random.default_rng(8)
    proposals = rng.normal(scale=2.0, size=(1000, 2))
    once = heston.domain_guard(proposals)
    assert np.array_equal(heston.domain_guard(once), once)
    assert np.all(heston.domain_member(once))


def test_parameter_domain():
    box = ParameterDomain(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
    assert np.array_equal(box.center, [0.0, 1.0])
    assert box.contains([0.5, 1.5]) and not box.contains([1.0, 1.0])
    assert np.array_equal(box.project([3.0, -1.0]), [1.0, 0.0])
    with pytest.raises(InputError):
        ParameterDomain(np.array([1.0]), np.array([0.0]))
    with pytest.raises(InputError):
        ParameterDomain(np.array([-np.inf]), np.array([0.0]))
