import numpy as np
import pytest

from chernlab.errors import NotSkew, NotUnitary, SingularInput
from chernlab.numkernel import (
    det_phase,
    frobenius,
    haar_unitary,
    mat_exp_skew,
    numerical_rank,
    pairwise_sum,
    polar_unitary,
    principal_angle,
)

RNG = np.random.default_rng(20250810)


def newton_polar(m, iters=60):
    """Independent oracle: Heron/Newton iteration X <- (X + X^-*)/2."""
    x = np.asarray(m, dtype=complex)
    for _ in range(iters):
        x = 0.5 * (x + np.linalg.inv(x).conj().T)
    return x


def test_polar_identity():
    assert frobenius(polar_unitary(np.eye(3)) - np.eye(3)) < 1e-12


def test_polar_positive_scalar():
    assert abs(polar_unitary(np.array([[2.0]]))[0, 0] - 1.0) < 1e-12


def test_polar_matches_newton_oracle():
    m = RNG.standard_normal((6, 6)) + 1j * RNG.standard_normal((6, 6))
    m += 6 * np.eye(6)  # keep it comfortably invertible
    u = polar_unitary(m)
    assert frobenius(u - newton_polar(m)) < 1e-10
    assert frobenius(u.conj().T @ u - np.eye(6)) < 1e-10


def test_polar_rejects_singular():
    m = np.diag([1.0, 1e-13]).astype(complex)
    with pytest.raises(SingularInput):
        polar_unitary(m)


@pytest.mark.parametrize("seed", range(5))
def test_polar_unitarity_property(seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) + 4 * np.eye(5)
    u = polar_unitary(m)
    assert frobenius(u.conj().T @ u - np.eye(5)) < 1e-10


def test_rank_zero_matrix():
    rep = numerical_rank(np.zeros((3, 3)), threshold=1e-8)
    assert rep.numerical_rank == 0


def test_rank_identity():
    rep = numerical_rank(np.eye(4), threshold=1e-8)
    assert rep.numerical_rank == 4
    assert np.all(np.diff(rep.singular_values) <= 0)


def test_rank_constructed_spectrum():
    rep = numerical_rank(np.diag([1.0, 1e-12]), threshold=1e-8)
    assert rep.numerical_rank == 1


def test_rank_monotone_in_threshold():
    m = RNG.standard_normal((6, 4))
    thresholds = np.logspace(-10, 1, 12)
    ranks = [numerical_rank(m, t).numerical_rank for t in thresholds]
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))


def test_det_phase_identity():
    assert abs(det_phase(np.eye(3))) < 1e-12


def test_det_phase_diagonal_unitary():
    u = np.diag([np.exp(2j * np.pi * 0.3), 1.0, 1.0])
    assert abs(det_phase(u) - 2 * np.pi * 0.3) < 1e-12


def test_det_phase_principal_branch_endpoint():
    assert abs(det_phase(np.diag([-1.0, 1.0]).astype(complex)) - np.pi) < 1e-12


def test_det_phase_additive_under_direct_sum():
    for seed in range(4):
        rng = np.random.default_rng(seed)
        u = haar_unitary(rng, 3)
        v = haar_unitary(rng, 2)
        w = np.zeros((5, 5), dtype=complex)
        w[:3, :3] = u
        w[3:, 3:] = v
        lhs = det_phase(w)
        rhs = principal_angle(det_phase(u) + det_phase(v))
        assert abs(principal_angle(lhs - rhs)) < 1e-9


def test_det_phase_rejects_nonunitary():
    with pytest.raises(NotUnitary):
        det_phase(2 * np.eye(2))


def test_exp_zero():
    assert frobenius(mat_exp_skew(np.zeros((3, 3))) - np.eye(3)) < 1e-14


def test_exp_one_by_one():
    th = 0.7
    assert abs(mat_exp_skew(np.array([[1j * th]]))[0, 0] - np.exp(1j * th)) < 1e-12


def test_exp_inverse_identity_oracle():
    a = RNG.standard_normal((5, 5)) + 1j * RNG.standard_normal((5, 5))
    a = a - a.conj().T
    e = mat_exp_skew(a)
    assert frobenius(e @ mat_exp_skew(-a) - np.eye(5)) < 1e-10
    assert frobenius(e.conj().T @ e - np.eye(5)) < 1e-10


def test_exp_adjoint_is_negated_argument():
    a = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    a = a - a.conj().T
    assert frobenius(mat_exp_skew(a).conj().T - mat_exp_skew(-a)) < 1e-10


def test_exp_rejects_non_skew():
    with pytest.raises(NotSkew):
        mat_exp_skew(np.eye(2))


def test_pairwise_sum_matches_plain_sum():
    x = RNG.standard_normal(1000) + 1j * RNG.standard_normal(1000)
    assert abs(pairwise_sum(x) - np.sum(x)) < 1e-10


def test_pairwise_sum_independent_of_layout():
    x = RNG.standard_normal(777)
    a = pairwise_sum(x)
    b = pairwise_sum(np.array(x, order="F"))
    assert a == b
