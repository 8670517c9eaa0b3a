import numpy as np
import pytest

from chernlab.builders import (
    loop_zn,
    random_projection_map,
    random_unitary_map,
)
from chernlab.chernforms import Homotopy, ch_even, ch_odd, cs_exact, cs_form
from chernlab.errors import AsymmetricWindow, BadPathStart, ShapeMismatch
from chernlab.geomgrid import make_domain
from chernlab.kops import (
    association_permutation,
    blocksum,
    blocksum_map,
    blocksum_with_shuffle,
    commutation_permutation,
    conjugation_homotopy,
    doubled_window,
    eckmann_hilton_homotopy,
    flip,
    flip_matrix,
    flip_projection_map,
    grading_rotation,
    inversion_homotopy_even,
    inversion_homotopy_odd,
    standard_shuffle_matrix,
)
from chernlab.numkernel import haar_unitary, mat_exp_skew
from chernlab.stiefel import PolarizedWindow

RNG = np.random.default_rng(2024)
WIN = PolarizedWindow(2, 2)


def blocksum_homotopy(h: Homotopy, g: Homotopy) -> Homotopy:
    win = None
    if h.window is not None and g.window is not None and h.window == g.window:
        win = doubled_window(h.window)
    tp = None
    if h.time_partials is not None and g.time_partials is not None:
        tp = blocksum(h.time_partials, g.time_partials)
        tp[..., 1::2, 1::2] = blocksum(h.time_partials, g.time_partials)[..., 1::2, 1::2]
    return Homotopy(
        h.spatial,
        h.times,
        blocksum(h.slices, g.slices),
        codomain=h.codomain,
        window=win,
        time_partials=tp,
    )


# ---------------------------------------------------------------- blocksum


def test_blocksum_identity():
    out = blocksum(np.eye(3), np.eye(3))
    assert np.array_equal(out, np.eye(6))


def test_blocksum_interleaves_diagonals():
    x = np.diag([1.0, 2.0]).astype(complex)
    y = np.diag([3.0, 4.0]).astype(complex)
    out = blocksum(x, y)
    assert np.allclose(np.diagonal(out), [1.0, 3.0, 2.0, 4.0])


def test_blocksum_preserves_unitary_and_projection():
    for seed in range(6):
        rng = np.random.default_rng(seed)
        u, v = haar_unitary(rng, 8), haar_unitary(rng, 8)
        s = blocksum(u, v)
        assert np.abs(s.conj().T @ s - np.eye(16)).max() < 1e-12
        p = u[:, :3] @ u[:, :3].conj().T
        q = v[:, :5] @ v[:, :5].conj().T
        sp = blocksum(p, q)
        assert np.abs(sp @ sp - sp).max() < 1e-12
        assert np.abs(sp - sp.conj().T).max() < 1e-12


def test_blocksum_shape_guard():
    with pytest.raises(ShapeMismatch):
        blocksum(np.eye(2), np.eye(3))


def test_blocksum_matches_explicit_shuffle():
    a = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    b = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    rho = standard_shuffle_matrix(4)
    assert np.abs(blocksum(a, b) - blocksum_with_shuffle(rho, a, b)).max() < 1e-14


def test_alternative_shuffles_differ_by_conjugation():
    a = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    b = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    rho = standard_shuffle_matrix(4)
    perm = np.random.default_rng(5).permutation(8)
    pmat = np.zeros((8, 8), dtype=complex)
    pmat[np.arange(8), perm] = 1.0
    rho_alt = rho @ pmat
    lhs = blocksum_with_shuffle(rho_alt, a, b)
    conj = pmat.conj().T  # rho_alt* X rho_alt = P* (rho* X rho) P
    rhs = conj @ blocksum_with_shuffle(rho, a, b) @ pmat
    assert np.abs(lhs - rhs).max() < 1e-13


# ---------------------------------------------------------------- flip


def test_flip_negates_grading():
    eps = WIN.epsilon
    assert np.array_equal(flip(eps, WIN), -eps)


def test_flip_is_involution():
    x = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    assert np.array_equal(flip(flip(x, WIN), WIN), x)


def test_flip_matrix_properties():
    u = flip_matrix(WIN)
    assert np.array_equal(u @ u, np.eye(4))
    assert np.abs(u @ WIN.epsilon @ u + WIN.epsilon).max() == 0.0


def test_flip_rejects_asymmetric_window():
    with pytest.raises(AsymmetricWindow):
        flip(np.eye(5), PolarizedWindow(2, 3))


def test_flip_group_homomorphism():
    f = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    g = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    assert np.abs(flip(f @ g, WIN) - flip(f, WIN) @ flip(g, WIN)).max() < 1e-12


# ------------------------------------------------- commutativity/associativity


def test_commutation_permutation_exact():
    a = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    b = RNG.standard_normal((4, 4)) + 1j * RNG.standard_normal((4, 4))
    p = commutation_permutation(4)
    lhs = blocksum(b, a)
    rhs = p @ blocksum(a, b) @ p.conj().T
    assert np.abs(lhs - rhs).max() == 0.0


def test_association_permutation_exact():
    n = 3
    mats = [RNG.standard_normal((n, n)) + 1j * RNG.standard_normal((n, n)) for _ in range(3)]
    f, g, h = mats

    def pad_high(x):  # stabilize with identity on the upper modes
        out = np.eye(2 * n, dtype=complex)
        out[:n, :n] = x
        return out

    lhs = blocksum(blocksum(f, g), pad_high(h))
    rhs = blocksum(pad_high(f), blocksum(g, h))
    p = association_permutation(n)
    assert np.abs(lhs - p @ rhs @ p.conj().T).max() == 0.0


# ---------------------------------------------------------------- additivity


def test_ch_additivity_under_blocksum_odd():
    dom = make_domain("circle", 64)
    rng = np.random.default_rng(1)
    f = random_unitary_map(rng, dom, size=2)
    g = random_unitary_map(rng, dom, size=2)
    lhs = ch_odd(blocksum_map(f, g), 1)
    rhs = ch_odd(f, 1) + ch_odd(g, 1)
    assert (lhs - rhs).sup_norm() < 1e-12


def test_ch_additivity_under_blocksum_even():
    dom = make_domain("torus2", (12, 12))
    rng = np.random.default_rng(2)
    p = random_projection_map(rng, dom, WIN)
    q = random_projection_map(rng, dom, WIN)
    lhs = ch_even(blocksum_map(p, q), 1)
    rhs = ch_even(p, 1) + ch_even(q, 1)
    assert (lhs - rhs).sup_norm() < 1e-12


def test_cs_additivity_under_blocksum():
    dom = make_domain("circle", 64)
    rng = np.random.default_rng(3)
    f = random_unitary_map(rng, dom, size=2)
    g = random_unitary_map(rng, dom, size=2)
    hf = inversion_homotopy_odd(f, t_res=17)
    hg = inversion_homotopy_odd(g, t_res=17)
    lhs = cs_form(blocksum_homotopy(hf, hg), 1)
    rhs = cs_form(hf, 1) + cs_form(hg, 1)
    assert (lhs - rhs).sup_norm() < 1e-10


# ---------------------------------------------------------------- sign rules


def test_even_flip_negates_chern_form():
    dom = make_domain("torus2", (12, 12))
    p = random_projection_map(np.random.default_rng(4), dom, WIN)
    lhs = ch_even(flip_projection_map(p), 1)
    rhs = ch_even(p, 1)
    assert (lhs + rhs).sup_norm() < 1e-12


def test_odd_adjoint_negates_chern_form():
    dom = make_domain("circle", 128)
    f = random_unitary_map(np.random.default_rng(5), dom, size=2)
    lhs = ch_odd(f.adjoint(), 1)
    rhs = ch_odd(f, 1)
    assert (lhs + rhs).sup_norm() < 1e-12


def test_cs_adjoint_negates():
    dom = make_domain("circle", 64)
    f = random_unitary_map(np.random.default_rng(6), dom, size=2)
    h = inversion_homotopy_odd(f, t_res=17)
    lhs = cs_form(h.adjoint(), 1)
    rhs = cs_form(h, 1)
    assert (lhs + rhs).sup_norm() < 1e-10


def test_cs_flip_negates():
    dom = make_domain("circle", 64)
    x = random_unitary_map(np.random.default_rng(7), dom, size=4, window=WIN)
    h = inversion_homotopy_even(x, t_res=17)
    flipped = Homotopy(
        h.spatial,
        h.times,
        np.stack([
            flip(np.eye(h.slices.shape[-1]) - h.slices[i], h.window) for i in range(h.n_times)
        ]),
        codomain="projection",
        window=h.window,
    )
    lhs = cs_form(flipped, 1)
    rhs = cs_form(h, 1)
    assert (lhs + rhs).sup_norm() < 1e-6


# ---------------------------------------------------------------- homotopies


def test_conjugation_constant_path_is_constant():
    f = loop_zn(n=1, res=64)
    h = conjugation_homotopy(f, lambda t: np.eye(1))
    assert np.abs(h.slices - h.slices[0]).max() < 1e-14


def test_conjugation_rejects_bad_start():
    f = loop_zn(n=1, res=64)
    with pytest.raises(BadPathStart):
        conjugation_homotopy(f, lambda t: 2 * np.eye(1))


def test_conjugation_cs0_vanishes_pointwise():
    dom = make_domain("circle", 64)
    f = random_unitary_map(np.random.default_rng(8), dom, size=3)
    k = RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3))
    k = 0.4 * (k - k.conj().T)
    h = conjugation_homotopy(
        f,
        lambda t: mat_exp_skew(t * k),
        path_derivative=lambda t: k @ mat_exp_skew(t * k),
    )
    cs0 = cs_form(h, 1)
    assert cs0.sup_norm() < 1e-9


def test_shuffles_differ_by_conjugation_on_maps():
    # two blocksums with different shuffles are conjugate by a fixed unitary
    a = haar_unitary(np.random.default_rng(9), 3)
    b = haar_unitary(np.random.default_rng(10), 3)
    rho = standard_shuffle_matrix(3)
    perm = np.random.default_rng(11).permutation(6)
    pmat = np.zeros((6, 6), dtype=complex)
    pmat[np.arange(6), perm] = 1.0
    rho_alt = rho @ pmat
    lhs = blocksum_with_shuffle(rho_alt, a, b)
    rhs = blocksum_with_shuffle(rho, a, b)
    conj = pmat.conj().T
    assert np.abs(lhs - conj @ rhs @ pmat).max() < 1e-13


def test_inversion_odd_endpoints():
    dom = make_domain("circle", 64)
    f = random_unitary_map(np.random.default_rng(12), dom, size=2)
    h = inversion_homotopy_odd(f, t_res=17)
    start = blocksum(f.values, f.adjoint().values)
    assert np.abs(h.slices[0] - start).max() < 1e-12
    assert np.abs(h.slices[-1] - np.eye(4)).max() < 1e-12


def test_inversion_odd_cs0_vanishes():
    dom = make_domain("circle", 64)
    f = random_unitary_map(np.random.default_rng(13), dom, size=2)
    h = inversion_homotopy_odd(f, t_res=33)
    assert cs_form(h, 1).sup_norm() < 1e-9


def test_inversion_odd_cs2_cycle_residuals_on_torus():
    dom = make_domain("torus2", (12, 12))
    f = random_unitary_map(np.random.default_rng(14), dom, size=2)
    h = inversion_homotopy_odd(f, t_res=17)
    rep = cs_exact(h, k_max=2)
    assert rep["verdict"] is True
    assert all(r < 1e-6 for r in rep["residuals"].values())


def test_inversion_even_endpoint_is_basepoint():
    dom = make_domain("circle", 64)
    x = random_unitary_map(np.random.default_rng(15), dom, size=4, window=WIN)
    h = inversion_homotopy_even(x, t_res=17)
    big = doubled_window(WIN)
    assert np.abs(h.slices[-1] - big.pi_plus).max() < 1e-12
    # t = 0 slice projects onto the blocksummed image
    summed = blocksum(x.values, flip(x.values, WIN))
    p0 = summed @ big.pi_plus @ np.swapaxes(summed, -1, -2).conj()
    assert np.abs(h.slices[0] - p0).max() < 1e-12


def test_inversion_even_gauge_independence():
    dom = make_domain("circle", 64)
    rng = np.random.default_rng(16)
    x = random_unitary_map(rng, dom, size=4, window=WIN)
    vplus, vminus = haar_unitary(rng, 2), haar_unitary(rng, 2)
    gauge = np.zeros((4, 4), dtype=complex)
    gauge[:2, :2] = vminus  # negative modes sit first in window ordering
    gauge[2:, 2:] = vplus
    from chernlab.geomgrid import SampledMap

    y = SampledMap(dom, x.values @ gauge, codomain="unitary", window=WIN)
    hx = inversion_homotopy_even(x, t_res=9)
    hy = inversion_homotopy_even(y, t_res=9)
    assert np.abs(hx.slices - hy.slices).max() < 1e-10


def test_inversion_even_cs_residuals():
    dom = make_domain("circle", 64)
    x = random_unitary_map(np.random.default_rng(17), dom, size=4, window=WIN)
    h = inversion_homotopy_even(x, t_res=17)
    rep = cs_exact(h, k_max=1)
    assert rep["verdict"] is True


def test_grading_rotation_matches_displayed_blocks():
    # the conjugated operator at generic t reproduces the four-strand pattern
    rng = np.random.default_rng(18)
    x = haar_unitary(rng, 4)
    win = WIN
    big = doubled_window(win)
    summed = blocksum(x, flip(x, win))
    t = 0.7
    ct = grading_rotation(win, t)
    m = ct.conj().T @ summed @ ct
    c, s = np.cos(t), np.sin(t)
    nm = win.n_minus

    def blk(rows, cols):
        return x[np.ix_(rows, cols)]

    pos = list(range(nm, 2 * nm))
    neg = list(range(nm))[::-1]  # ascending i for e_{-i-1}
    xpp, xmp = blk(pos, pos), blk(pos, neg)
    xpm, xmm = blk(neg, pos), blk(neg, neg)
    idx_p1 = [big.index_of(2 * a) for a in range(nm)]
    idx_p2 = [big.index_of(2 * a + 1) for a in range(nm)]
    idx_m1 = [big.index_of(-2 * a - 2) for a in range(nm)]
    assert np.abs(m[np.ix_(idx_p1, idx_p2)] - s * xmp).max() < 1e-12
    assert np.abs(m[np.ix_(idx_p1, idx_m1)] - c * xmp).max() < 1e-12
    assert np.abs(m[np.ix_(idx_p2, idx_p2)] - xmm).max() < 1e-12
    assert np.abs(m[np.ix_(idx_p2, idx_p1)] - s * xpm).max() < 1e-12
    assert np.abs(m[np.ix_(idx_m1, idx_m1)] - xmm).max() < 1e-12


def test_eckmann_hilton_endpoints():
    dom = make_domain("circle", 64)
    rng = np.random.default_rng(19)
    a = random_unitary_map(rng, dom, size=2)
    b = random_unitary_map(rng, dom, size=2)
    h = eckmann_hilton_homotopy(a, b, t_res=9)
    assert np.abs(h.slices[0] - blocksum(a.values, b.values)).max() < 1e-12
    prod = a.values @ b.values
    eye = np.broadcast_to(np.eye(2), prod.shape)
    assert np.abs(h.slices[-1] - blocksum(prod, eye)).max() < 1e-12


def test_eckmann_hilton_identity_operand():
    dom = make_domain("circle", 64)
    a = random_unitary_map(np.random.default_rng(20), dom, size=2)
    from chernlab.geomgrid import constant_map

    b = constant_map(dom, np.eye(2), codomain="unitary")
    h = eckmann_hilton_homotopy(a, b, t_res=9)
    assert np.abs(h.slices - h.slices[0]).max() < 1e-12


def test_eckmann_hilton_unitary_slices():
    dom = make_domain("circle", 64)
    rng = np.random.default_rng(21)
    a = random_unitary_map(rng, dom, size=2)
    b = random_unitary_map(rng, dom, size=2)
    h = eckmann_hilton_homotopy(a, b, t_res=9)
    v = h.slices
    eye = np.eye(4)
    assert np.abs(np.swapaxes(v, -1, -2).conj() @ v - eye).max() < 1e-12
