import itertools

import numpy as np
import pytest

from chernlab.builders import loop_zn, taut_cp1
from chernlab.chernforms import (
    Homotopy,
    antisym_trace_power,
    ch_even,
    ch_odd,
    ch_total,
    chern_scalar,
    cs_exact,
    cs_form,
    wedge_trace_power,
)
from chernlab.errors import ArityTooLarge, DegreeOverflow, NotALoop
from chernlab.geomgrid import (
    SampledMap,
    constant_map,
    form_derivative,
    integrate,
    make_domain,
)

RNG = np.random.default_rng(11)


def brute_force_wedge(mats):
    """Independent oracle: explicit index-chain traces over all permutations."""
    m = len(mats)
    n = mats[0].shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(m)):
        sgn = (-1) ** sum(
            1 for i in range(m) for j in range(i + 1, m) if perm[i] > perm[j]
        )
        for chain in itertools.product(range(n), repeat=m):
            term = 1.0 + 0.0j
            for pos in range(m):
                term *= mats[perm[pos]][chain[pos], chain[(pos + 1) % m]]
            total += sgn * term
    return total


def test_normalizations():
    assert abs(chern_scalar("odd", 1) - 1j / (2 * np.pi)) < 1e-15
    assert abs(chern_scalar("even", 1) - 1j / (2 * np.pi)) < 1e-15
    assert abs(chern_scalar("odd", 2) - (1j / (2 * np.pi)) ** 2 * (-1.0 / 6.0)) < 1e-15


def test_wedge_single_slot():
    comps = wedge_trace_power([np.array([[[1j]]])], 1)
    assert abs(comps[(0,)][0] - 1j) < 1e-15


def test_wedge_commuting_diagonals_vanish():
    mats = [np.diag(RNG.standard_normal(3)).astype(complex) for _ in range(3)]
    val = antisym_trace_power([m[None] for m in mats])[0]
    assert abs(val) < 1e-12
    assert abs(brute_force_wedge(mats)) < 1e-12


def test_wedge_matches_brute_force():
    mats = [
        RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3)) for _ in range(3)
    ]
    val = antisym_trace_power([m[None] for m in mats])[0]
    assert abs(val - brute_force_wedge(mats)) < 1e-10


def test_wedge_arity_guard():
    with pytest.raises(ArityTooLarge):
        wedge_trace_power([np.zeros((1, 2, 2))], 2)


# ---------------------------------------------------------------- ch odd


def test_ch_odd_constant_is_zero():
    dom = make_domain("circle", 64)
    f = constant_map(dom, np.eye(2), codomain="unitary")
    assert ch_odd(f, 1).sup_norm() < 1e-12


@pytest.mark.parametrize("n", range(-3, 4))
def test_ch1_winding_integral(n):
    val = integrate(ch_odd(loop_zn(n=n, res=1024), 1))
    assert abs(val - (-n)) < 1e-8


def test_ch1_trace_cancellation():
    dom = make_domain("circle", 128)
    th = dom.axes[0].coords
    values = np.zeros((128, 2, 2), dtype=complex)
    values[:, 0, 0] = np.exp(1j * th)
    values[:, 1, 1] = np.exp(-1j * th)
    f = SampledMap(dom, values, codomain="unitary")
    assert abs(integrate(ch_odd(f, 1))) < 1e-12


def test_ch_odd_degree_guard():
    with pytest.raises(DegreeOverflow):
        ch_odd(loop_zn(n=1, res=64), 2)


# ---------------------------------------------------------------- ch even


def test_ch_even_constant_is_zero():
    dom = make_domain("torus2", (12, 12))
    p = constant_map(dom, np.diag([1.0, 0.0]).astype(complex), codomain="projection")
    assert ch_even(p, 1).sup_norm() < 1e-12


def test_tautological_chern_number():
    # sign pinned by the Fubini-Study oracle: the tautological line bundle
    # integrates to -1 with these conventions
    val = integrate(ch_even(taut_cp1(65, 64), 1))
    assert abs(val - (-1.0)) < 1e-6


def test_ch_total_cutoffs():
    dom = make_domain("circle", 64)
    f = constant_map(dom, np.eye(2), codomain="unitary")
    forms = ch_total(f, 3)
    assert len(forms) == 1  # only degree 1 fits on the circle
    assert forms[0].sup_norm() < 1e-12

    loop = loop_zn(n=2, res=128)
    forms = ch_total(loop, 2)
    assert [f.form_degree for f in forms] == [1]

    proj = taut_cp1(17, 16)
    forms = ch_total(proj, 2)
    assert [f.form_degree for f in forms] == [2]  # degree 4 cut off in dim 2


# ---------------------------------------------------------------- cs


def constant_homotopy(f, t_res=9):
    times = np.linspace(0.0, 1.0, t_res)
    slices = np.broadcast_to(f.values, (t_res, *f.values.shape)).copy()
    return Homotopy(f.domain, times, slices, codomain=f.codomain)


def phase_homotopy(res=128, t_res=17):
    """H(theta, t) = exp(i(t sin(theta) + 0.3 t^2 cos(theta)))."""
    dom = make_domain("circle", res)
    th = dom.axes[0].coords
    times = np.linspace(0.0, 1.0, t_res)
    slices = np.empty((t_res, res, 1, 1), dtype=complex)
    for i, t in enumerate(times):
        slices[i, :, 0, 0] = np.exp(1j * (t * np.sin(th) + 0.3 * t * t * np.cos(th)))
    return Homotopy(dom, times, slices, codomain="unitary")


def test_cs_constant_homotopy_zero():
    f = loop_zn(n=1, res=64)
    h = constant_homotopy(f)
    assert cs_form(h, 1).sup_norm() < 1e-12


def test_cs_stokes_identity_and_order():
    residuals = []
    for t_res in (9, 17):
        h = phase_homotopy(res=128, t_res=t_res)
        cs0 = cs_form(h, 1)
        dcs = form_derivative(cs0)
        ch1_end = ch_odd(h.slice_map(h.n_times - 1), 1)
        ch1_start = ch_odd(h.slice_map(0), 1)
        residuals.append((dcs - (ch1_end - ch1_start)).sup_norm())
    assert residuals[-1] < 1e-6
    order = np.log2(residuals[0] / residuals[1])
    assert order >= 2.0


def test_cs_stokes_degree_two_on_torus3():
    rng = np.random.default_rng(3)
    dom = make_domain("torus3", (10, 10, 10))
    coords = np.meshgrid(*[ax.coords for ax in dom.axes], indexing="ij")
    gen = np.zeros((10, 10, 10, 2, 2), dtype=complex)
    paulis = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    for i in range(3):
        gen += 0.3 * np.sin(coords[i])[..., None, None] * paulis[i]
    t_res = 17
    times = np.linspace(0.0, 1.0, t_res)
    slices = np.empty((t_res, 10, 10, 10, 2, 2), dtype=complex)
    from scipy.linalg import expm

    for i, t in enumerate(times):
        flat = (1j * t * gen).reshape(-1, 2, 2)
        slices[i] = np.stack([expm(m) for m in flat]).reshape(10, 10, 10, 2, 2)
    h = Homotopy(dom, times, slices, codomain="unitary")
    cs2 = cs_form(h, 2)
    dcs = form_derivative(cs2)
    ch3 = ch_odd(h.slice_map(t_res - 1), 2)
    assert (dcs - ch3).sup_norm() < 1e-6
    del rng


def test_cs_closedness_of_ch():
    f = loop_zn(n=2, res=256)
    # on a 1-d domain d(ch1) has degree 2 and cannot be formed; check on torus
    dom = make_domain("torus2", (24, 24))
    t1 = dom.axes[0].coords[:, None]
    t2 = dom.axes[1].coords[None, :]
    values = np.exp(1j * (np.sin(t1) + 0.5 * np.cos(t2) + t1 * 0))[..., None, None]
    g = SampledMap(dom, values, codomain="unitary")
    dch = form_derivative(ch_odd(g, 1))
    assert dch.sup_norm() < 1e-6
    del f


def test_cs_exact_verdicts():
    f = loop_zn(n=1, res=64)
    rep = cs_exact(constant_homotopy(f), k_max=2)
    assert rep["verdict"] is True

    # loop rotation: H(theta, t) = exp(i(theta + 2 pi t)) has CS_0 = -1
    dom = make_domain("circle", 64)
    th = dom.axes[0].coords
    t_res = 65
    times = np.linspace(0.0, 1.0, t_res)
    slices = np.empty((t_res, 64, 1, 1), dtype=complex)
    for i, t in enumerate(times):
        slices[i, :, 0, 0] = np.exp(1j * (th + 2 * np.pi * t))
    h = Homotopy(dom, times, slices, codomain="unitary")
    rep = cs_exact(h, k_max=1)
    assert rep["verdict"] is False
    cs0 = cs_form(h, 1)
    assert np.abs(cs0.component(()) - (-1.0)).max() < 1e-5


def test_cs_concatenation_additivity():
    h1 = phase_homotopy(res=64, t_res=9)
    # second leg continues from h1's endpoint
    dom = h1.spatial
    th = dom.axes[0].coords
    times = np.linspace(0.0, 1.0, 9)
    end = h1.slices[-1]
    slices = np.empty((9, 64, 1, 1), dtype=complex)
    for i, t in enumerate(times):
        slices[i] = end * np.exp(1j * t * 0.4 * np.cos(2 * th))[:, None, None]
    h2 = Homotopy(dom, times, slices, codomain="unitary")
    cat = Homotopy.concatenate(h1, h2)
    lhs = cs_form(cat, 1)
    rhs = cs_form(h1, 1) + cs_form(h2, 1)
    assert (lhs - rhs).sup_norm() < 1e-8


def test_concatenate_rejects_mismatched_junction():
    h1 = phase_homotopy(res=64, t_res=9)
    h2 = constant_homotopy(loop_zn(n=1, res=64), t_res=9)
    with pytest.raises(NotALoop):
        Homotopy.concatenate(h1, h2)


def test_homotopy_reverse_flips_cs_sign():
    h = phase_homotopy(res=64, t_res=17)
    a = cs_form(h, 1)
    b = cs_form(h.reversed(), 1)
    assert (a + b).sup_norm() < 1e-12
