"""Named analytic map families used by the CLI and the verification suites.

A registry of reproducible fixtures instead of an expression parser: every
builder is a pure function of its parameters (plus, for the randomized ones,
a 64-bit seed), so runs are reproducible from the report alone.
"""

from __future__ import annotations

import numpy as np

from .geomgrid import DomainGrid, SampledMap, make_domain
from .numkernel import haar_unitary, mat_exp_skew
from .stiefel import PolarizedWindow

__all__ = [
    "BUILDERS",
    "const_identity",
    "loop_zn",
    "trig_loop",
    "bloch_circle",
    "taut_cp1",
    "su2_chart",
    "random_band_loop",
    "random_unitary_map",
    "random_projection_map",
    "frame_family_torus",
]

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def const_identity(res: int = 256, size: int = 1, kind: str = "circle") -> SampledMap:
    dom = make_domain(kind, res if kind in ("circle", "interval") else (res, res))
    eye = np.eye(size, dtype=complex)
    values = np.broadcast_to(eye, (*dom.node_shape, size, size)).copy()
    return SampledMap(dom, values, codomain="unitary")


def loop_zn(n: int = 1, res: int = 256, pad: int = 1) -> SampledMap:
    """The monomial loop ``theta -> diag(e^{i n theta}, 1, ..)`` on U(pad)."""
    dom = make_domain("circle", res)
    theta = dom.axes[0].coords
    values = np.zeros((res, pad, pad), dtype=complex)
    values[:, :, :] = np.eye(pad)
    values[:, 0, 0] = np.exp(1j * n * theta)
    return SampledMap(dom, values, codomain="unitary")


def trig_loop(res: int = 256, winding: int = 1, amp: float = 0.3) -> SampledMap:
    """Smooth non-polynomial loop ``exp(i w theta + i amp sin theta)``.

    The Fourier coefficients decay like Bessel functions of ``amp``, so a
    declared bandwidth of a couple dozen modes holds to machine precision.
    """
    dom = make_domain("circle", res)
    theta = dom.axes[0].coords
    values = np.exp(1j * (winding * theta + amp * np.sin(theta)))[:, None, None]
    return SampledMap(dom, values, codomain="unitary")


def bloch_circle(colatitude: float = np.pi / 2.0, res: int = 256) -> SampledMap:
    """Rank-1 projection loop along a colatitude circle of the 2-sphere."""
    dom = make_domain("circle", res)
    phi = dom.axes[0].coords
    c, s = np.cos(colatitude / 2.0), np.sin(colatitude / 2.0)
    v = np.stack([np.full(res, c, dtype=complex), s * np.exp(1j * phi)], axis=-1)
    proj = v[:, :, None] @ v[:, None, :].conj()
    return SampledMap(dom, proj, codomain="projection")


def taut_cp1(res_r: int = 33, res_t: int = 64) -> SampledMap:
    """Tautological line projection in two disk charts.

    Chart 0 is the line through ``(1, z)``, chart 1 the line through
    ``(w, 1)``; on the shared circle ``|z| = 1`` the charts describe the same
    line through ``w = 1/z``.
    """
    dom = make_domain("cp1_charts", (res_r, res_t))
    r = dom.axes[0].coords
    t = dom.axes[1].coords
    z = r[:, None] * np.exp(1j * t[None, :])
    values = np.empty((2, res_r, res_t, 2, 2), dtype=complex)
    for chart in range(2):
        if chart == 0:
            v = np.stack([np.ones_like(z), z], axis=-1)
        else:
            v = np.stack([z, np.ones_like(z)], axis=-1)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        values[chart] = v[..., :, None] @ v[..., None, :].conj()
    return SampledMap(dom, values, codomain="projection")


def su2_chart(res: int = 24, a1: float = 0.4, a2: float = 0.4, a3: float = 0.3) -> SampledMap:
    """Smooth U(2)-valued torus map built from a Pauli-vector exponential."""
    dom = make_domain("torus2", (res, res))
    t1 = dom.axes[0].coords[:, None]
    t2 = dom.axes[1].coords[None, :]
    h = (
        a1 * np.sin(t1)[..., None, None] * _PAULI[0]
        + a2 * np.sin(t2)[..., None, None] * _PAULI[1]
        + a3 * (np.cos(t1) * np.cos(t2))[..., None, None] * _PAULI[2]
    )
    values = np.empty((res, res, 2, 2), dtype=complex)
    for i in range(res):
        for j in range(res):
            values[i, j] = mat_exp_skew(1j * h[i, j])
    return SampledMap(dom, values, codomain="unitary")


def random_band_loop(
    rng: np.random.Generator,
    rank: int = 1,
    winding=None,
    trig_degree: int = 2,
    amp: float = 0.2,
    res: int = 256,
) -> SampledMap:
    """Seeded smooth unitary loop with controlled winding and band decay.

    ``gamma = U0 exp(i H(theta)) diag(e^{i n_j theta}) U1`` with ``H`` a
    hermitian trigonometric polynomial; the determinant winds by
    ``sum(n_j)`` and the Fourier band decays superexponentially in ``amp``.
    """
    dom = make_domain("circle", res)
    theta = dom.axes[0].coords
    if winding is None:
        winding = [int(rng.integers(-2, 3)) for _ in range(rank)]
    elif isinstance(winding, int):
        base = [winding] + [0] * (rank - 1)
        winding = base
    u0 = haar_unitary(rng, rank)
    u1 = haar_unitary(rng, rank)
    coeffs = [
        amp * (rng.standard_normal((rank, rank)) + 1j * rng.standard_normal((rank, rank)))
        for _ in range(trig_degree)
    ]
    values = np.empty((res, rank, rank), dtype=complex)
    for i, th in enumerate(theta):
        h = np.zeros((rank, rank), dtype=complex)
        for q, cq in enumerate(coeffs, start=1):
            ph = cq * np.exp(1j * q * th)
            h += ph + ph.conj().T
        mono = np.diag(np.exp(1j * np.asarray(winding) * th))
        values[i] = u0 @ mat_exp_skew(1j * h) @ mono @ u1
    return SampledMap(dom, values, codomain="unitary")


def random_unitary_map(
    rng: np.random.Generator,
    domain: DomainGrid,
    size: int = 2,
    trig_degree: int = 2,
    amp: float = 0.3,
    window: PolarizedWindow | None = None,
) -> SampledMap:
    """Seeded smooth unitary map ``exp(i H(x))`` on any sample domain."""
    if domain.kind == "cp1_charts":
        raise ValueError("random unitary maps are not defined chartwise")
    n_modes = trig_degree
    coeffs = {}
    for axis in range(domain.dim):
        for q in range(1, n_modes + 1):
            coeffs[(axis, q)] = amp * (
                rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
            )
    base = amp * (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
    base = base + base.conj().T

    coords = np.meshgrid(*[ax.coords for ax in domain.axes], indexing="ij")
    node_shape = tuple(ax.n for ax in domain.axes)
    h = np.zeros((*node_shape, size, size), dtype=complex)
    h[...] = base
    for (axis, q), cq in coeffs.items():
        phase = np.exp(1j * q * coords[axis])[..., None, None]
        h = h + phase * cq + np.conj(phase) * cq.conj().T
    flat = h.reshape(-1, size, size)
    out = np.empty_like(flat)
    for i in range(flat.shape[0]):
        out[i] = mat_exp_skew(1j * flat[i])
    values = out.reshape(*node_shape, size, size)
    return SampledMap(domain, values, codomain="unitary", window=window)


def random_projection_map(
    rng: np.random.Generator,
    domain: DomainGrid,
    window: PolarizedWindow,
    trig_degree: int = 2,
    amp: float = 0.3,
) -> SampledMap:
    """Seeded projection family ``X pi_+ X*`` from a random unitary family."""
    x = random_unitary_map(rng, domain, size=window.dim, trig_degree=trig_degree, amp=amp)
    pi = window.pi_plus
    values = x.values @ pi @ np.swapaxes(x.values, -1, -2).conj()
    return SampledMap(domain, values, codomain="projection", window=window)


def frame_family_torus(
    rng: np.random.Generator,
    res: int = 24,
    rows: int = 2,
    cols: int = 1,
    amp: float = 0.4,
    trig_degree: int = 1,
) -> SampledMap:
    """Smooth frame family over the 2-torus: ``exp(K(x)) w0`` with random
    trigonometric generator ``K`` (not unitary, frames only need injectivity)."""
    dom = make_domain("torus2", (res, res))
    t1 = dom.axes[0].coords[:, None]
    t2 = dom.axes[1].coords[None, :]
    gens = []
    for _ in range(2 * trig_degree):
        g = amp * (rng.standard_normal((rows, rows)) + 1j * rng.standard_normal((rows, rows)))
        gens.append(g - g.conj().T)
    w0 = np.zeros((rows, cols), dtype=complex)
    w0[:cols, :cols] = np.eye(cols)
    values = np.empty((res, res, rows, cols), dtype=complex)
    for i in range(res):
        for j in range(res):
            k = np.zeros((rows, rows), dtype=complex)
            for q in range(trig_degree):
                k += np.sin((q + 1) * t1[i, 0]) * gens[2 * q]
                k += np.cos((q + 1) * t2[0, j]) * gens[2 * q + 1]
            values[i, j] = mat_exp_skew(k) @ w0
    return SampledMap(dom, values, codomain="frame")


BUILDERS = {
    "const_identity": const_identity,
    "loop_zn": loop_zn,
    "trig_loop": trig_loop,
    "bloch_circle": bloch_circle,
    "taut_cp1": taut_cp1,
    "su2_chart": su2_chart,
}
