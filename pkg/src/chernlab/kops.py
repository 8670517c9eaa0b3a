"""The shuffle isomorphism, blocksum, flip, adjoint inversion, and the
canonical homotopies that drive the group laws.

The shuffle interleaves two copies of the mode basis: source mode ``m`` of
the first operand lands on mode ``2m``, of the second on ``2m + 1``.  On a
polarized window this same rule automatically respects the grading (mode sign
is preserved), so one index map serves both the plain and graded cases, and a
blocksum of window operators lives on the doubled window.  The flip is the
mode swap ``e_i -> e_{-i-1}``, which on a symmetric window is plain index
reversal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chernforms import Homotopy
from .errors import AsymmetricWindow, BadPathStart, ShapeMismatch
from .geomgrid import SampledMap
from .stiefel import PolarizedWindow

__all__ = [
    "ShuffleIso",
    "blocksum",
    "blocksum_map",
    "flip_matrix",
    "flip",
    "flip_map",
    "flip_projection",
    "flip_projection_map",
    "commutation_permutation",
    "association_permutation",
    "conjugation_homotopy",
    "inversion_homotopy_odd",
    "inversion_homotopy_even",
    "eckmann_hilton_homotopy",
    "rotation_times",
    "doubled_window",
]

DEFAULT_T_RES = 33


def doubled_window(window: PolarizedWindow) -> PolarizedWindow:
    return PolarizedWindow(2 * window.n_minus, 2 * window.n_plus)


@dataclass(frozen=True)
class ShuffleIso:
    """Index bookkeeping for viewing a space as two interleaved copies.

    ``dim`` is the size of the interleaved space; both halves have ``dim//2``
    entries.  With a window the halves are the half-windows and the parts per
    sign must be even (odd windows are rejected, never padded: silent padding
    would corrupt the index bookkeeping).
    """

    dim: int
    window: PolarizedWindow | None = None

    def __post_init__(self):
        if self.window is not None:
            if self.window.dim != self.dim:
                raise ShapeMismatch("window does not match shuffle dimension")
            if self.window.n_minus % 2 or self.window.n_plus % 2:
                raise ShapeMismatch("graded shuffle needs even mode counts per sign")
        elif self.dim % 2:
            raise ShapeMismatch("shuffle needs an even dimension")

    def copy_indices(self, copy: int) -> np.ndarray:
        """Interleaved indices carrying the given copy (0 or 1)."""
        return np.arange(copy, self.dim, 2)


def _interleave_indices(dim_small: int) -> tuple[np.ndarray, np.ndarray]:
    return np.arange(0, 2 * dim_small, 2), np.arange(1, 2 * dim_small, 2)


def blocksum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Interleaved direct sum; the result is twice the size of each operand.

    For window operators the same interleave respects the grading and the
    result lives on the doubled window.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape[-1] != a.shape[-2]:
        raise ShapeMismatch(f"blocksum needs equal square operands, got {a.shape} and {b.shape}")
    n = a.shape[-1]
    out = np.zeros((*a.shape[:-2], 2 * n, 2 * n), dtype=complex)
    out[..., 0::2, 0::2] = a
    out[..., 1::2, 1::2] = b
    return out


def blocksum_with_shuffle(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Blocksum through an explicit isomorphism ``rho`` (rows = (copy1; copy2)).

    Exists so tests can exercise alternative shuffles; the packaged operations
    always use the fixed interleave.
    """
    n = a.shape[-1]
    direct = np.zeros((2 * n, 2 * n), dtype=complex)
    direct[:n, :n] = a
    direct[n:, n:] = b
    return rho.conj().T @ direct @ rho


def standard_shuffle_matrix(n: int) -> np.ndarray:
    """The fixed interleave as an explicit ``2n x 2n`` 0/1 matrix."""
    rho = np.zeros((2 * n, 2 * n), dtype=complex)
    ev, od = _interleave_indices(n)
    for k in range(n):
        rho[k, ev[k]] = 1.0          # copy-1 coordinate k reads interleaved slot 2k
        rho[n + k, od[k]] = 1.0
    return rho


def blocksum_map(f: SampledMap, g: SampledMap) -> SampledMap:
    if f.domain != g.domain:
        raise ShapeMismatch("blocksum of maps needs a shared domain")
    if f.codomain != g.codomain:
        raise ShapeMismatch("blocksum of maps needs matching codomain tags")
    win = None
    if f.window is not None and g.window is not None:
        if f.window != g.window:
            raise ShapeMismatch("blocksum of maps needs matching windows")
        win = doubled_window(f.window)
    return SampledMap(f.domain, blocksum(f.values, g.values), codomain=f.codomain, window=win)


def flip_matrix(window: PolarizedWindow) -> np.ndarray:
    """The polarization swap ``e_i -> e_{-i-1}`` as a matrix (anti-diagonal)."""
    if window.n_minus != window.n_plus:
        raise AsymmetricWindow("flip needs n_plus == n_minus")
    return np.eye(window.dim, dtype=complex)[::-1]


def flip(x: np.ndarray, window: PolarizedWindow) -> np.ndarray:
    """Conjugation ``U x U`` by the polarization swap (pure index reversal)."""
    if window.n_minus != window.n_plus:
        raise AsymmetricWindow("flip needs n_plus == n_minus")
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != window.dim or x.shape[-2] != window.dim:
        raise ShapeMismatch("operator does not match the window")
    return x[..., ::-1, ::-1]


def flip_projection(p: np.ndarray, window: PolarizedWindow) -> np.ndarray:
    """Subspace-level flip ``W -> U(W_perp)``: complement, then swap."""
    eye = np.eye(window.dim, dtype=complex)
    return flip(eye - np.asarray(p, dtype=complex), window)


def flip_map(f: SampledMap) -> SampledMap:
    if f.window is None:
        raise AsymmetricWindow("flip of a map needs a window")
    return SampledMap(f.domain, flip(f.values, f.window), codomain=f.codomain, window=f.window)


def flip_projection_map(p: SampledMap) -> SampledMap:
    if p.window is None:
        raise AsymmetricWindow("flip of a projection map needs a window")
    return SampledMap(
        p.domain, flip_projection(p.values, p.window), codomain="projection", window=p.window
    )


def commutation_permutation(dim_small: int) -> np.ndarray:
    """Permutation ``P`` with ``g (+) f = P (f (+) g) P*`` (swap the copies).

    On a window the same swap acts within each sign separately, so it also
    serves the graded case.
    """
    perm = np.arange(2 * dim_small)
    perm[0::2], perm[1::2] = np.arange(1, 2 * dim_small, 2), np.arange(0, 2 * dim_small, 2)
    p = np.zeros((2 * dim_small, 2 * dim_small), dtype=complex)
    p[np.arange(2 * dim_small), perm] = 1.0
    return p


def association_permutation(dim_small: int) -> np.ndarray:
    """Permutation ``P`` with ``(f+g)+h = P (f+(g+h)) P*`` for the interleave.

    Built by chasing the two index factorizations of a triple sum.
    """
    n = dim_small

    def left_slot(src_copy: int, k: int) -> int:
        # (f+g)+h: first interleave f,g; then interleave (f+g) with h
        if src_copy == 2:  # h
            return 2 * k + 1
        return 2 * (2 * k + src_copy)

    def right_slot(src_copy: int, k: int) -> int:
        # f+(g+h): interleave g,h; then interleave f with (g+h)
        if src_copy == 0:  # f
            return 2 * k
        return 2 * (2 * k + (src_copy - 1)) + 1

    p = np.zeros((4 * n, 4 * n), dtype=complex)
    for copy in range(3):
        for k in range(n):
            p[left_slot(copy, k), right_slot(copy, k)] = 1.0
    # the fourth interleaved strand is empty in a triple sum; route the spare
    # slots onto each other so P stays a permutation
    used_rows = {left_slot(c, k) for c in range(3) for k in range(n)}
    used_cols = {right_slot(c, k) for c in range(3) for k in range(n)}
    spare_rows = sorted(set(range(4 * n)) - used_rows)
    spare_cols = sorted(set(range(4 * n)) - used_cols)
    for r, c in zip(spare_rows, spare_cols):
        p[r, c] = 1.0
    return p


# ---------------------------------------------------------------------------
# canonical homotopies


def rotation_times(t_res: int = DEFAULT_T_RES) -> np.ndarray:
    if t_res % 2 == 0 or t_res < 3:
        raise ShapeMismatch("rotation grids need an odd node count >= 3")
    return np.linspace(0.0, np.pi / 2.0, t_res)


def _pair_rotation(dim_small: int, t: float) -> np.ndarray:
    """The copy-mixing rotation on the interleaved space at parameter ``t``."""
    c, s = np.cos(t), np.sin(t)
    rot = np.array([[c, s], [-s, c]], dtype=complex)
    return np.kron(np.eye(dim_small, dtype=complex), rot)


def _pair_rotation_generator(dim_small: int) -> np.ndarray:
    """``J`` with ``dC_t/dt = J C_t`` for the copy-mixing rotation."""
    j = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    return np.kron(np.eye(dim_small, dtype=complex), j)


def conjugation_homotopy(
    f: SampledMap,
    path,
    times: np.ndarray | None = None,
    path_derivative=None,
) -> Homotopy:
    """Slices ``A_t f A_t*`` for a unitary path with ``A_0 = I``.

    ``path`` maps a time to the unitary ``A_t``; BadPathStart if ``A_0`` is
    not the identity within 1e-10.  Supplying ``path_derivative`` makes the
    time jets exact instead of finite-differenced.
    """
    if times is None:
        times = np.linspace(0.0, 1.0, DEFAULT_T_RES)
    a0 = np.asarray(path(float(times[0])), dtype=complex)
    if float(np.abs(a0 - np.eye(a0.shape[0])).max()) >= 1e-10:
        raise BadPathStart("conjugation path must start at the identity")
    slices = []
    partials = [] if path_derivative is not None else None
    for t in times:
        a = np.asarray(path(float(t)), dtype=complex)
        slices.append(a @ f.values @ a.conj().T)
        if partials is not None:
            da = np.asarray(path_derivative(float(t)), dtype=complex)
            partials.append(da @ f.values @ a.conj().T + a @ f.values @ da.conj().T)
    return Homotopy(
        f.domain,
        np.asarray(times, float),
        np.stack(slices),
        codomain=f.codomain,
        window=f.window,
        time_partials=None if partials is None else np.stack(partials),
    )


def inversion_homotopy_odd(f: SampledMap, t_res: int = DEFAULT_T_RES) -> Homotopy:
    """Rotation homotopy from ``f (+) f*`` to the identity.

    Slices ``(f (+) 1) C_t (1 (+) f*) C_t*`` over ``t in [0, pi/2]`` with the
    copy-mixing rotation ``C_t``; time jets are exact.
    """
    if f.codomain != "unitary":
        raise ShapeMismatch("odd inversion homotopy needs a unitary map")
    n = f.cols
    eye = np.broadcast_to(np.eye(n, dtype=complex), f.values.shape)
    left = blocksum(f.values, eye)
    right = blocksum(eye, np.swapaxes(f.values, -1, -2).conj())
    times = rotation_times(t_res)
    gen = _pair_rotation_generator(n)
    slices, partials = [], []
    for t in times:
        ct = _pair_rotation(n, float(t))
        inner = ct @ right @ ct.conj().T
        slices.append(left @ inner)
        partials.append(left @ (gen @ inner - inner @ gen))
    win = doubled_window(f.window) if f.window is not None else None
    return Homotopy(
        f.domain,
        times,
        np.stack(slices),
        codomain="unitary",
        window=win,
        time_partials=np.stack(partials),
    )


def eckmann_hilton_homotopy(a: SampledMap, b: SampledMap, t_res: int = DEFAULT_T_RES) -> Homotopy:
    """Rotation homotopy from ``a (+) b`` to ``ab (+) 1``."""
    if a.domain != b.domain or a.values.shape != b.values.shape:
        raise ShapeMismatch("operands must share a grid and size")
    n = a.cols
    eye = np.broadcast_to(np.eye(n, dtype=complex), a.values.shape)
    left = blocksum(a.values, eye)
    right = blocksum(eye, b.values)
    times = rotation_times(t_res)
    gen = _pair_rotation_generator(n)
    slices, partials = [], []
    for t in times:
        ct = _pair_rotation(n, float(t))
        inner = ct @ right @ ct.conj().T
        slices.append(left @ inner)
        partials.append(left @ (gen @ inner - inner @ gen))
    win = doubled_window(a.window) if a.window is not None and a.window == b.window else None
    return Homotopy(
        a.domain,
        times,
        np.stack(slices),
        codomain=a.codomain,
        window=win,
        time_partials=np.stack(partials),
    )


def grading_rotation(window: PolarizedWindow, t: float) -> np.ndarray:
    """The 2-3-plane rotation used by the even inversion homotopy.

    In the interleaved doubled window it mixes the second positive strand
    with the first negative strand through the mode pairing
    ``e_{2a+1} <-> e_{-2a-2}``; everything else is fixed.
    """
    if window.n_minus != window.n_plus:
        raise AsymmetricWindow("even inversion needs a symmetric window")
    m = window.n_plus
    big = doubled_window(window)
    out = np.eye(big.dim, dtype=complex)
    c, s = np.cos(t), np.sin(t)
    for a in range(m):
        p2 = big.index_of(2 * a + 1)
        m1 = big.index_of(-2 * a - 2)
        out[p2, p2] = c
        out[p2, m1] = -s
        out[m1, p2] = s
        out[m1, m1] = c
    return out


def grading_rotation_generator(window: PolarizedWindow) -> np.ndarray:
    """``J`` with ``dC_t/dt = J C_t`` for the grading rotation."""
    m = window.n_plus
    big = doubled_window(window)
    out = np.zeros((big.dim, big.dim), dtype=complex)
    for a in range(m):
        p2 = big.index_of(2 * a + 1)
        m1 = big.index_of(-2 * a - 2)
        out[p2, m1] = -1.0
        out[m1, p2] = 1.0
    return out


def inversion_homotopy_even(x: SampledMap, t_res: int = DEFAULT_T_RES) -> Homotopy:
    """Projection homotopy from ``(x (+) flip x)(H_plus)`` to the basepoint.

    Slices are ``pi_t = M_t pi_plus M_t*`` with
    ``M_t = C_t* (x (+) flip x) C_t`` on the doubled window; at ``t = pi/2``
    the conjugating operator is grading-preserving, so the slice is exactly
    the basepoint projection.  Time jets are exact.
    """
    if x.window is None:
        raise AsymmetricWindow("even inversion needs a windowed map")
    win = x.window
    if win.n_minus != win.n_plus:
        raise AsymmetricWindow("even inversion needs a symmetric window")
    summed = blocksum(x.values, flip(x.values, win))
    big = doubled_window(win)
    pi_plus = big.pi_plus
    times = rotation_times(t_res)
    gen = grading_rotation_generator(win)
    slices, partials = [], []
    for t in times:
        ct = grading_rotation(win, float(t))
        m_t = ct.conj().T @ summed @ ct
        m_dot = ct.conj().T @ (summed @ gen - gen @ summed) @ ct
        pi_t = m_t @ pi_plus @ np.swapaxes(m_t, -1, -2).conj()
        pi_dot = (
            m_dot @ pi_plus @ np.swapaxes(m_t, -1, -2).conj()
            + m_t @ pi_plus @ np.swapaxes(m_dot, -1, -2).conj()
        )
        slices.append(pi_t)
        partials.append(pi_dot)
    return Homotopy(
        x.domain,
        times,
        np.stack(slices),
        codomain="projection",
        window=big,
        time_partials=np.stack(partials),
    )
