"""
Integral transforms between psi(q), psi(p) and phase-space representations.

The phase-space wave function is a Gabor transform with unit window width and
an extra phase ``exp(i q p / 2)``::

    rho(q, p) = (2 pi^{3/2})^{-1/2} e^{iqp/2} sum_q' e^{-(q-q')^2/2} psi(q') e^{-iq'p} dq

Everything is a rectangle-rule sum over a conjugate phase grid (see
:mod:`qpdyn.grid`). Transforms that have a cheaper evaluation than the literal
nested sum accept ``method="fast"`` (default) or ``method="reference"``; the
reference path evaluates the defining sum term by term and exists to test the
fast one.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import GridError, ImaginaryResidueError
from .fields import PhaseField, RealField, WaveFn, check_same_axis
from .grid import PhaseGrid

GABOR_NORM = (2.0 * math.pi**1.5) ** -0.5
BACK_NORM = (2.0 * math.sqrt(math.pi)) ** -0.5
FOURIER_NORM = (2.0 * math.pi) ** -0.5

# Orientation of the cross-product kernel in the rho -> Wigner formula.
# Fixed by comparison against the psi -> Wigner route; the opposite sign
# mirrors the result through the origin of phase space.
WIGNER_ORIENTATION = +1

IMAG_TOL = 1e-10
_METHODS = ("fast", "reference")


def _check_method(method: str):
    if method not in _METHODS:
        raise ValueError(f"method must be one of {_METHODS}, got {method!r}")


def _require_conjugate(pg: PhaseGrid):
    if not pg.is_conjugate:
        raise GridError("transform needs a conjugate phase grid (p axis derived from q axis)")


def _axes(pg: PhaseGrid):
    qa, pa = pg.q_axis, pg.p_axis
    return qa.points, pa.points, qa.step, pa.step


def _gauss_window(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2)


# Plain Fourier pair ----------------------------------------------------------


def momentum_transform(psi: WaveFn, pg: PhaseGrid | None = None, method: str = "fast") -> WaveFn:
    """Unitary Fourier sum ``(2 pi)^{-1/2} sum_q psi(q) e^{-iqp} dq`` onto the p axis."""
    _check_method(method)
    if not psi.is_position:
        raise GridError("momentum_transform needs a position-space wave function")
    pg = pg or PhaseGrid.from_position(psi.grid)
    check_same_axis(pg.q_axis, psi.grid)
    _require_conjugate(pg)
    q, p, dq, _ = _axes(pg)
    if method == "reference":
        vals = np.exp(-1j * np.outer(p, q)) @ psi.values
    else:
        j = np.arange(q.size)
        vals = np.exp(-1j * q[0] * p) * np.fft.fft(psi.values * np.exp(-1j * j * dq * p[0]))
    return WaveFn(pg.p_axis, FOURIER_NORM * dq * vals)


def position_transform(phi: WaveFn, pg: PhaseGrid, method: str = "fast") -> WaveFn:
    """Inverse of :func:`momentum_transform`."""
    _check_method(method)
    if not phi.is_momentum:
        raise GridError("position_transform needs a momentum-space wave function")
    check_same_axis(pg.p_axis, phi.grid)
    _require_conjugate(pg)
    q, p, _, dp = _axes(pg)
    if method == "reference":
        vals = np.exp(1j * np.outer(q, p)) @ phi.values
    else:
        k = np.arange(p.size)
        vals = np.exp(1j * q * p[0]) * p.size * np.fft.ifft(phi.values * np.exp(1j * q[0] * k * dp))
    return WaveFn(pg.q_axis, FOURIER_NORM * dp * vals)


# psi <-> rho ---------------------------------------------------------------


def _gabor(psi: WaveFn, pg: PhaseGrid, method: str) -> np.ndarray:
    """Window sum without the ``e^{iqp/2}`` prefactor, i.e. G(q, p)."""
    _check_method(method)
    if not psi.is_position:
        raise GridError("expected a position-space wave function")
    check_same_axis(pg.q_axis, psi.grid)
    _require_conjugate(pg)
    q, p, dq, _ = _axes(pg)
    windowed = _gauss_window(q) * psi.values[None, :]
    if method == "reference":
        g = windowed @ np.exp(-1j * np.outer(q, p))
    else:
        j = np.arange(q.size)
        g = np.fft.fft(windowed * np.exp(-1j * j * dq * p[0])[None, :], axis=1)
        g *= np.exp(-1j * q[0] * p)[None, :]
    return GABOR_NORM * dq * g


def psi_to_qp(psi: WaveFn, pg: PhaseGrid | None = None, method: str = "fast") -> PhaseField:
    """Phase-space wave function of a position-space state.

    The fast path does one FFT per window position (O(N^2 log N)); the
    reference path is the dense double sum.
    """
    pg = pg or PhaseGrid.from_position(psi.grid)
    g = _gabor(psi, pg, method)
    q, p, _, _ = _axes(pg)
    return PhaseField(pg, np.exp(0.5j * np.outer(q, p)) * g)


def gabor_no_phase(psi: WaveFn, pg: PhaseGrid | None = None, method: str = "fast") -> PhaseField:
    """``rho(q, p) * exp(-iqp/2)``: the plain Gabor transform."""
    pg = pg or PhaseGrid.from_position(psi.grid)
    return PhaseField(pg, _gabor(psi, pg, method))


def psi_p_to_qp(phi: WaveFn, pg: PhaseGrid, method: str = "fast") -> PhaseField:
    """Phase-space wave function from a momentum-space state.

    ``rho(q,p) = (2 pi^{3/2})^{-1/2} e^{-iqp/2} sum_p' e^{-(p-p')^2/2} phi(p') e^{iqp'} dp``
    """
    _check_method(method)
    if not phi.is_momentum:
        raise GridError("psi_p_to_qp needs a momentum-space wave function")
    check_same_axis(pg.p_axis, phi.grid)
    _require_conjugate(pg)
    q, p, _, dp = _axes(pg)
    windowed = _gauss_window(p) * phi.values[None, :]  # [p, p']
    if method == "reference":
        s = np.exp(1j * np.outer(q, p)) @ windowed.T
    else:
        n = p.size
        k = np.arange(n)
        s = n * np.fft.ifft(windowed * np.exp(1j * q[0] * k * dp)[None, :], axis=1)  # [p, q]
        s = (s * np.exp(1j * q * p[0])[None, :]).T
    return PhaseField(pg, GABOR_NORM * dp * np.exp(-0.5j * np.outer(q, p)) * s)


def qp_to_psi_q(qp: PhaseField) -> WaveFn:
    """``psi(q) = (2 sqrt(pi))^{-1/2} sum_p' rho(q, p') e^{iqp'/2} dp``."""
    _require_conjugate(qp.grid)
    q, p, _, dp = _axes(qp.grid)
    vals = np.sum(qp.values * np.exp(0.5j * np.outer(q, p)), axis=1)
    return WaveFn(qp.grid.q_axis, BACK_NORM * dp * vals)


def qp_to_psi_p(qp: PhaseField) -> WaveFn:
    """``psi(p) = (2 sqrt(pi))^{-1/2} sum_q' rho(q', p) e^{-iq'p/2} dq``."""
    _require_conjugate(qp.grid)
    q, p, dq, _ = _axes(qp.grid)
    vals = np.sum(qp.values * np.exp(-0.5j * np.outer(q, p)), axis=0)
    return WaveFn(qp.grid.p_axis, BACK_NORM * dq * vals)


def project_physical(qp: PhaseField, method: str = "fast") -> PhaseField:
    """Project an arbitrary field onto the image of :func:`psi_to_qp`.

    Because ``qp_to_psi_q`` inverts ``psi_to_qp`` exactly on the grid, this
    map is idempotent to rounding.
    """
    return psi_to_qp(qp_to_psi_q(qp), qp.grid, method)


# Kirkwood-type P(q, p) -------------------------------------------------------


def psi_to_kirkwood(psi: WaveFn, pg: PhaseGrid | None = None, method: str = "fast") -> PhaseField:
    """``P(q, p) = psi*(q) psi(p)``, with ``psi(p)`` the unitary Fourier sum."""
    _check_method(method)
    pg = pg or PhaseGrid.from_position(psi.grid)
    if method == "reference":
        q, p, dq, _ = _axes(pg)
        check_same_axis(pg.q_axis, psi.grid)
        kern = np.exp(-1j * np.outer(q, p))  # [q', p]
        vals = FOURIER_NORM * dq * np.conj(psi.values)[:, None] * (psi.values @ kern)[None, :]
        return PhaseField(pg, vals)
    phi = momentum_transform(psi, pg)
    return PhaseField(pg, np.conj(psi.values)[:, None] * phi.values[None, :])


def qp_to_kirkwood(qp: PhaseField, method: str = "fast") -> PhaseField:
    """Kirkwood-type P from the phase-space wave function.

    ``P(q,p) = (4 pi)^{-1/2} sum_{q',p'} rho(q',p) rho*(q,p') e^{-i(q'p + qp')/2} dq dp``.
    The double sum separates into one sum over q' and one over p'.
    """
    _check_method(method)
    pg = qp.grid
    _require_conjugate(pg)
    q, p, dq, dp = _axes(pg)
    r = qp.values
    pref = (4.0 * math.pi) ** -0.5 * dq * dp
    if method == "reference":
        out = np.empty_like(r)
        e_qp = np.exp(-0.5j * np.outer(q, p))  # e^{-i q p / 2}, [q, p]
        for j in range(q.size):
            # term[k, j', k'] = rho[j', k] conj(rho[j, k']) e^{-i q_j' p_k/2} e^{-i q_j p_k'/2}
            left = (r * e_qp).T  # [k, j']
            right = np.conj(r[j]) * e_qp[j]  # [k']
            out[j] = (left[:, :, None] * right[None, None, :]).sum(axis=(1, 2))
        return PhaseField(pg, pref * out)
    col = np.sum(r * np.exp(-0.5j * np.outer(q, p)), axis=0)  # over q'
    row = np.sum(np.conj(r) * np.exp(-0.5j * np.outer(q, p)), axis=1)  # over p'
    return PhaseField(pg, pref * row[:, None] * col[None, :])


# Wigner ----------------------------------------------------------------------


def _real_checked(w: np.ndarray, tol: float) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(w.real))) if w.size else 1.0)
    resid = float(np.max(np.abs(w.imag))) if w.size else 0.0
    if resid > tol * scale:
        raise ImaginaryResidueError(f"Wigner function has imaginary residue {resid:.3e}")
    return w.real


def half_step_samples(psi: WaveFn) -> np.ndarray:
    """Band-limited interpolation of ``psi`` onto the grid of step ``dq/2``.

    Entry ``2j`` reproduces ``psi[j]``; odd entries are the trigonometric
    interpolant at midpoints, using the same frequency band as the conjugate
    momentum axis.
    """
    n = psi.grid.n
    f = np.fft.fft(psi.values)
    pos = (n + 1) // 2
    padded = np.zeros(2 * n, dtype=complex)
    padded[:pos] = f[:pos]
    padded[2 * n - (n - pos):] = f[pos:]
    return 2.0 * np.fft.ifft(padded)


def psi_to_wigner(
    psi: WaveFn, pg: PhaseGrid | None = None, method: str = "fast", imag_tol: float = IMAG_TOL
) -> RealField:
    """Wigner function ``(2pi)^{-1} sum_xi psi(q+xi/2) psi*(q-xi/2) e^{-i xi p} dxi``.

    ``xi`` runs in steps of ``dq``, so ``psi`` is needed at half-step points;
    these come from :func:`half_step_samples`. Points outside ``[q_min, q_max)``
    count as zero.
    """
    _check_method(method)
    pg = pg or PhaseGrid.from_position(psi.grid)
    check_same_axis(pg.q_axis, psi.grid)
    _require_conjugate(pg)
    q, p, dq, _ = _axes(pg)
    n = q.size
    fine = half_step_samples(psi)
    m = np.arange(-2 * n, 2 * n)
    j = np.arange(n)[:, None]
    i1, i2 = 2 * j + m[None, :], 2 * j - m[None, :]
    ok = (i1 >= 0) & (i1 < 2 * n) & (i2 >= 0) & (i2 < 2 * n)
    prod = np.where(ok, fine[np.clip(i1, 0, 2 * n - 1)] * np.conj(fine[np.clip(i2, 0, 2 * n - 1)]), 0)
    if method == "reference":
        w = prod @ np.exp(-1j * np.outer(m * dq, p))
    else:
        folded = (prod * np.exp(-1j * m * dq * p[0])[None, :]).reshape(n, 4, n).sum(axis=1)
        w = np.fft.fft(folded, axis=1)
    w *= dq / (2.0 * math.pi)
    return RealField(pg, _real_checked(w, imag_tol))


def qp_to_wigner_1d(qp: PhaseField, method: str = "fast", imag_tol: float = IMAG_TOL) -> RealField:
    """Wigner function computed directly from the phase-space wave function.

    ``W(q,p) = pi^{-1} sum_{xi,ups} rho(q-xi, p-ups) rho*(q+xi, p+ups) e^{-is(q ups - p xi)} dxi dups``

    with ``s = WIGNER_ORIENTATION``; ``(xi, ups)`` run over grid offsets and
    samples outside the grid count as zero. The fast path turns the sum over
    ``ups`` into a zero-padded FFT convolution for each ``(q, xi)``, giving
    O(N^3 log N) work; the reference path is the literal O(N^4) sum.
    """
    _check_method(method)
    pg = qp.grid
    _require_conjugate(pg)
    q, p, dq, dp = _axes(pg)
    n = q.size
    s = WIGNER_ORIENTATION
    r = qp.values
    w = np.zeros((n, n), dtype=complex)
    k = np.arange(n)
    if method == "reference":
        b = np.arange(-(n - 1), n)
        for j in range(n):
            amax = min(j, n - 1 - j)
            a = np.arange(-amax, amax + 1)
            lo = r[j - a]  # [a, k'] rows q - xi
            hi = np.conj(r[j + a])  # rows q + xi
            km, kp = k[:, None] - b[None, :], k[:, None] + b[None, :]  # [k, b]
            okb = (km >= 0) & (km < n) & (kp >= 0) & (kp < n)
            kmc, kpc = np.clip(km, 0, n - 1), np.clip(kp, 0, n - 1)
            terms = lo[:, kmc] * hi[:, kpc] * okb[None]  # [a, k, b]
            phase = np.exp(-1j * s * (q[j] * b[None, None, :] * dp - p[None, :, None] * a[:, None, None] * dq))
            w[j] = (terms * phase).sum(axis=(0, 2))
    else:
        half = 0.5 * s * dp * k
        nfft = 2 * n
        for j in range(n):
            amax = min(j, n - 1 - j)
            a = np.arange(-amax, amax + 1)
            x = r[j - a] * np.exp(1j * q[j] * half)[None, :]
            y = np.conj(r[j + a]) * np.exp(-1j * q[j] * half)[None, :]
            conv = np.fft.ifft(np.fft.fft(x, nfft, axis=1) * np.fft.fft(y, nfft, axis=1), axis=1)
            w[j] = np.sum(np.exp(1j * s * np.outer(a * dq, p)) * conv[:, 0:nfft:2], axis=0)
    w *= dq * dp / math.pi
    return RealField(pg, _real_checked(w, imag_tol))


# Phase-space identity --------------------------------------------------------


def phase_identity(qp: PhaseField, method: str = "fast") -> PhaseField:
    """``(4 pi)^{-1} sum_{q',p'} rho(q',p') e^{i(qp' - q'p)/2} dq dp``.

    On fields in the image of :func:`psi_to_qp` this reproduces the input up
    to quadrature error. The discrete operator is neither a projector nor an
    involution for general input; use :func:`project_physical` to project.
    The fast path is two dense matrix products (O(N^3)).
    """
    _check_method(method)
    pg = qp.grid
    _require_conjugate(pg)
    q, p, dq, dp = _axes(pg)
    r = qp.values
    pref = dq * dp / (4.0 * math.pi)
    e_plus = np.exp(0.5j * np.outer(q, p))  # e^{i q p'/2}, [q, p']
    e_minus = np.conj(e_plus)  # e^{-i q' p/2}, [q', p]
    if method == "reference":
        out = np.empty_like(r)
        for j in range(q.size):
            # term[k, j', k'] = e^{i q_j p_k'/2} e^{-i q_j' p_k/2} rho[j', k']
            terms = e_plus[j][None, None, :] * e_minus.T[:, :, None] * r[None, :, :]
            out[j] = terms.sum(axis=(1, 2))
        return PhaseField(pg, pref * out)
    a = e_plus @ r.T  # a[q, q'] = sum_p' e^{iqp'/2} rho(q', p')
    return PhaseField(pg, pref * (a @ e_minus))


__all__ = [
    "GABOR_NORM",
    "BACK_NORM",
    "WIGNER_ORIENTATION",
    "momentum_transform",
    "position_transform",
    "psi_to_qp",
    "psi_p_to_qp",
    "qp_to_psi_q",
    "qp_to_psi_p",
    "project_physical",
    "psi_to_kirkwood",
    "qp_to_kirkwood",
    "psi_to_wigner",
    "qp_to_wigner_1d",
    "phase_identity",
    "gabor_no_phase",
    "half_step_samples",
]

