"""Small dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The Hermitian
eigensolver is a cyclic Jacobi method written here rather than delegated to
LAPACK so that the spectral gaps reported by :mod:`qgv.protocol` come from a
deterministic routine whose convergence criterion is explicit.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12

_JACOBI_OFF_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 100


class NotHermitianError(ValueError):
    pass


def kron(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors), left to right."""
    if not factors:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def projector(psi: np.ndarray) -> np.ndarray:
    """Rank-one projector |psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def pure_state(amplitudes, tol: float = NORM_TOL) -> np.ndarray:
    """Validate a state vector and return it as a complex array.

    Raises ``ValueError`` when the vector is not normalized within ``tol``.
    """
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > tol:
        raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")
    return psi


def overlap_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for two pure states of equal dimension."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def _round_robin(n: int):
    """Pairings for one cyclic sweep; each round holds disjoint (p, q) pairs.

    Uses the circle method so that every off-diagonal pair is visited once per
    sweep and all rotations in a round commute.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs], dtype=int),
                       np.array([q for _, q in pairs], dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(h: np.ndarray, tol: float = _JACOBI_OFF_TOL,
                max_sweeps: int = _JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as the matching columns.  Iteration stops
    once the off-diagonal Frobenius norm falls below ``tol`` times the norm of
    the input, or below ``tol`` itself when that norm is under one.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not is_hermitian(h):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    n = h.shape[0]
    a = 0.5 * (h + h.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(float(np.linalg.norm(a)), 1.0)
    rounds = _round_robin(n) if n > 1 else []

    for _ in range(max_sweeps):
        if _off_norm(a) <= tol * scale:
            break
        for p, q in rounds:
            b = a[p, q]
            mag = np.abs(b)
            active = mag > 1e-300
            if not active.any():
                continue
            p, q, b, mag = p[active], q[active], b[active], mag[active]
            phase = b / mag
            zeta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(zeta, 1.0))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
            g00, g01 = c, s
            g10, g11 = -s * phase.conj(), c * phase.conj()

            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = ap * g00 + aq * g10
            a[:, q] = ap * g01 + aq * g11
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = g00.conj()[:, None] * rp + g10.conj()[:, None] * rq
            a[q, :] = g01.conj()[:, None] * rp + g11.conj()[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * g00 + vq * g10
            v[:, q] = vp * g01 + vq * g11
    else:
        if _off_norm(a) > tol * scale:
            raise RuntimeError("Jacobi iteration did not converge")

    w = np.diag(a).real.copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def hermitian_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, largest first."""
    return jacobi_eigh(h)[0]
