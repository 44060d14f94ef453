"""Photonic state-preparation and measurement modules.

A half-wave plate at axis angle ``h`` followed by a quarter-wave plate at
``q`` turns horizontal light into ``u|H> + v|V>`` with

    u = cos(q) cos(q - 2h) + i sin(q) sin(q - 2h)
    v = sin(q) cos(q - 2h) - i cos(q) sin(q - 2h)

Beam displacers then route these amplitudes onto path qubits.  Depending on
where a qubit sits in the setup its amplitudes are ``(v, u)`` (conventions
``"a"`` and ``"prime"``) or ``(u, v)`` (convention ``"b"``).

Angles are radians here; the command line converts to degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qmath import kron

CONVENTIONS = ("a", "b", "prime")
FIDELITY_TOL = 1e-9


def wrap_angle(x: float) -> float:
    """Map an angle to [-pi/2, pi/2)."""
    return (x + math.pi / 2) % math.pi - math.pi / 2


@dataclass(frozen=True)
class WaveplatePair:
    h: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "h", wrap_angle(self.h))
        object.__setattr__(self, "q", wrap_angle(self.q))

    @classmethod
    def from_degrees(cls, h_deg: float, q_deg: float) -> "WaveplatePair":
        return cls(math.radians(h_deg), math.radians(q_deg))

    def degrees(self):
        return math.degrees(self.h), math.degrees(self.q)


def waveplate_pair_amplitudes(p: WaveplatePair):
    """(u, v) produced from |H> by the HWP-QWP pair."""
    q, h = p.q, p.h
    delta = q - 2.0 * h
    u = complex(math.cos(q) * math.cos(delta), math.sin(q) * math.sin(delta))
    v = complex(math.sin(q) * math.cos(delta), -math.cos(q) * math.sin(delta))
    return u, v


def qubit_amplitudes(p: WaveplatePair, convention: str) -> np.ndarray:
    """Single-qubit amplitudes (c0, c1) under the named routing convention."""
    u, v = waveplate_pair_amplitudes(p)
    if convention in ("a", "prime"):
        return np.array([v, u], dtype=complex)
    if convention == "b":
        return np.array([u, v], dtype=complex)
    raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def prep_two_qubit(pairs: Sequence[WaveplatePair]) -> np.ndarray:
    """(a0|0> + a1|1>) (x) (b0|H> + b1|V>) from two waveplate pairs."""
    if len(pairs) != 2:
        raise ValueError(f"two-qubit preparation needs 2 waveplate pairs, got {len(pairs)}")
    return kron(qubit_amplitudes(pairs[0], "a"), qubit_amplitudes(pairs[1], "b"))


def prep_three_qubit(pairs: Sequence[WaveplatePair]) -> np.ndarray:
    """Product of three qubits, each initialized with the primed convention."""
    if len(pairs) != 3:
        raise ValueError(f"three-qubit preparation needs 3 waveplate pairs, got {len(pairs)}")
    return kron(*(qubit_amplitudes(p, "prime") for p in pairs))


class SolverError(RuntimeError):
    pass


def solve_angles(target: Sequence[complex], convention: str = "a") -> WaveplatePair:
    """Waveplate angles whose forward model reproduces ``target`` up to phase.

    Writing ``alpha = q`` and ``beta = q - 2h`` the forward map is
    ``cos(beta)|alpha> + i sin(beta)|alpha_perp>``, an ellipse with orientation
    ``alpha`` and ellipticity ``beta``.  Both are read off the Stokes vector
    of the target: S1 = cos 2a cos 2b, S2 = sin 2a cos 2b, S3 = -sin 2b.
    """
    t = np.asarray(target, dtype=complex).reshape(-1)
    if t.size != 2:
        raise ValueError("target must be a single-qubit state")
    norm = np.linalg.norm(t)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"target is not normalized (norm {norm:.12g})")
    if convention in ("a", "prime"):
        u, v = t[1], t[0]
    elif convention == "b":
        u, v = t[0], t[1]
    else:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")

    s1 = abs(u) ** 2 - abs(v) ** 2
    cross = u.conjugate() * v
    s2, s3 = 2.0 * cross.real, 2.0 * cross.imag
    beta = -0.5 * math.asin(max(-1.0, min(1.0, s3)))
    alpha = 0.5 * math.atan2(s2, s1)
    pair = WaveplatePair(h=0.5 * (alpha - beta), q=alpha)

    fid = abs(np.vdot(qubit_amplitudes(pair, convention), t)) ** 2
    if fid < 1.0 - FIDELITY_TOL:
        raise SolverError(f"angle solution reaches fidelity {fid:.12f} only")
    return pair


def _orthonormal_bases(bases, n: int) -> list:
    if len(bases) != n:
        raise ValueError(f"expected {n} single-qubit bases, got {len(bases)}")
    out = []
    for b in bases:
        b = np.asarray(b, dtype=complex)
        if b.shape != (2, 2) or np.max(np.abs(b @ b.conj().T - np.eye(2))) > 1e-10:
            raise ValueError("each basis must be two orthonormal vectors given as rows")
        out.append(b)
    return out


def _basis_coefficients(state: np.ndarray, bases: list) -> np.ndarray:
    """a[i, j, ...] = <phi_i phi_j ...|state> as an n-index tensor."""
    n = len(bases)
    psi = np.asarray(state, dtype=complex).reshape((2,) * n)
    for axis, b in enumerate(bases):
        psi = np.moveaxis(np.tensordot(b.conj(), psi, axes=([1], [axis])), 0, axis)
    return psi


def measurement_probs_2q(state: Sequence[complex], bases) -> np.ndarray:
    """Click probabilities of SPCMs 0..3 in the two-qubit measurement module.

    ``bases[0]`` is measured on the path qubit and ``bases[1]`` on the
    polarization qubit; each basis is a 2x2 array of row vectors.
    """
    b = _orthonormal_bases(bases, 2)
    a = _basis_coefficients(np.asarray(state).reshape(-1), b)
    if a.size != 4:
        raise ValueError("two-qubit module needs a 4-dimensional state")
    # Polarization rotated into H/V, then the BD pair routes
    # |phi_i>|j> -> |1-j>|phi_i>; after the second rotation detector
    # i*2 + j sees amplitude a[j, 1 - i].
    routed = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            routed[i, j] = a[j, 1 - i]
    return (np.abs(routed) ** 2).reshape(-1)


def measurement_probs_3q(state: Sequence[complex], bases) -> np.ndarray:
    """Click probabilities of SPCMs 0..7 in the three-qubit measurement module.

    Detector ``4i + 2j + k`` collects amplitude a[k, 1-j, 1-i] after the two
    beam-displacer stages, i.e. the order a011, a111, a001, a101, a010, a110,
    a000, a100.
    """
    b = _orthonormal_bases(bases, 3)
    a = _basis_coefficients(np.asarray(state).reshape(-1), b)
    if a.size != 8:
        raise ValueError("three-qubit module needs an 8-dimensional state")
    # first BD stage: |psi_i>|psi_j>|k> -> coefficient a[i, k, 1-j] on |psi_i>|j>|psi_k>
    stage1 = np.empty((2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                stage1[i, j, k] = a[i, k, 1 - j]
    # second BD stage: coefficient stage1[k, i, 1-j] on |i>|j>|psi_k>
    stage2 = np.empty((2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                stage2[i, j, k] = stage1[k, i, 1 - j]
    return (np.abs(stage2) ** 2).reshape(-1)
