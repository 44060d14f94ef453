"""Target gates, Kraus-form channels, parametric noise and the fidelity oracle.

Qubit 0 is the leftmost tensor factor and the most significant bit of a basis
index, so ``|10>`` is basis vector 2.  Noise always acts after the ideal gate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qmath import dagger, is_unitary, kron

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

KRAUS_TOL = 1e-12


def num_qubits(dim: int) -> int:
    n = int(round(math.log2(dim)))
    if 2 ** n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class UnitaryGate:
    name: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if not is_unitary(m):
            raise ValueError(f"gate {self.name!r} is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _permutation_gate(name: str, dim: int, swap: tuple) -> UnitaryGate:
    cols = list(range(dim))
    i, j = swap
    cols[i], cols[j] = cols[j], cols[i]
    return UnitaryGate(name, np.eye(dim, dtype=complex)[:, cols])


def gate_cnot() -> UnitaryGate:
    """CNOT with qubit 0 as control: swaps basis states 2 and 3."""
    return _permutation_gate("cnot", 4, (2, 3))


def gate_toffoli() -> UnitaryGate:
    """Toffoli with qubits 0 and 1 as controls: swaps basis states 6 and 7."""
    return _permutation_gate("toffoli", 8, (6, 7))


GATES = {"cnot": gate_cnot, "toffoli": gate_toffoli}


def gate_by_name(name: str) -> UnitaryGate:
    try:
        return GATES[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown gate {name!r}; expected one of {sorted(GATES)}") from None


@dataclass(frozen=True)
class QuantumChannel:
    """A CPTP map stored as a tuple of Kraus operators."""

    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise ValueError("Kraus operators must be square and of equal size")
        total = sum(dagger(k) @ k for k in ops)
        err = np.max(np.abs(total - np.eye(d)))
        if err > KRAUS_TOL:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.3g})")
        object.__setattr__(self, "kraus", ops)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)

    def then(self, other: "QuantumChannel") -> "QuantumChannel":
        """Channel that applies ``self`` first and ``other`` second."""
        if other.dim != self.dim:
            raise ValueError("cannot compose channels of different dimension")
        return QuantumChannel(tuple(b @ a for b in other.kraus for a in self.kraus))


def unitary_channel(u) -> QuantumChannel:
    m = u.matrix if isinstance(u, UnitaryGate) else np.asarray(u, dtype=complex)
    if not is_unitary(m):
        raise ValueError("unitary_channel needs a unitary matrix")
    return QuantumChannel((m,))


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel((np.eye(dim, dtype=complex),))


def pauli_strings(n: int):
    """All 4**n n-qubit Pauli strings as (label, matrix), identity first."""
    for letters in itertools.product("IXYZ", repeat=n):
        yield "".join(letters), kron(*(PAULIS[c] for c in letters))


def depolarizing(dim: int, p: float) -> QuantumChannel:
    """rho -> (1 - p) rho + p I/d, written with Pauli-string Kraus operators.

    Uniform Pauli twirling gives I/d, so the weight on the identity is
    1 - p + p/d^2 and each of the d^2 - 1 other strings carries p/d^2.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p}")
    n = num_qubits(dim)
    w_other = p / dim ** 2
    ops = []
    for label, m in pauli_strings(n):
        w = 1.0 - p + w_other if set(label) == {"I"} else w_other
        if w > 0.0:
            ops.append(math.sqrt(w) * m)
    return QuantumChannel(tuple(ops))


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def embed(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Place a single-qubit operator on ``qubit`` of an ``n``-qubit register."""
    if not 0 <= qubit < n:
        raise ValueError(f"qubit index {qubit} out of range for {n} qubits")
    return kron(*(op if i == qubit else PAULI_I for i in range(n)))


def coherent_overrotation(u: UnitaryGate, qubit: int, theta: float) -> QuantumChannel:
    """Single Kraus operator R_y(theta) on ``qubit`` following the gate."""
    n = num_qubits(u.dim)
    return QuantumChannel((embed(ry(theta), qubit, n) @ u.matrix,))


def apply(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.dim, ch.dim):
        raise ValueError(f"state of shape {rho.shape} does not match channel dimension {ch.dim}")
    out = sum(k @ rho @ dagger(k) for k in ch.kraus)
    return 0.5 * (out + dagger(out))


def max_entangled(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex).reshape(-1) / math.sqrt(dim)


def choi(ch: QuantumChannel) -> np.ndarray:
    """Normalized Choi state (Lambda x id)(|Phi><Phi|), trace one."""
    d = ch.dim
    phi = max_entangled(d)
    rho = np.outer(phi, phi.conj())
    out = np.zeros((d * d, d * d), dtype=complex)
    ident = np.eye(d, dtype=complex)
    for k in ch.kraus:
        kk = np.kron(k, ident)
        out += kk @ rho @ dagger(kk)
    return out


def entanglement_fidelity(ch: QuantumChannel, u: UnitaryGate) -> float:
    if ch.dim != u.dim:
        raise ValueError(f"channel dimension {ch.dim} != gate dimension {u.dim}")
    undo = unitary_channel(UnitaryGate("inverse", dagger(u.matrix)))
    phi = max_entangled(u.dim)
    return float(np.vdot(phi, choi(ch.then(undo)) @ phi).real)


def avg_gate_fidelity(ch: QuantumChannel, u: UnitaryGate) -> float:
    """Average gate fidelity of ``ch`` with respect to the target ``u``."""
    d = u.dim
    f_e = entanglement_fidelity(ch, u)
    return float(np.clip((d * f_e + 1.0) / (d + 1.0), 0.0, 1.0))


def haar_random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def mc_avg_gate_fidelity(ch: QuantumChannel, u: UnitaryGate, samples: int,
                         rng: np.random.Generator):
    """Haar-sampled estimate of the average gate fidelity.

    Returns ``(mean, standard_error)``.  Evaluates <psi|U^dag Lambda(psi) U|psi>
    directly as sum_k |<U psi|K_k|psi>|^2, independently of the Choi route.
    """
    d = u.dim
    z = rng.normal(size=(samples, d)) + 1j * rng.normal(size=(samples, d))
    psi = z / np.linalg.norm(z, axis=1, keepdims=True)
    target = psi @ u.matrix.T
    vals = np.zeros(samples)
    for k in ch.kraus:
        amp = np.einsum("si,si->s", target.conj(), psi @ k.T)
        vals += np.abs(amp) ** 2
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class NoiseSpec:
    """Parametric noise applied after the target gate.

    Text form is ``kind:strength[:qubit]``, e.g. ``depolarizing:0.004`` or
    ``coherent:0.05:1``; ``none`` means the ideal gate.
    """

    kind: str = "none"
    strength: float = 0.0
    qubit: Optional[int] = None

    KINDS = ("none", "depolarizing", "coherent")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not math.isfinite(self.strength):
            raise ValueError("noise strength must be finite")
        if self.kind == "depolarizing" and not 0.0 <= self.strength <= 1.0:
            raise ValueError("depolarizing strength must lie in [0, 1]")
        if self.kind == "coherent":
            if not -math.pi <= self.strength <= math.pi:
                raise ValueError("coherent rotation angle must lie in [-pi, pi]")
            if self.qubit is None or self.qubit < 0:
                raise ValueError("coherent noise needs a non-negative qubit index")

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        parts = text.strip().split(":")
        kind = parts[0].lower()
        if kind == "none":
            if len(parts) > 1:
                raise ValueError(f"'none' takes no parameters: {text!r}")
            return cls()
        if kind == "coherent-overrotation":
            kind = "coherent"
        try:
            if kind == "depolarizing" and len(parts) == 2:
                return cls(kind, float(parts[1]))
            if kind == "coherent" and len(parts) in (2, 3):
                qubit = int(parts[2]) if len(parts) == 3 else 0
                return cls(kind, float(parts[1]), qubit)
        except ValueError as exc:
            raise ValueError(f"malformed noise spec {text!r}: {exc}") from None
        raise ValueError(f"malformed noise spec {text!r}")

    def __str__(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "depolarizing":
            return f"depolarizing:{self.strength!r}"
        return f"coherent:{self.strength!r}:{self.qubit}"

    def channel(self, gate: UnitaryGate) -> QuantumChannel:
        """The noisy implementation noise(U(.)) of ``gate``."""
        ideal = unitary_channel(gate)
        if self.kind == "none":
            return ideal
        if self.kind == "depolarizing":
            return ideal.then(depolarizing(gate.dim, self.strength))
        return coherent_overrotation(gate, self.qubit, self.strength)


def noisy_gate(gate: UnitaryGate, noise: NoiseSpec) -> QuantumChannel:
    return noise.channel(gate)

