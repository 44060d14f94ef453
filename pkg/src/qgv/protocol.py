"""Verification protocols for the CNOT and Toffoli gates.

A protocol is an ensemble of product test states ``{rho_j, p_j}`` together
with, for each state, a short list of two-outcome projective tests that the
ideal output ``U rho_j U^dag`` passes with certainty.  Every test also carries
its local realization: the Pauli measured on each qubit and the set of raw
outcome strings (over {+1, -1}^n) that count as a pass.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channels import PAULI_I, PAULIS, UnitaryGate, embed, gate_by_name, num_qubits
from .qmath import dagger, hermitian_eigenvalues, kron, projector

BALANCE_TOL = 1e-12
PROJECTOR_TOL = 1e-12

_S2 = 1 / math.sqrt(2)
SINGLE_QUBIT_STATES = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S2, _S2], dtype=complex),
    "A": np.array([_S2, -_S2], dtype=complex),
    "R": np.array([_S2, 1j * _S2], dtype=complex),
    "L": np.array([_S2, -1j * _S2], dtype=complex),
}
# (Pauli, eigenvalue) -> state label
EIGENSTATE_LABEL = {
    ("Z", 1): "H", ("Z", -1): "V",
    ("X", 1): "D", ("X", -1): "A",
    ("Y", 1): "R", ("Y", -1): "L",
}


def product_state(label: str) -> np.ndarray:
    """State vector for a label such as ``"HVD"`` (one letter per qubit)."""
    try:
        return kron(*(SINGLE_QUBIT_STATES[c] for c in label))
    except KeyError:
        raise ValueError(f"unknown single-qubit state in {label!r}") from None


def parse_signed_pauli(op: str) -> tuple:
    """``"X"``, ``"+Y"``, ``"-Z"`` -> (sign, letter)."""
    s = op.strip()
    sign = 1
    if s[:1] in "+-" and len(s) > 1:
        sign = -1 if s[0] == "-" else 1
        s = s[1:]
    if s not in ("X", "Y", "Z"):
        raise ValueError(f"{op!r} is not a signed Pauli X, Y or Z")
    return sign, s


def eigenprojector(sign: int, letter: str, eigenvalue: int) -> np.ndarray:
    """Projector onto the ``eigenvalue`` eigenspace of ``sign * letter``."""
    return 0.5 * (PAULI_I + sign * eigenvalue * PAULIS[letter])


@dataclass(frozen=True)
class TestState:
    index: int
    label: str
    basis: str
    probability: float
    state: np.ndarray

    __test__ = False  # not a pytest class

    @property
    def rho(self) -> np.ndarray:
        return projector(self.state)


@dataclass(frozen=True)
class ProjectiveTest:
    """Two-outcome test {M, I - M} with its Pauli-measurement realization.

    ``setting`` names the Pauli measured on each qubit (qubit 0 first) and
    ``accept`` lists the raw outcome tuples that count as a pass.
    """

    operator: np.ndarray
    probability: float
    setting: str
    accept: frozenset

    def __post_init__(self):
        m = np.asarray(self.operator, dtype=complex)
        if np.max(np.abs(m @ m - m)) > PROJECTOR_TOL or np.max(np.abs(m - dagger(m))) > PROJECTOR_TOL:
            raise ValueError("test operator is not an orthogonal projector")
        object.__setattr__(self, "operator", m)
        object.__setattr__(self, "accept", frozenset(tuple(o) for o in self.accept))

    @property
    def num_qubits(self) -> int:
        return len(self.setting)

    def realization_projector(self) -> np.ndarray:
        """Sum of the product eigenprojectors of every accepted outcome."""
        d = 2 ** self.num_qubits
        out = np.zeros((d, d), dtype=complex)
        for outcome in self.accept:
            out += kron(*(eigenprojector(1, p, o) for p, o in zip(self.setting, outcome)))
        return out

    def accept_string(self) -> str:
        def fmt(o):
            return "".join("+" if x > 0 else "-" for x in o)
        # '+' sorts before '-' in this listing
        items = sorted(self.accept, key=lambda o: tuple(-x for x in o))
        return "{" + ",".join(fmt(o) for o in items) + "}"


def product_test(target: np.ndarray, probability: float = 1.0) -> ProjectiveTest:
    """Single-setting test projecting onto a product of Pauli eigenstates."""
    target = np.asarray(target, dtype=complex).reshape(-1)
    n = num_qubits(target.size)
    for choice in itertools.product(EIGENSTATE_LABEL.items(), repeat=n):
        label = "".join(lbl for _, lbl in choice)
        if abs(abs(np.vdot(product_state(label), target)) - 1.0) < 1e-10:
            setting = "".join(p for (p, _), _ in choice)
            outcome = tuple(e for (_, e), _ in choice)
            return ProjectiveTest(projector(target), probability, setting, {outcome})
    raise ValueError("target is not a product of single-qubit Pauli eigenstates")


def _two_qubit_parity_test(sign: int, o1: str, o2: str, probability: float) -> ProjectiveTest:
    op = 0.5 * (np.eye(4) + sign * kron(PAULIS[o1], PAULIS[o2]))
    accept = {(a, b) for a in (1, -1) for b in (1, -1) if a * b == sign}
    return ProjectiveTest(op, probability, o1 + o2, accept)


def bell_strategy(j: int) -> tuple:
    """Three parity tests for the Bell-state output CX|psi_j>, j = 9..12."""
    if not 9 <= j <= 12:
        raise ValueError(f"Bell strategy is defined for j = 9..12, got {j}")
    b = j - 9
    b0, b1 = b & 1, (b >> 1) & 1
    third = 1.0 / 3.0
    return (
        _two_qubit_parity_test((-1) ** (b0 + b1 + 1), "X", "Z", third),
        _two_qubit_parity_test((-1) ** b1, "Y", "X", third),
        _two_qubit_parity_test((-1) ** b0, "Z", "Y", third),
    )


def build_f(k: int, o1: str, o2: str, o3: str, probability: float = 1.0) -> ProjectiveTest:
    """Three-qubit cover test f_k(O1, O2, O3) with k in {1, 2, 3}.

    Passes when the (signed) outcome on qubit k is +1 and the other two are not
    both -1, or when qubit k gives -1 and the other two are both -1.  Each
    single-qubit factor acts on its own qubit regardless of ``k``.
    """
    if k not in (1, 2, 3):
        raise ValueError(f"k must be 1, 2 or 3, got {k!r}")
    ops = [parse_signed_pauli(o) for o in (o1, o2, o3)]
    kk = k - 1
    s, t = [i for i in range(3) if i != kk]

    def factor(i, eigenvalue):
        sign, letter = ops[i]
        return embed(eigenprojector(sign, letter, eigenvalue), i, 3)

    both_minus = factor(s, -1) @ factor(t, -1)
    m = factor(kk, 1) @ (np.eye(8) - both_minus) + factor(kk, -1) @ both_minus

    accept = set()
    for raw in itertools.product((1, -1), repeat=3):
        signed = [ops[i][0] * raw[i] for i in range(3)]
        others_minus = signed[s] == -1 and signed[t] == -1
        if (signed[kk] == 1 and not others_minus) or (signed[kk] == -1 and others_minus):
            accept.add(raw)
    setting = "".join(letter for _, letter in ops)
    return ProjectiveTest(m, probability, setting, accept)


def hypergraph_strategy(j: int) -> tuple:
    """Cover-protocol tests for the Toffoli outputs C^2X|psi_j>, j = 9..16."""
    if not 9 <= j <= 16:
        raise ValueError(f"hypergraph strategy is defined for j = 9..16, got {j}")
    b = j - 9
    b0, b1, b2 = b & 1, (b >> 1) & 1, (b >> 2) & 1

    def signed(bit, letter):
        return ("-" if bit else "+") + letter

    third = 1.0 / 3.0
    return (
        build_f(1, signed(b2, "X"), "Z", "X", third),
        build_f(2, "Z", signed(b1, "X"), "X", third),
        build_f(3, "Z", "Z", signed(b0, "Z"), third),
    )


def _states_from_table(rows: Sequence[tuple]) -> list:
    labels = []
    for basis, letters in rows:
        for combo in itertools.product(*letters):
            labels.append((basis, "".join(combo)))
    p = 1.0 / len(labels)
    return [TestState(j, lbl, basis, p, product_state(lbl))
            for j, (basis, lbl) in enumerate(labels, start=1)]


def cnot_test_states() -> list:
    """Twelve product eigenstates of ZZ, XX and YY, each with probability 1/12."""
    return _states_from_table([("ZZ", ("HV", "HV")), ("XX", ("DA", "DA")), ("YY", ("RL", "RL"))])


def toffoli_test_states() -> list:
    """Sixteen product eigenstates of ZZX and XXZ, each with probability 1/16."""
    return _states_from_table([("ZZX", ("HV", "HV", "DA")), ("XXZ", ("DA", "DA", "HV"))])


@dataclass(frozen=True)
class GateProtocol:
    gate: UnitaryGate
    states: tuple
    strategies: tuple

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "strategies", tuple(tuple(s) for s in self.strategies))
        if len(self.states) != len(self.strategies):
            raise ValueError("every test state needs exactly one strategy")
        total = sum(s.probability for s in self.states)
        if abs(total - 1.0) > 1e-12 or any(s.probability <= 0 for s in self.states):
            raise ValueError("test-state probabilities must be positive and sum to 1")
        for st, tests in zip(self.states, self.strategies):
            if not tests:
                raise ValueError(f"test state {st.index} has no tests")
            if abs(sum(t.probability for t in tests) - 1.0) > 1e-12:
                raise ValueError(f"test probabilities for state {st.index} do not sum to 1")
            for t in tests:
                if t.operator.shape != (self.dim, self.dim):
                    raise ValueError("test operator dimension does not match the gate")

    @property
    def dim(self) -> int:
        return self.gate.dim

    def omega(self, i: int) -> np.ndarray:
        """Verification operator of the i-th state (0-based position)."""
        return sum(t.probability * t.operator for t in self.strategies[i])

    def ideal_output(self, i: int) -> np.ndarray:
        return self.gate.matrix @ self.states[i].state

    def average_state(self) -> np.ndarray:
        return sum(s.probability * s.rho for s in self.states)

    def is_balanced(self, tol: float = BALANCE_TOL) -> bool:
        return bool(np.max(np.abs(self.average_state() - np.eye(self.dim) / self.dim)) <= tol)


def build_protocol(gate_name: str) -> GateProtocol:
    name = gate_name.lower()
    gate = gate_by_name(name)
    if name == "cnot":
        states = cnot_test_states()
        n_product, strategy = 8, bell_strategy
    else:
        states = toffoli_test_states()
        n_product, strategy = 8, hypergraph_strategy
    strategies = []
    for st in states:
        if st.index <= n_product:
            strategies.append((product_test(gate.matrix @ st.state),))
        else:
            strategies.append(strategy(st.index))
    return GateProtocol(gate, states, strategies)


@dataclass(frozen=True)
class ProcessOperator:
    theta: np.ndarray
    eigenvalues: np.ndarray

    @property
    def nu(self) -> float:
        """Spectral gap: one minus the second largest eigenvalue."""
        return float(1.0 - self.eigenvalues[1])


def process_operator(protocol: GateProtocol) -> ProcessOperator:
    """Theta = d * sum_j p_j U^dag Omega_j U (x) conj(rho_j)."""
    if not protocol.is_balanced():
        raise ValueError("protocol test states are not balanced (sum_j p_j rho_j != I/d)")
    d = protocol.dim
    u = protocol.gate.matrix
    theta = np.zeros((d * d, d * d), dtype=complex)
    for i, st in enumerate(protocol.states):
        pulled_back = dagger(u) @ protocol.omega(i) @ u
        theta += st.probability * np.kron(pulled_back, st.rho.conj())
    theta *= d
    theta = 0.5 * (theta + dagger(theta))
    return ProcessOperator(theta, hermitian_eigenvalues(theta))


def spectral_gap(gate_name: str) -> float:
    return process_operator(build_protocol(gate_name)).nu


def count_settings(protocol: GateProtocol) -> int:
    """Number of (test state, test) pairs."""
    return sum(len(tests) for tests in protocol.strategies)


def dump_protocol(protocol: GateProtocol, name: Optional[str] = None) -> str:
    """Stable plain-text listing of states, probabilities and test settings."""
    name = name or protocol.gate.name
    lines = [f"# protocol {name} d={protocol.dim} states={len(protocol.states)} "
             f"settings={count_settings(protocol)}"]
    for st, tests in zip(protocol.states, protocol.strategies):
        lines.append(f"j={st.index} state={st.label} basis={st.basis} p={st.probability:.9f}")
        for l, t in enumerate(tests, start=1):
            lines.append(f"  l={l} p={t.probability:.9f} setting={t.setting} accept={t.accept_string()}")
    return "\n".join(lines) + "\n"
