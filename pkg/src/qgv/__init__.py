"""Verification of CNOT and Toffoli gates with local Pauli tests."""

from .channels import (
    NoiseSpec,
    QuantumChannel,
    UnitaryGate,
    avg_gate_fidelity,
    depolarizing,
    gate_cnot,
    gate_toffoli,
)
from .protocol import build_protocol, count_settings, process_operator
from .simulator import VerificationConfig, expected_pass_rate, run_campaign
from .stats import VerificationTarget, infidelity_bound, kl, kl_inverse, plan, significance

__version__ = "0.1.0"

__all__ = [
    "NoiseSpec",
    "QuantumChannel",
    "UnitaryGate",
    "VerificationConfig",
    "VerificationTarget",
    "avg_gate_fidelity",
    "build_protocol",
    "count_settings",
    "depolarizing",
    "expected_pass_rate",
    "gate_cnot",
    "gate_toffoli",
    "infidelity_bound",
    "kl",
    "kl_inverse",
    "plan",
    "process_operator",
    "run_campaign",
    "significance",
]
