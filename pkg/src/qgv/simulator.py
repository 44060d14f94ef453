"""Monte Carlo verification runs and multi-run campaigns.

Each test draws a state index ``j`` from ``p_j``, a test index ``l`` from
``p_{l|j}`` and then a pass bit from Bernoulli(Tr[M_l Lambda(rho_j)]), in that
order.  Run ``i`` of a campaign uses a Philox stream keyed on ``(seed, i)`` so
output does not depend on how runs are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channels import NoiseSpec, QuantumChannel, apply
from .protocol import GateProtocol, build_protocol, process_operator
from .stats import VerificationTarget, infidelity_bound, passing_bound, significance

CSV_HEADER = ("N", "pass_rate", "delta_bound", "epsilon_bound")
DEFAULT_FIT_WINDOW = (10, 200)
_DENSE_CHECKPOINTS = 1000
_SPARSE_STRIDE = 10


def expected_pass_rate(protocol: GateProtocol, ch: QuantumChannel) -> float:
    """Exact probability that a single randomly chosen test passes."""
    if ch.dim != protocol.dim:
        raise ValueError(f"channel dimension {ch.dim} != protocol dimension {protocol.dim}")
    total = 0.0
    for st, tests in zip(protocol.states, protocol.strategies):
        out = apply(ch, st.rho)
        for t in tests:
            total += st.probability * t.probability * float(np.trace(t.operator @ out).real)
    return total


@dataclass(frozen=True)
class _SamplingTable:
    cum_state: np.ndarray    # (J,)
    cum_test: np.ndarray     # (J, Lmax), padded with 1.0
    pass_prob: np.ndarray    # (J, Lmax)

    @classmethod
    def build(cls, protocol: GateProtocol, ch: QuantumChannel) -> "_SamplingTable":
        if ch.dim != protocol.dim:
            raise ValueError(f"channel dimension {ch.dim} != protocol dimension {protocol.dim}")
        n_states = len(protocol.states)
        l_max = max(len(t) for t in protocol.strategies)
        cum_state = np.cumsum([s.probability for s in protocol.states])
        cum_state[-1] = 1.0
        cum_test = np.ones((n_states, l_max))
        pass_prob = np.zeros((n_states, l_max))
        for j, (st, tests) in enumerate(zip(protocol.states, protocol.strategies)):
            out = apply(ch, st.rho)
            cum = np.cumsum([t.probability for t in tests])
            cum[-1] = 1.0
            cum_test[j, :len(tests)] = cum
            for l, t in enumerate(tests):
                q = float(np.trace(t.operator @ out).real)
                pass_prob[j, l] = min(1.0, max(0.0, q))
        return cls(cum_state, cum_test, pass_prob)


def default_checkpoints(n: int, stride: Optional[int] = None) -> np.ndarray:
    """Checkpoint test counts: every test to 1000 then every 10th, or every
    ``stride`` tests when given.  The final count ``n`` is always included."""
    if n < 1:
        raise ValueError("number of tests must be positive")
    if stride is None:
        dense = np.arange(1, min(n, _DENSE_CHECKPOINTS) + 1)
        sparse = np.arange(_DENSE_CHECKPOINTS + _SPARSE_STRIDE, n + 1, _SPARSE_STRIDE)
        pts = np.concatenate([dense, sparse])
    else:
        if stride < 1:
            raise ValueError("checkpoint stride must be at least 1")
        pts = np.arange(stride, n + 1, stride)
    if pts.size == 0 or pts[-1] != n:
        pts = np.append(pts, n)
    return pts.astype(np.int64)


@dataclass
class RunRecord:
    """Outcomes of one verification run; indices ``j`` and ``l`` are 1-based."""

    state_index: np.ndarray
    test_index: np.ndarray
    passed: np.ndarray
    checkpoints: np.ndarray
    pass_counts: np.ndarray

    @property
    def n_tests(self) -> int:
        return int(self.passed.size)

    @property
    def pass_rate(self) -> float:
        return float(self.passed.mean()) if self.passed.size else 0.0

    def outcomes(self):
        return zip(self.state_index.tolist(), self.test_index.tolist(), self.passed.tolist())


def _run(table: _SamplingTable, n: int, rng: np.random.Generator,
         checkpoints: np.ndarray) -> RunRecord:
    u = rng.random((n, 3))
    j = np.searchsorted(table.cum_state, u[:, 0], side="right")
    j = np.minimum(j, table.cum_state.size - 1)
    l = (u[:, 1:2] >= table.cum_test[j]).sum(axis=1)
    l = np.minimum(l, table.cum_test.shape[1] - 1)
    passed = u[:, 2] < table.pass_prob[j, l]
    counts = np.cumsum(passed, dtype=np.int64)[checkpoints - 1]
    return RunRecord(j + 1, l + 1, passed, checkpoints, counts)


def run_stream(seed: int, run: int) -> np.random.Generator:
    """Independent generator for run ``run`` of a campaign seeded with ``seed``."""
    if seed < 0 or run < 0:
        raise ValueError("seed and run index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run])))


def run_single(protocol: GateProtocol, ch: QuantumChannel, n: int,
               rng: np.random.Generator, checkpoints: Optional[Sequence[int]] = None) -> RunRecord:
    """Simulate ``n`` verification tests of ``ch`` against ``protocol``."""
    cps = default_checkpoints(n) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if cps.size and (cps.min() < 1 or cps.max() > n or np.any(np.diff(cps) <= 0)):
        raise ValueError("checkpoints must be strictly increasing within 1..n")
    return _run(_SamplingTable.build(protocol, ch), n, rng, cps)


@dataclass
class Curve:
    n: np.ndarray
    pass_rate: np.ndarray
    delta_bound: np.ndarray
    epsilon_bound: np.ndarray

    def __len__(self):
        return int(self.n.size)

    def rows(self):
        return zip(self.n.tolist(), self.pass_rate.tolist(),
                   self.delta_bound.tolist(), self.epsilon_bound.tolist())

    def first_below(self, threshold: float) -> Optional[int]:
        """Smallest checkpoint N at which the delta bound is <= ``threshold``."""
        hits = np.nonzero(self.delta_bound <= threshold)[0]
        return int(self.n[hits[0]]) if hits.size else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for n, p, dl, ep in self.rows():
            w.writerow([n, f"{p:.9g}", f"{dl:.9g}", f"{ep:.9g}"])
        return buf.getvalue()


def curve_from_rates(n: Sequence[int], rates: Sequence[float], target: VerificationTarget) -> Curve:
    """Evaluate the significance and infidelity bounds at each checkpoint.

    Where the passing rate does not beat the passing bound the delta entry is
    1; the infidelity bound is evaluated at every point regardless.
    """
    n = np.asarray(n, dtype=np.int64)
    rates = np.clip(np.asarray(rates, dtype=float), 0.0, 1.0)
    deltas = np.array([significance(p, int(k), target) for k, p in zip(n, rates)])
    eps = np.array([infidelity_bound(p, int(k), target.delta, target.d, target.nu)
                    for k, p in zip(n, rates)])
    return Curve(n, rates, deltas, eps)


def fit_power_law(curve: Curve, window: tuple = DEFAULT_FIT_WINDOW) -> float:
    """Least-squares slope of ln(epsilon bound) against ln(N) inside ``window``."""
    lo, hi = window
    mask = (curve.n >= lo) & (curve.n <= hi) & (curve.epsilon_bound > 0)
    if mask.sum() < 2 or np.unique(curve.n[mask]).size < 2:
        raise ValueError(f"need at least two distinct positive points in window {window}")
    x = np.log(curve.n[mask].astype(float))
    y = np.log(curve.epsilon_bound[mask])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


@dataclass(frozen=True)
class VerificationConfig:
    gate: str
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    epsilon: float = 0.01
    delta: float = 0.05
    tests: int = 1000
    runs: int = 50
    seed: int = 0
    stride: Optional[int] = None
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.gate.lower() not in ("cnot", "toffoli"):
            raise ValueError(f"unknown gate {self.gate!r}")
        if self.tests < 1 or self.runs < 1:
            raise ValueError("tests and runs must be positive")
        if self.stride is not None and self.stride < 1:
            raise ValueError("stride must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")

    def echo(self) -> dict:
        return {
            "gate": self.gate.lower(), "noise": str(self.noise), "epsilon": self.epsilon,
            "delta": self.delta, "tests": self.tests, "runs": self.runs, "seed": self.seed,
            "stride": self.stride, "threshold": self.threshold,
        }


@dataclass
class CampaignResult:
    config: VerificationConfig
    target: VerificationTarget
    records: list
    averaged: Curve
    single: Curve
    accepted: bool
    fitted_exponent: Optional[float]

    def summary(self) -> dict:
        cfg = self.config.echo()
        return {
            "gate": cfg["gate"],
            "noise": cfg["noise"],
            "seed": cfg["seed"],
            "runs": cfg["runs"],
            "final_pass_rate": float(self.averaged.pass_rate[-1]),
            "final_delta": float(self.averaged.delta_bound[-1]),
            "final_epsilon": float(self.averaged.epsilon_bound[-1]),
            "fitted_exponent": self.fitted_exponent,
            "accepted": self.accepted,
            "config": cfg,
            "nu": self.target.nu,
        }

    def write(self, out_dir: str) -> dict:
        """Write ``curve.csv``, ``single_run.csv`` and ``summary.json``."""
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "curve": os.path.join(out_dir, "curve.csv"),
            "single": os.path.join(out_dir, "single_run.csv"),
            "summary": os.path.join(out_dir, "summary.json"),
        }
        with open(paths["curve"], "w", newline="") as f:
            f.write(self.averaged.to_csv())
        with open(paths["single"], "w", newline="") as f:
            f.write(self.single.to_csv())
        with open(paths["summary"], "w") as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)
            f.write("\n")
        return paths


def run_campaign(cfg: VerificationConfig, workers: int = 1,
                 protocol: Optional[GateProtocol] = None) -> CampaignResult:
    """Run ``cfg.runs`` independent verification runs and aggregate them.

    The averaged curve substitutes the cross-run mean passing rate at each
    checkpoint into the bounds; run 0 is reported separately as the
    single-run curve.
    """
    protocol = protocol or build_protocol(cfg.gate)
    nu = process_operator(protocol).nu
    target = VerificationTarget(cfg.epsilon, cfg.delta, protocol.dim, nu)
    passing_bound(target)
    channel = cfg.noise.channel(protocol.gate)
    table = _SamplingTable.build(protocol, channel)
    cps = default_checkpoints(cfg.tests, cfg.stride)

    def one(i):
        return _run(table, cfg.tests, run_stream(cfg.seed, i), cps)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, range(cfg.runs)))
    else:
        records = [one(i) for i in range(cfg.runs)]

    counts = np.stack([r.pass_counts for r in records])
    mean_rate = (counts / cps).mean(axis=0)
    averaged = curve_from_rates(cps, mean_rate, target)
    single = curve_from_rates(cps, counts[0] / cps, target)

    if cfg.threshold is not None:
        accepted = bool(averaged.pass_rate[-1] >= cfg.threshold)
    else:
        accepted = bool(averaged.delta_bound[-1] <= cfg.delta)

    try:
        exponent = fit_power_law(averaged)
    except ValueError:
        exponent = None
    return CampaignResult(cfg, target, records, averaged, single, accepted, exponent)


def final_bounds(result: CampaignResult) -> np.ndarray:
    """Per-run infidelity bound after all tests, at the campaign's delta."""
    t = result.target
    return np.array([infidelity_bound(r.pass_rate, r.n_tests, t.delta, t.d, t.nu)
                     for r in result.records])
