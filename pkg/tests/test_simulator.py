import json
import math

import numpy as np
import pytest

from qgv.channels import (
    PAULI_X,
    NoiseSpec,
    QuantumChannel,
    coherent_overrotation,
    depolarizing,
    embed,
    gate_cnot,
    gate_toffoli,
    unitary_channel,
)
from qgv.protocol import GateProtocol, TestState, build_protocol, product_state, product_test
from qgv.simulator import (
    CSV_HEADER,
    Curve,
    VerificationConfig,
    curve_from_rates,
    default_checkpoints,
    expected_pass_rate,
    fit_power_law,
    run_campaign,
    run_single,
    run_stream,
)
from qgv.stats import VerificationTarget

CNOT = build_protocol("cnot")
TOFFOLI = build_protocol("toffoli")
CNOT_TARGET = VerificationTarget(0.01, 0.05, 4, 5 / 9)


def depolarized(gate, p):
    return unitary_channel(gate).then(depolarizing(gate.dim, p))


@pytest.mark.parametrize("protocol", [CNOT, TOFFOLI], ids=["cnot", "toffoli"])
def test_ideal_pass_rate(protocol):
    assert expected_pass_rate(protocol, unitary_channel(protocol.gate)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [0.004, 0.1, 0.5, 1.0])
def test_depolarized_pass_rate_closed_forms(p):
    # rank counting: Tr M = 1 tests fail with prob (1 - 1/d) p, rank-2 Bell
    # tests at p/2 and rank-4 cover tests at p/2
    assert expected_pass_rate(CNOT, depolarized(gate_cnot(), p)) == pytest.approx(1 - 2 * p / 3, abs=1e-12)
    assert expected_pass_rate(TOFFOLI, depolarized(gate_toffoli(), p)) == pytest.approx(1 - 11 * p / 16, abs=1e-12)


def test_pass_rate_value_at_calibration_point():
    assert expected_pass_rate(CNOT, depolarized(gate_cnot(), 0.004)) == pytest.approx(0.9973333, abs=1e-7)
    with pytest.raises(ValueError):
        expected_pass_rate(CNOT, depolarized(gate_toffoli(), 0.004))


def test_ideal_run_all_pass():
    rec = run_single(CNOT, unitary_channel(gate_cnot()), 777, np.random.default_rng(1))
    assert rec.passed.all() and rec.n_tests == 777
    np.testing.assert_array_equal(rec.pass_counts, rec.checkpoints)


def test_basis_flip_run_all_fail():
    gate = gate_cnot()
    states = [TestState(j, lbl, "ZZ", 0.25, product_state(lbl))
              for j, lbl in enumerate(["HH", "HV", "VH", "VV"], start=1)]
    protocol = GateProtocol(gate, states, [(product_test(gate.matrix @ s.state),) for s in states])
    flip = unitary_channel(gate).then(QuantumChannel((embed(PAULI_X, 0, 2),)))
    assert expected_pass_rate(protocol, flip) == 0.0
    rec = run_single(protocol, flip, 500, np.random.default_rng(2))
    assert not rec.passed.any()


MATRIX = [
    ("cnot", NoiseSpec("depolarizing", 0.004)),
    ("cnot", NoiseSpec("coherent", 0.2, 1)),
    ("toffoli", NoiseSpec("depolarizing", 0.0034286)),
    ("toffoli", NoiseSpec("coherent", 0.3, 2)),
]


@pytest.mark.parametrize("gate,noise", MATRIX, ids=[f"{g}-{n}" for g, n in MATRIX])
def test_empirical_rate_converges(gate, noise):
    protocol = CNOT if gate == "cnot" else TOFFOLI
    ch = noise.channel(protocol.gate)
    oracle = expected_pass_rate(protocol, ch)
    n = 100_000
    rec = run_single(protocol, ch, n, run_stream(11, 0))
    assert abs(rec.pass_rate - oracle) <= 4 * math.sqrt(oracle * (1 - oracle) / n)


def test_sampling_frequencies():
    rec = run_single(CNOT, unitary_channel(gate_cnot()), 60_000, np.random.default_rng(3))
    freq = np.bincount(rec.state_index, minlength=13)[1:] / rec.n_tests
    assert np.all(np.abs(freq - 1 / 12) <= 4 * math.sqrt((1 / 12) * (11 / 12) / rec.n_tests))
    assert set(rec.test_index[rec.state_index <= 8].tolist()) == {1}
    assert set(rec.test_index[rec.state_index > 8].tolist()) == {1, 2, 3}


def test_default_checkpoints():
    np.testing.assert_array_equal(default_checkpoints(5), [1, 2, 3, 4, 5])
    cps = default_checkpoints(1234)
    assert cps[999] == 1000 and cps[1000] == 1010 and cps[-1] == 1234
    np.testing.assert_array_equal(default_checkpoints(10, stride=4), [4, 8, 10])
    with pytest.raises(ValueError):
        default_checkpoints(0)


def test_power_law_fit_exact():
    n = np.arange(10, 201)
    for k in (-0.857, -1.0):
        eps = 0.3 * n.astype(float) ** k
        curve = Curve(n, np.ones(n.size), np.ones(n.size), eps)
        assert abs(fit_power_law(curve, (10, 200)) - k) <= 1e-9
    with pytest.raises(ValueError):
        fit_power_law(curve, (500, 600))


@pytest.mark.parametrize("rate", [0.99, 0.995, 0.998, 1.0])
def test_curve_monotone_for_constant_rate(rate):
    n = default_checkpoints(5000)
    curve = curve_from_rates(n, np.full(n.size, rate), CNOT_TARGET)
    assert np.all(np.diff(curve.delta_bound) <= 0)
    assert np.all(np.diff(curve.epsilon_bound) <= 1e-15)


def test_curve_saturates_below_bound():
    n = np.array([10, 100, 1000])
    curve = curve_from_rates(n, np.full(3, 0.9), CNOT_TARGET)
    np.testing.assert_array_equal(curve.delta_bound, 1.0)
    assert np.all(curve.epsilon_bound > 0)


def cfg(**kw):
    base = dict(gate="cnot", noise=NoiseSpec("depolarizing", 0.004), epsilon=0.01, delta=0.05,
                tests=1500, runs=6, seed=3)
    base.update(kw)
    return VerificationConfig(**base)


def test_single_run_campaign_matches_single_curve():
    res = run_campaign(cfg(runs=1))
    for a, b in zip(res.averaged.rows(), res.single.rows()):
        assert a == b


def test_campaign_deterministic_across_workers(tmp_path):
    a = run_campaign(cfg())
    b = run_campaign(cfg(), workers=4)
    pa, pb = a.write(tmp_path / "a"), b.write(tmp_path / "b")
    for key in ("curve", "single", "summary"):
        with open(pa[key], "rb") as fa, open(pb[key], "rb") as fb:
            assert fa.read() == fb.read()
    for ra, rb in zip(a.records, b.records):
        np.testing.assert_array_equal(ra.passed, rb.passed)


def test_run_stream_independent_of_order():
    first = run_stream(9, 3).random(5)
    run_stream(9, 0).random(100)
    np.testing.assert_array_equal(first, run_stream(9, 3).random(5))
    assert not np.array_equal(first, run_stream(9, 4).random(5))


def test_campaign_outputs(tmp_path):
    res = run_campaign(cfg(tests=1200, runs=3))
    paths = res.write(tmp_path)
    lines = open(paths["curve"]).read().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 1000 + 20
    summary = json.load(open(paths["summary"]))
    assert set(summary) >= {"gate", "noise", "seed", "runs", "final_pass_rate", "final_delta",
                            "final_epsilon", "fitted_exponent", "accepted", "config"}
    assert summary["config"]["tests"] == 1200 and summary["noise"] == "depolarizing:0.004"


def test_threshold_rule():
    assert run_campaign(cfg(noise=NoiseSpec(), tests=200, runs=2, threshold=0.999)).accepted
    assert not run_campaign(cfg(noise=NoiseSpec("depolarizing", 0.5), tests=200, runs=2,
                                threshold=0.9)).accepted


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(gate="swap")
    with pytest.raises(ValueError):
        cfg(tests=0)
    with pytest.raises(ValueError):
        cfg(runs=0)
    with pytest.raises(ValueError):
        run_campaign(cfg(noise=NoiseSpec("coherent", 0.1, 3)))


def test_coherent_noise_channel_in_campaign():
    ch = coherent_overrotation(gate_cnot(), 0, 0.1)
    assert expected_pass_rate(CNOT, ch) < 1.0
