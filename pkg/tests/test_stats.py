import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgv.stats import (
    VerificationTarget,
    infidelity_bound,
    kl,
    kl_inverse,
    passing_bound,
    plan,
    significance,
)

CNOT = VerificationTarget(0.01, 0.05, 4, 5 / 9)
TOFFOLI = VerificationTarget(0.03, 0.05, 8, 1 / 6)

unit_open = st.floats(min_value=1e-6, max_value=1 - 1e-6)


def test_kl_values():
    assert kl(0.5, 0.5) == 0.0
    assert kl(1, 0.99) == pytest.approx(0.0100503, abs=1e-7)
    assert kl(0.9, 0.8) == pytest.approx(0.0366900, abs=1e-6)
    assert kl(0, 0.3) == pytest.approx(-math.log(0.7), abs=1e-15)
    for y in (0.0, 1.0):
        with pytest.raises(ValueError):
            kl(0.5, y)


@settings(max_examples=200)
@given(st.floats(min_value=0, max_value=1), unit_open)
def test_pinsker(x, y):
    assert kl(x, y) >= 2 * (x - y) ** 2 - 1e-15


def test_kl_inverse_values():
    assert kl_inverse(0.8, 0.0) == 0.8
    assert kl_inverse(1, 0.0029957) == pytest.approx(0.997009, abs=1e-6)
    assert kl_inverse(1, 0.0029957) == pytest.approx(math.exp(-0.0029957), abs=1e-15)
    x, saturated = kl_inverse(0.5, 1e6, full_output=True)
    assert saturated and x == pytest.approx(1e-15)
    x, saturated = kl_inverse(0.9, 0.01, full_output=True)
    assert not saturated and 0 < x < 0.9


@settings(max_examples=300)
@given(st.floats(min_value=1e-3, max_value=1.0), st.floats(min_value=0.0, max_value=10.0))
def test_kl_inverse_round_trip(p_hat, y):
    x, saturated = kl_inverse(p_hat, y, full_output=True)
    assert 0 < x <= p_hat
    if x == 1.0:
        # only reachable for p_hat = 1 and y below double resolution
        assert y < 1e-15
    elif not saturated:
        assert abs(kl(p_hat, x) - y) <= 1e-10


def test_passing_bound():
    assert passing_bound(VerificationTarget(0.0, 0.05, 4, 5 / 9)) == 1.0
    assert passing_bound(CNOT) == pytest.approx(0.9930556, abs=1e-7)
    assert passing_bound(TOFFOLI) == pytest.approx(0.994375, abs=1e-7)
    with pytest.raises(ValueError):
        passing_bound(VerificationTarget(0.9, 0.05, 4, 1.0))


def test_target_validation():
    for args in [(1.0, 0.05, 4, 0.5), (0.01, 0.0, 4, 0.5), (0.01, 1.0, 4, 0.5), (0.01, 0.05, 1, 0.5),
                 (0.01, 0.05, 4, 0.0), (0.01, 0.05, 4, 1.5)]:
        with pytest.raises(ValueError):
            VerificationTarget(*args)


def test_significance_values():
    assert significance(1.0, 0, CNOT) == 1.0
    assert significance(0.99, 1000, CNOT) == 1.0
    assert significance(1.0, 431, CNOT) == pytest.approx(0.0496, abs=5e-4)


@pytest.mark.parametrize("n", [1, 10, 431, 5000])
def test_significance_all_pass_is_power(n):
    pb = passing_bound(CNOT)
    assert abs(significance(1.0, n, CNOT) - pb ** n) <= 1e-12


def test_significance_monotone():
    ns = np.arange(0, 3000, 37)
    s = [significance(0.998, int(n), CNOT) for n in ns]
    assert np.all(np.diff(s) <= 0)
    rates = np.linspace(0.99, 1.0, 41)
    s = [significance(float(p), 1000, CNOT) for p in rates]
    assert np.all(np.diff(s) <= 0)


def test_infidelity_bound_values():
    assert infidelity_bound(1.0, 1000, 0.05, 4, 5 / 9) == pytest.approx(0.004307, abs=1e-5)
    p = 0.997
    closed = (4 / 5) * (1 - p) / (5 / 9)
    assert infidelity_bound(p, 1000, 1.0, 4, 5 / 9) == pytest.approx(closed, abs=1e-15)
    assert infidelity_bound(0.0, 100, 0.05, 4, 5 / 9) == pytest.approx((4 / 5) / (5 / 9))


@pytest.mark.parametrize("p_hat", [1.0, 0.9999, 0.997, 0.9])
@pytest.mark.parametrize("n", [10**3, 10**6, 10**9, 10**12, 10**15])
def test_infidelity_bound_large_n_limit(p_hat, n):
    # Pinsker: p_hat - x <= sqrt(y / 2), so the gap to the delta -> 1 value
    # is at most (d/(d+1)) sqrt(ln(1/delta) / (2N)) / nu
    closed = infidelity_bound(p_hat, n, 1.0, 4, 5 / 9)
    gap = infidelity_bound(p_hat, n, 0.05, 4, 5 / 9) - closed
    assert 0 <= gap <= 0.8 * math.sqrt(math.log(20) / (2 * n)) / (5 / 9) + 1e-15


@pytest.mark.xfail(strict=True, reason="the gap at N = 1e9 is 6.1e-6 for p_hat = 0.997 "
                   "(and 4.3e-9 even at p_hat = 1); it decays like N^-1/2, not to 1e-9")
def test_infidelity_bound_literal_1e9_agreement():
    closed = infidelity_bound(0.997, 1, 1.0, 4, 5 / 9)
    assert abs(infidelity_bound(0.997, 10**9, 0.05, 4, 5 / 9) - closed) <= 1e-9


def test_infidelity_bound_monotone():
    ns = [10, 50, 100, 1000, 10**4, 10**5]
    e = [infidelity_bound(0.997, n, 0.05, 4, 5 / 9) for n in ns]
    assert np.all(np.diff(e) <= 0)
    rates = np.linspace(0.95, 1.0, 26)
    e = [infidelity_bound(float(p), 1000, 0.05, 4, 5 / 9) for p in rates]
    assert np.all(np.diff(e) <= 0)


def test_plan_cnot():
    b = plan(CNOT)
    assert (b.n_optimal, b.n_local_tight, b.n_local_loose) == (299, 538, 540)
    assert b.n_general == math.ceil(math.log(20) / kl(1.0, passing_bound(CNOT)) - 1e-12)
    assert plan(CNOT, p_a_override=0.99).n_general == b.n_optimal
    for bad in (0.0, 1.0, 1.2):
        with pytest.raises(ValueError):
            plan(CNOT, p_a_override=bad)


def test_plan_toffoli():
    assert plan(TOFFOLI).n_local_loose == 600


def test_plan_exact_quotient_not_rounded_up():
    # ln(1/delta) / (nu * eps) is exactly 1000 here; the nudge keeps it there
    nu = math.log(20) / 10.0
    t = VerificationTarget(0.01, 0.05, 4, nu)
    assert plan(t).n_local_loose == 1000
