import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microspec.errors import DegenerateSymbolError, DomainError, InsufficientDataError, ParseError
from microspec.symbols import laplace, parse_symbol
from microspec.weights import (
    WeightFunction,
    check_strong_weight,
    check_weight_axioms,
    conjugate_at,
    decay_envelope,
    eval_weight,
    parse_weight,
    young_conjugate,
)

G = WeightFunction.gevrey(0.5)


def dense_conjugate(w, s, u_max=60.0, n=600001):
    """Brute-force sup over a dense u-grid."""
    u = np.linspace(0.0, u_max, n)
    return float(np.max(s * u - w.phi(u)))


def gevrey_half_conjugate(s):
    # stationary point of s u - e^{u/2}: e^{u/2} = 2 s
    return 2 * s * math.log(2 * s) - 2 * s if s > 0.5 else 0.0


# -- evaluation ---------------------------------------------------------------


def test_eval_weight_examples():
    assert eval_weight(G, 0.5) == 0.0
    assert eval_weight(G, 4.0) == pytest.approx(2.0, rel=1e-14)
    t = math.exp(3.0) - 1.0
    assert eval_weight(WeightFunction.log_power(2), t) == pytest.approx(9.0, rel=1e-12)


@pytest.mark.parametrize("t", [-1.0, math.inf, math.nan])
def test_eval_weight_rejects_bad_arguments(t):
    with pytest.raises(DomainError):
        eval_weight(G, t)


@given(st.floats(0.0, 1.0))
def test_weight_vanishes_on_unit_interval(t):
    for w in (G, WeightFunction.log_power(2), WeightFunction.sublinear_log(2), WeightFunction.exp_log(0.5, 1)):
        assert eval_weight(w, t) == 0.0


@given(st.floats(0.0, 1e6), st.floats(0.0, 1e6))
def test_weight_nondecreasing(a, b):
    lo, hi = min(a, b), max(a, b)
    for w in (G, WeightFunction.log_power(2), WeightFunction.sublinear_log(2)):
        assert eval_weight(w, lo) <= eval_weight(w, hi) * (1 + 1e-12) + 1e-300


def test_parse_weight_forms():
    assert parse_weight("gevrey:0.5") == G
    assert parse_weight("family=gevrey d=0.5") == G
    assert parse_weight("logpow:2") == WeightFunction.log_power(2)
    with pytest.raises(ParseError) as exc:
        parse_weight("gevrey:abc")
    assert exc.value.column == 8
    with pytest.raises(ParseError):
        parse_weight("nosuch:1")


# -- axioms -------------------------------------------------------------------


def test_axioms_gevrey_pass():
    rep = check_weight_axioms(G)
    assert rep.all_pass
    assert rep.beta_tail_exponent == pytest.approx(0.5, abs=1e-6)


def test_axioms_linear_weight_fails_beta():
    rep = check_weight_axioms(WeightFunction.power(1.0))
    assert not rep.beta_pass
    assert rep.beta_tail_exponent == pytest.approx(1.0, abs=1e-6)


def test_axioms_log_power_pass():
    assert check_weight_axioms(WeightFunction.log_power(2)).all_pass


def test_axioms_reproducible():
    a = check_weight_axioms(G, horizon=1e4, tol=1e-3).to_dict()
    b = check_weight_axioms(G, horizon=1e4, tol=1e-3).to_dict()
    assert a == b


def test_axioms_errors():
    with pytest.raises(DomainError):
        check_weight_axioms(G, horizon=10.0)
    with pytest.raises(InsufficientDataError):
        WeightFunction.tabulated([0, 1, 2], [0, 0, 1])


def test_tabulated_clamp_is_flagged():
    t = np.geomspace(0.1, 1e5, 40)
    w = WeightFunction.tabulated(t, np.sqrt(t))
    assert w.clamped
    assert eval_weight(w, 0.5) == 0.0
    assert check_weight_axioms(w).clamped


# -- Young conjugate ---------------------------------------------------------


@pytest.mark.parametrize("s, expected", [(0.0, 0.0), (2.0, 1.5451774444795623), (8.0, 28.361419555836495)])
def test_conjugate_examples(s, expected):
    assert dense_conjugate(G, s) == pytest.approx(expected, rel=1e-6)
    assert conjugate_at(G, s) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_conjugate_matches_closed_form_on_range():
    yc = young_conjugate(G, 100.0, n_grid=2048)
    s = np.linspace(1.0, 100.0, 200)
    exact = np.array([gevrey_half_conjugate(v) for v in s])
    assert np.max(np.abs(yc(s) - exact) / exact) < 1e-4


def test_conjugate_table_invariants():
    yc = young_conjugate(WeightFunction.log_power(2), 100.0)
    assert yc(0.0) == 0.0
    assert yc.is_convex()
    s, v = yc.s_grid[1:], yc.values[1:]
    ratio = v / s
    assert np.all(np.diff(ratio) >= -1e-9 * np.max(np.abs(ratio)))
    assert yc.biconjugacy_error() < 1e-3


def test_conjugate_domain():
    with pytest.raises(DomainError):
        young_conjugate(G, -1.0)
    with pytest.raises(DomainError):
        young_conjugate(G, 10.0, n_grid=10)
    with pytest.raises(DomainError):
        young_conjugate(G, 10.0)(20.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(0.01, 50.0))
def test_conjugate_midpoint_convexity(a, b):
    va, vb, vm = conjugate_at(G, a), conjugate_at(G, b), conjugate_at(G, 0.5 * (a + b))
    assert vm <= 0.5 * (va + vb) + 1e-9 * (1 + abs(va) + abs(vb))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.6, 80.0), st.floats(0.6, 80.0))
def test_conjugate_ratio_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert conjugate_at(G, lo) / lo <= conjugate_at(G, hi) / hi + 1e-9


# -- strong weights -----------------------------------------------------------


def test_strong_weight_gevrey():
    res = check_strong_weight(G)
    assert res.passed
    # int_1^inf (t y)^{1/2} / t^2 dt = 2 y^{1/2}
    assert res.c == pytest.approx(2.0, abs=0.05)


def test_strong_weight_linear_fails():
    assert not check_strong_weight(WeightFunction.power(1.0)).passed


def test_strong_weight_log_power():
    res = check_strong_weight(WeightFunction.log_power(2))
    assert res.passed
    for y in (10.0, 100.0, 1000.0):
        # direct quadrature of the inner integral on a long geometric grid
        u = np.linspace(0.0, 60.0, 600001)
        inner = np.trapezoid(np.log1p(np.exp(u) * y) ** 2 * np.exp(-u), u)
        assert inner <= res.c * (eval_weight(WeightFunction.log_power(2), y) + 1) * (1 + 1e-6)


# -- envelopes -----------------------------------------------------------------


def test_decay_envelope_examples():
    P = laplace(2)
    assert decay_envelope(G, P, 1.0, [0.5, 0.5]) == 1.0
    assert decay_envelope(G, P, 1.0, [2.0, 0.0]) == pytest.approx(math.exp(-math.sqrt(2)), rel=1e-12)
    assert decay_envelope(G, P, 3.0, [2.0, 0.0]) == pytest.approx(math.exp(-3 * math.sqrt(2)), rel=1e-12)


def test_decay_envelope_degenerate():
    with pytest.raises(DegenerateSymbolError):
        decay_envelope(G, parse_symbol("poly n=2 m=0 { (0,0): 1 }"), 1.0, [1.0, 1.0])


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-50, 50), st.floats(-50, 50))
def test_decay_envelope_ordering(k1, k2, x, y):
    lo, hi = min(k1, k2), max(k1, k2)
    P = laplace(2)
    assert decay_envelope(G, P, hi, [x, y]) <= decay_envelope(G, P, lo, [x, y])
