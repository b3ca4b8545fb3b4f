import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from microspec.errors import DimensionMismatchError, InsufficientDataError
from microspec.hypo import (
    EQUAL,
    FALSE,
    INCONCLUSIVE,
    P_WEAKER,
    TRUE,
    SamplingPlan,
    analyze,
    check_beurling_hypo,
    check_hypoelliptic,
    check_roumieu_hypo,
    compare_strength,
    constant_strength_check,
    equal_strength_invariants,
    estimate_c,
    estimate_d,
    estimate_gamma,
)
from microspec.symbols import PolynomialSymbol, degenerate_radial, degenerate_anisotropic, heat, laplace, parse_symbol, variable_fixture
from microspec.weights import WeightFunction

G = WeightFunction.gevrey


def sym(n, coeffs):
    return PolynomialSymbol.from_dict(n, coeffs)


QUARTIC = sym(2, {(4, 0): 1, (0, 2): 1})
XI1_2D = sym(2, {(1, 0): 1})
XI1_1D = sym(1, {(1,): 1})


def top_slope(r, y):
    top = r >= r[-1] / 10
    return np.polyfit(np.log(r[top]), np.log(y[top]), 1)[0]


def dense_min_abs(P, radii, n_theta=20001):
    """min over a dense circle of |P(r theta)| (2-D symbols)."""
    th = np.linspace(0, 2 * np.pi, n_theta)
    u = np.stack([np.cos(th), np.sin(th)], -1)
    return np.array([np.min(np.abs(P(r * u))) for r in radii])


def variety_distance(P, xi, solve):
    """Distance from real ``xi`` (2-D) to the complex zero set of ``P``.

    The other coordinate ``z`` is free; ``P = 0`` is solved for coordinate
    ``solve`` by polynomial roots and the distance is minimised over ``z`` by a
    coarse-to-fine grid search polished with Nelder-Mead.
    """
    free = 1 - solve
    deg = max(a[solve] for a, _ in P.terms)

    def dist(v):
        z = v[0] + 1j * v[1]
        coeffs = np.zeros(deg + 1, dtype=complex)
        for a, c in P.terms:
            coeffs[deg - a[solve]] += c * z ** a[free]
        roots = np.roots(np.trim_zeros(coeffs, "f"))
        if roots.size == 0:
            return math.inf
        return math.sqrt(abs(z - xi[free]) ** 2 + float(np.min(np.abs(roots - xi[solve]) ** 2)))

    r = float(np.linalg.norm(xi))
    best = (math.inf, None)
    for span in (1.5 * r, 4 * math.sqrt(r), 4.0):
        center = best[1] if best[1] is not None else np.array([xi[free], 0.0])
        for dx in np.linspace(-span, span, 41):
            for dy in np.linspace(-span, span, 41):
                v = center + np.array([dx, dy])
                d = dist(v)
                if d < best[0]:
                    best = (d, v)
    res = optimize.minimize(dist, best[1], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    return min(best[0], float(res.fun))


# -- hypoellipticity ------------------------------------------------------------


@pytest.mark.parametrize("P", [heat(1), heat(2), laplace(2), QUARTIC])
def test_hypoelliptic_true(P):
    assert check_hypoelliptic(P).verdict == TRUE


def test_xi1_in_plane_is_not_hypoelliptic():
    chk = check_hypoelliptic(XI1_2D)
    assert chk.verdict == FALSE
    # along e_2-dominant directions |xi_1| stays bounded and the ratio 1/|xi_1| does not decay
    curve = chk.curves[(1, 0)]
    assert np.all(curve[-10:] >= 1.0 - 1e-12)


def test_laplacian_ratio_curves_match_exact():
    plan = SamplingPlan.default(2)
    chk = check_hypoelliptic(laplace(2), plan)
    r = plan.radii
    np.testing.assert_allclose(chk.curves[(1, 0)], 2 / r, rtol=1e-9)
    np.testing.assert_allclose(chk.curves[(2, 0)], 2 / r**2, rtol=1e-9)


def test_near_zero_symbol_is_inconclusive():
    # xi_1^2 - xi_2^2 vanishes on the diagonals, which the plan samples
    chk = check_hypoelliptic(sym(2, {(2, 0): 1, (0, 2): -1}))
    assert chk.verdict in (FALSE, INCONCLUSIVE)


@pytest.mark.parametrize("a, expected", [(0.5, FALSE), (0.6, FALSE), (0.3, TRUE), (0.4, TRUE)])
def test_heat_beurling(a, expected):
    assert check_beurling_hypo(heat(1), G(a)).verdict == expected


@pytest.mark.parametrize("a, expected", [(0.5, TRUE), (0.6, FALSE), (0.7, FALSE)])
def test_heat_roumieu(a, expected):
    assert check_roumieu_hypo(heat(1), G(a)).verdict == expected


def test_heat_worst_direction_ratio():
    # dense oracle: on |(tau, xi)| = r the worst first-order ratio sits near xi ~ r^(1/2)
    # and grows like r^(a - 1/2); the second-order ratio 2 omega^2 / |P| grows like r^(2a - 1)
    a = 0.6
    chk = check_roumieu_hypo(heat(1), G(a))
    r = chk.radii
    th = np.linspace(0, 2 * np.pi, 400001)
    dense1, dense2 = [], []
    for rad in r[r >= r[-1] / 10]:
        tau, xi = rad * np.cos(th), rad * np.sin(th)
        p = np.abs(1j * tau + xi**2)
        dense1.append(np.max(rad**a * 2 * np.abs(xi) / p))
        dense2.append(np.max(rad ** (2 * a) * 2 / p))
    rt = r[r >= r[-1] / 10]
    assert top_slope(rt, np.array(dense1)) == pytest.approx(a - 0.5, abs=0.01)
    assert top_slope(rt, np.array(dense2)) == pytest.approx(2 * a - 1, abs=0.01)
    assert top_slope(r, chk.curves[(0, 1)]) == pytest.approx(top_slope(rt, np.array(dense1)), abs=0.02)
    assert top_slope(r, chk.curves[(0, 2)]) == pytest.approx(top_slope(rt, np.array(dense2)), abs=0.02)


@pytest.mark.parametrize("w", [G(0.5), G(0.9), WeightFunction.log_power(2)])
def test_laplacian_weighted(w):
    assert check_beurling_hypo(laplace(2), w).verdict == TRUE
    assert check_roumieu_hypo(laplace(2), w).verdict == TRUE


@pytest.mark.parametrize("P", [heat(1), laplace(2), QUARTIC, laplace(3)])
@pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
def test_consistency_chain(P, a):
    b = check_beurling_hypo(P, G(a)).verdict
    r = check_roumieu_hypo(P, G(a)).verdict
    h = check_hypoelliptic(P).verdict
    if b == TRUE:
        assert r == TRUE
    if r == TRUE:
        assert h == TRUE


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 100.0), st.sampled_from([heat(1), laplace(2), QUARTIC, XI1_2D]))
def test_scale_invariance(lam, P):
    Q = P * lam
    assert check_hypoelliptic(Q).verdict == check_hypoelliptic(P).verdict
    if check_hypoelliptic(P).verdict == TRUE:
        assert estimate_d(Q).value == pytest.approx(estimate_d(P).value, abs=1e-9)
        assert estimate_c(Q).value == pytest.approx(estimate_c(P).value, abs=1e-9)


# -- exponents -------------------------------------------------------------------


@pytest.mark.parametrize("P, d", [(heat(1), 1.0), (laplace(2), 2.0), (QUARTIC, 2.0)])
def test_estimate_d_against_dense_circle(P, d):
    plan = SamplingPlan.default(2)
    fit = estimate_d(P, plan)
    oracle = top_slope(plan.radii, dense_min_abs(P, plan.radii))
    assert oracle == pytest.approx(d, abs=0.02)
    assert fit.value == pytest.approx(oracle, abs=0.05)


@pytest.mark.parametrize("P, c, solve", [(laplace(2), 1.0, 1), (heat(1), 0.5, 0)])
def test_estimate_c_against_variety_distance(P, c, solve):
    radii = np.geomspace(1e3, 1e4, 4)
    th = np.linspace(0, np.pi, 9)
    dist = [min(variety_distance(P, r * np.array([math.cos(t), math.sin(t)]), solve) for t in th) for r in radii]
    oracle = np.polyfit(np.log(radii), np.log(dist), 1)[0]
    assert oracle == pytest.approx(c, abs=0.05)
    assert estimate_c(P).value == pytest.approx(oracle, abs=0.05)


def test_estimate_c_one_dimensional():
    assert estimate_c(XI1_1D).value == pytest.approx(1.0, abs=0.01)


def test_estimate_c_snap():
    fit = estimate_c(heat(1), snap=True)
    assert fit.snapped == 0.5


def dense_gamma(P, grid_r=np.geomspace(10, 1e5, 60), n_theta=721):
    """Smallest gamma for which the derivative bound stays flat on the outer radii."""
    th = np.linspace(0, 2 * np.pi, n_theta)
    u = np.stack([np.cos(th), np.sin(th)], -1)
    pts = grid_r[:, None, None] * u[None]
    lp = np.log1p(np.abs(P(pts)) ** 2)
    for gam in np.arange(P.degree, 3 * P.degree, 0.01):
        worst = np.full(len(grid_r), -np.inf)
        for alpha, d in P.derivatives:
            k = sum(alpha)
            with np.errstate(divide="ignore"):
                q = np.log(np.abs(d(pts)) ** 2) - (1 - k / gam) * lp
            worst = np.maximum(worst, np.max(q, axis=1))
        if np.polyfit(np.log(grid_r[-20:]), worst[-20:], 1)[0] <= 1e-3:
            return gam
    return math.inf


@pytest.mark.parametrize("P, gamma, tol", [(laplace(2), 2.0, 0.1), (heat(1), 2.0, 0.15)])
def test_estimate_gamma_against_dense_sup(P, gamma, tol):
    oracle = dense_gamma(P)
    assert oracle == pytest.approx(gamma, abs=0.05)
    assert estimate_gamma(P).value == pytest.approx(oracle, abs=tol)


def test_estimate_gamma_one_dimensional():
    assert estimate_gamma(XI1_1D).value == pytest.approx(1.0, abs=0.05)


FIXTURES = [
    laplace(2),
    laplace(3),
    heat(1),
    heat(2),
    QUARTIC,
    parse_symbol("laplace2 + d1 + 1"),
    sym(2, {(4, 0): 1, (0, 4): 1, (0, 2): 1}),
]


@pytest.mark.parametrize("P", FIXTURES, ids=lambda P: P.to_literal())
def test_exponent_sandwich(P):
    rep = analyze(P)
    assert rep.hypoelliptic == TRUE
    m = P.degree
    slack = rep.c.residual * m / rep.c_est**2 + 1e-2
    assert m - 1e-2 <= rep.gamma_est <= m / rep.c_est + slack
    assert m * rep.c_est == pytest.approx(rep.d_est, abs=rep.c.residual * m + rep.d.residual + 0.05)


def test_analyze_report_serialises():
    rep = analyze(heat(1), G(0.5))
    d = rep.to_dict()
    assert d["hypoelliptic"] == TRUE
    assert d["roumieu"]["verdict"] == TRUE
    assert d["beurling"]["verdict"] == FALSE
    assert "r,alpha,ratio" in rep.check.to_csv().splitlines()[0]


# -- strength --------------------------------------------------------------------


def test_compare_strength_examples():
    L = laplace(2)
    assert compare_strength(L, parse_symbol("laplace2 + d1 + 1")).relation == EQUAL
    assert compare_strength(L, L).relation == EQUAL
    assert compare_strength(heat(1), L).relation == P_WEAKER


def test_heat_vs_laplace_axis_oracle():
    # along the tau axis: heat tilde ~ |tau|, Laplacian tilde ~ tau^2
    tau = np.geomspace(1e2, 1e5, 10)
    pts = np.stack([tau, np.zeros_like(tau)], -1)
    ratio = laplace(2).tilde_norm(pts) / heat(1).tilde_norm(pts)
    assert top_slope(tau, ratio) == pytest.approx(1.0, abs=0.01)
    v = compare_strength(heat(1), laplace(2))
    assert not v.bounded_Q_over_P


@pytest.mark.parametrize("P, Q", [(heat(1), laplace(2)), (laplace(2), heat(1)), (XI1_2D, laplace(2)), (laplace(2), QUARTIC)])
def test_strength_symmetry(P, Q):
    assert compare_strength(P, Q).relation == compare_strength(Q, P).mirrored()


def test_strength_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        compare_strength(laplace(2), laplace(3))


def test_constant_strength():
    xs = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]
    assert not constant_strength_check(degenerate_anisotropic(), xs).constant_strength
    assert not constant_strength_check(degenerate_radial(), [[0.0, 0.0], [0.5, 0.5]]).constant_strength
    assert constant_strength_check(variable_fixture("laplace_drift"), xs).constant_strength
    with pytest.raises(InsufficientDataError):
        constant_strength_check(degenerate_anisotropic(), xs[:1])


@pytest.mark.parametrize(
    "P, Q, c",
    [
        (laplace(2), parse_symbol("laplace2 + d1"), 1.0),
        (heat(1), parse_symbol("heat1 + d2 + 5"), 0.5),
        (heat(1), heat(1), 0.5),
    ],
)
def test_equal_strength_invariants(P, Q, c):
    rep = equal_strength_invariants(P, Q, weights=(G(0.5), G(0.3)))
    assert rep.all_pass
    cs = [a for a in rep.assertions if a["name"] == "c_P == c_Q"][0]["detail"]
    assert cs["c_P"] == pytest.approx(c, abs=0.05)
    assert cs["c_Q"] == pytest.approx(c, abs=0.05)
