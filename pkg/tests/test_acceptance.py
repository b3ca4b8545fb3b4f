"""Acceptance criteria, one test per criterion.

Each test records a ``CRITERION n: PASS|FAIL`` line that is printed in the
terminal summary; tolerances and runtime limits are pinned below.
"""

import math
import time

import numpy as np
from conftest import ACCEPTANCE_LINES
from test_hypo import dense_gamma, dense_min_abs, top_slope, variety_distance

from microspec.hypo import (
    FALSE,
    TRUE,
    SamplingPlan,
    analyze,
    check_beurling_hypo,
    check_roumieu_hypo,
    equal_strength_invariants,
    estimate_c,
    estimate_d,
    estimate_gamma,
)
from microspec.spectral import GridField, GridSpec, lemma_loop, make_bump
from microspec.symbols import PolynomialSymbol, heat, laplace, parse_symbol
from microspec.wavefront import (
    INCONCLUSIVE,
    SINGULAR,
    PrescribedSet,
    beurling_scale_scan,
    cone_gap,
    construct_prescribed,
    crosscheck_field,
    cutoff_monotonicity_check,
    default_cones,
    estimate_wavefront,
    is_regular,
    roundtrip_check,
)
from microspec.weights import WeightFunction, young_conjugate

G = WeightFunction.gevrey
W = G(0.5)
MODES = ("roumieu", "beurling")
S_TWO = PrescribedSet.parse("-0.375 0.125 ; 1 0\n0.375 -0.375 ; 0.6 0.8")


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def box(n):
    return GridSpec.box([-1, -1], [1, 1], (n, n))


def ball(x, c, rad):
    d = np.linalg.norm(x - np.asarray(c), axis=-1) / rad
    out = np.zeros_like(d)
    m = d < 1
    out[m] = np.exp(-1 / (1 - d[m] ** 2))
    return out


def synthetic_fields(g, mode):
    x = g.mesh()
    r2 = lambda c: np.sum((x - np.asarray(c)) ** 2, axis=-1)  # noqa: E731
    fields = {
        "gaussian": np.exp(-r2((0, 0)) / 0.1),
        "gaussian_off": np.exp(-r2((0.3, -0.2)) / 0.05),
        "bump": ball(x, (0, 0), 0.6),
        "two_bumps": ball(x, (-0.4, 0.3), 0.4) + ball(x, (0.4, -0.3), 0.3),
        "heaviside_x": (x[..., 0] >= 0.125).astype(float),
        "heaviside_y": (x[..., 1] >= -0.375).astype(float),
        "disk": (r2((0, 0)) < 0.3).astype(float),
        "gaussian_plus_jump": np.exp(-r2((0.2, 0.2)) / 0.05) + 0.5 * (x[..., 0] + x[..., 1] >= 0),
        "prescribed_two": construct_prescribed(S_TWO, 1, 2, W, mode, 32, g).values,
        "prescribed_one": construct_prescribed(PrescribedSet.parse("0.125 0.375 ; 0 1"), 1, 2, W, mode, 32, g).values,
    }
    return {k: GridField(v, g) for k, v in fields.items()}


# -- 1 -------------------------------------------------------------------------------------


def test_criterion_1_heat_weight_classification():
    t0 = time.perf_counter()
    P = heat(1)
    got = {a: check_beurling_hypo(P, G(a)).verdict for a in (0.3, 0.4, 0.5, 0.6)}
    roumieu = check_roumieu_hypo(P, G(0.5)).verdict
    elapsed = time.perf_counter() - t0
    want = {0.3: TRUE, 0.4: TRUE, 0.5: FALSE, 0.6: FALSE}
    ok = got == want and roumieu == TRUE and elapsed < 5.0
    assert record(1, ok, f"beurling {got}, roumieu(0.5) {roumieu}, {elapsed:.2f} s (limit 5 s)")


# -- 2 -------------------------------------------------------------------------------------


def test_criterion_2_exponents():
    t0 = time.perf_counter()
    L, H = laplace(2), heat(1)
    est = {
        "c_lap": estimate_c(L).value,
        "gamma_lap": estimate_gamma(L).value,
        "d_heat": estimate_d(H).value,
        "c_heat": estimate_c(H).value,
        "gamma_heat": estimate_gamma(H).value,
    }
    elapsed = time.perf_counter() - t0
    # independent dense-grid oracles
    radii = np.geomspace(1e3, 1e4, 4)
    th = np.linspace(0, np.pi, 9)

    def c_oracle(P, solve):
        dist = [min(variety_distance(P, r * np.array([math.cos(t), math.sin(t)]), solve) for t in th) for r in radii]
        return float(np.polyfit(np.log(radii), np.log(dist), 1)[0])

    plan = SamplingPlan.default(2)
    oracle = {
        "c_lap": c_oracle(L, 1),
        "gamma_lap": dense_gamma(L),
        "d_heat": float(top_slope(plan.radii, dense_min_abs(H, plan.radii))),
        "c_heat": c_oracle(H, 0),
        "gamma_heat": dense_gamma(H),
    }
    target = {"c_lap": (1.0, 0.05), "gamma_lap": (2.0, 0.1), "d_heat": (1.0, 0.05), "c_heat": (0.5, 0.05), "gamma_heat": (2.0, 0.15)}
    ok = elapsed < 30.0
    for k, (v, tol) in target.items():
        ok &= abs(est[k] - v) <= tol and abs(oracle[k] - v) <= tol and abs(est[k] - oracle[k]) <= tol
    detail = ", ".join(f"{k}={est[k]:.3f} (oracle {oracle[k]:.3f})" for k in target)
    assert record(2, ok, f"{detail}; {elapsed:.1f} s (limit 30 s)")


# -- 3 -------------------------------------------------------------------------------------


SANDWICH = {
    "laplace2": laplace(2),
    "laplace3": laplace(3),
    "heat1": heat(1),
    "heat2": heat(2),
    "xi1^4+xi2^2": PolynomialSymbol.from_dict(2, {(4, 0): 1, (0, 2): 1}),
    "laplace2+d1+1": parse_symbol("laplace2 + d1 + 1"),
    "xi1^4+xi2^4+xi2^2": PolynomialSymbol.from_dict(2, {(4, 0): 1, (0, 4): 1, (0, 2): 1}),
}


def test_criterion_3_exponent_sandwich():
    rows, ok = [], True
    for name, P in SANDWICH.items():
        rep = analyze(P)
        m = P.degree
        slack = rep.c.residual * m / rep.c_est**2 + 1e-2
        good = rep.hypoelliptic == TRUE and m - 1e-2 <= rep.gamma_est <= m / rep.c_est + slack
        ok &= good
        rows.append(f"{name}: {m}<={rep.gamma_est:.2f}<={m / rep.c_est:.2f}{'' if good else ' VIOLATED'}")
    assert record(3, ok, "; ".join(rows))


# -- 4 -------------------------------------------------------------------------------------


def test_criterion_4_young_conjugate():
    yc = young_conjugate(W, 100.0, n_grid=2048)
    s = np.linspace(1.0, 100.0, 400)
    # stationary point of s u - e^{u/2}: e^{u/2} = 2 s
    exact = 2 * s * np.log(2 * s) - 2 * s
    rel = float(np.max(np.abs(yc(s) - exact) / exact))
    bic = float(yc.biconjugacy_error())
    ok = rel < 1e-4 and bic < 1e-3
    assert record(4, ok, f"max rel error {rel:.2e} (tol 1e-4), biconjugacy {bic:.2e} (tol 1e-3)")


# -- 5 -------------------------------------------------------------------------------------


def test_criterion_5_lemma_loop():
    g = GridSpec.box([-2, -2], [2, 2], (1024, 1024))
    t0 = time.perf_counter()
    b = make_bump((0.0, 0.0), 0.5, 1.25, g)
    res = lemma_loop(b.field, laplace(2), W, 1.0)
    elapsed = time.perf_counter() - t0
    ok = res.holds and res.ratio <= 2.0 and elapsed < 60.0
    assert record(
        5, ok, f"lambda0=1: seminorm/C = {res.ratio:.3f} at lambda0/2 (slack 2), argmax N={res.argmax}, {elapsed:.1f} s (limit 60 s)"
    )


# -- 6 -------------------------------------------------------------------------------------


def test_criterion_6_criterion_equivalence():
    g = box(512)
    rows, total, counted, saturated = [], 0, 0, 0
    for mode in MODES:
        for name, u in synthetic_fields(g, mode).items():
            rep = crosscheck_field(u, laplace(2), W, mode)
            total += rep.disagreements
            counted += rep.counted
            saturated += rep.saturated
            if rep.disagreements:
                rows.append(f"{name}/{mode}: {rep.disagreements}")
    n_fields = len(synthetic_fields(g, "roumieu"))
    rate = total / counted if counted else math.nan
    ok = n_fields >= 10 and total == 0 and counted > 0
    detail = f"{n_fields} fields x {len(MODES)} modes at 512^2, {counted} counted cells, rate {rate:.3g}, saturated {saturated}"
    assert record(6, ok, detail + ("; " + "; ".join(rows) if rows else ""))


# -- 7 -------------------------------------------------------------------------------------


def test_criterion_7_heaviside_detection():
    g = box(512)
    x = g.mesh()
    u = GridField((x[..., 0] >= 0.125).astype(float), g)
    ok, rows = True, []
    for mode in MODES:
        t0 = time.perf_counter()
        est = estimate_wavefront(u, laplace(2), W, mode)
        elapsed = time.perf_counter() - t0
        e1 = (1.0, 0.0)
        near = math.radians(10.0)
        home = [i for i, c in enumerate(est.windows.centers) if abs(c[0] - 0.125) < 1e-9]
        for wi in range(len(est.windows.centers)):
            labs = est.labels[wi]
            sing = [ci for ci, lab in enumerate(labs) if lab == SINGULAR]
            if wi in home:
                plus = any(cone_gap(est.cones[ci], e1) <= near for ci in sing)
                minus = any(cone_gap(est.cones[ci], (-1.0, 0.0)) <= near for ci in sing)
                far = [ci for ci in sing if min(cone_gap(est.cones[ci], e1), cone_gap(est.cones[ci], (-1.0, 0.0))) > near]
                ok &= plus and minus and not far
            else:
                ok &= all(is_regular(lab, mode) for lab in labs)
        ok &= elapsed < 90.0
        cones = sorted({ci for _, ci in est.singular_cells()})
        rows.append(f"{mode}: {len(home)} interface windows, singular cones {cones}, {elapsed:.1f} s")
    assert record(7, ok, "; ".join(rows) + " (limit 90 s)")


# -- 8 -------------------------------------------------------------------------------------


def test_criterion_8_prescribed_round_trip():
    g = box(1024)
    P = heat(1)
    ok, rows = True, []
    for mode in MODES:
        u = construct_prescribed(S_TWO, 1, 2, W, mode, 32, g)
        est = estimate_wavefront(u, P, W, mode)
        rt = roundtrip_check(S_TWO, est, window_tol=1, angle_tol=math.radians(15.0), spread=2)
        ok &= rt.passed
        rows.append(f"{mode}: recovered {[len(r) for r in rt.recovered]} cells, spurious {len(rt.spurious)}")
    assert record(8, ok, "1024^2; " + "; ".join(rows))


# -- 9 -------------------------------------------------------------------------------------


def test_criterion_9_equal_strength_transfer():
    g = box(512)
    x = g.mesh()
    P, Q = laplace(2), parse_symbol("laplace2 + d1 + 1")
    fixtures = {
        "heaviside": (x[..., 0] >= 0.125).astype(float),
        "gaussian": np.exp(-np.sum(x**2, axis=-1) / 0.1),
        "disk": (np.sum(x**2, axis=-1) < 0.3).astype(float),
    }
    ok, diffs = True, 0
    for name, v in fixtures.items():
        u = GridField(v, g)
        for mode in MODES:
            a = estimate_wavefront(u, P, W, mode)
            b = estimate_wavefront(u, Q, W, mode)
            d = int(np.sum(a.labels != b.labels))
            diffs += d
    inv = equal_strength_invariants(P, Q)
    c_row = next(r for r in inv.assertions if r["name"] == "c_P == c_Q")
    ok = diffs == 0 and inv.all_pass
    detail = c_row["detail"]
    assert record(
        9,
        ok,
        f"{len(fixtures)} fixtures x 2 modes, differing cells {diffs}; c_P={detail['c_P']:.4f}, c_Q={detail['c_Q']:.4f}, slack {detail['slack']:.2e}",
    )


# -- 10 ------------------------------------------------------------------------------------


def test_criterion_10_monotonicity():
    g = box(512)
    x = g.mesh()
    hv = GridField((x[..., 0] >= 0.125).astype(float), g)
    disk = GridField((np.sum(x**2, axis=-1) < 0.3).astype(float), g)
    P = laplace(2)
    cutoffs = {
        "one": np.ones(g.shape),
        "away": make_bump((0.6, 0.0), 0.3, 1.5, g),
        "overlap": make_bump((0.1, 0.0), 0.4, 1.5, g),
        "overlap_wide": make_bump((0.0, 0.2), 0.6, 1.25, g),
    }
    cut_viol, compared = 0, 0
    for mode in MODES:
        for u in (hv, disk):
            base = estimate_wavefront(u, P, W, mode)
            for psi in cutoffs.values():
                rep = cutoff_monotonicity_check(u, psi, P, W, mode, base=base)
                cut_viol += len(rep.violations)
                compared += rep.compared
    thetas = [0.2, 0.4, 0.6, 0.8, 1.0]
    gauss = GridField(np.exp(-np.sum(x**2, axis=-1) / 0.1), g)
    cones = default_cones(2)
    scan_viol, scans = 0, 0
    for u, x0 in ((hv, (0.125, 0.0)), (hv, (0.125, 0.5)), (disk, (math.sqrt(0.3), 0.0)), (gauss, (0.0, 0.0))):
        for ci in (0, 2, 4, 8):
            rep = beurling_scale_scan(u, x0, cones[ci], P, W, thetas)
            scans += 1
            decided = [r for r, lab in zip(rep.regular, rep.labels) if lab != INCONCLUSIVE]
            # regular at theta' forces regular at every smaller theta
            bad = any(decided[j] and not decided[i] for i in range(len(decided)) for j in range(i + 1, len(decided)))
            scan_viol += int(bad or not rep.monotone)
    ok = cut_viol == 0 and scan_viol == 0 and compared > 0
    assert record(
        10, ok, f"cutoff violations {cut_viol} over {compared} compared cells; scan violations {scan_viol} over {scans} scans"
    )

