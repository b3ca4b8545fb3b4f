"""Hypoellipticity tests, structural exponents and strength comparison.

Every asymptotic statement ("tends to zero", "is bounded") is decided by a
trend test on the top decade of a geometric radius grid.  Samples are taken on
rays through quasi-uniform directions and on the curves
``xi_j = ±r, xi_k = ±r^q`` that follow quasi-homogeneous zero sets.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionMismatchError, InconsistencyError, InsufficientDataError

TRUE, FALSE, INCONCLUSIVE = "true", "false", "inconclusive"
CURVE_EXPONENTS = (0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0)


# ---------------------------------------------------------------------------
# sampling plan
# ---------------------------------------------------------------------------


def _fibonacci_sphere(count):
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    rho = np.sqrt(1.0 - z**2)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def default_directions(n, count=None, seed=None, n_random=0):
    """Axes, diagonals and a quasi-uniform fill of ``S^{n-1}``."""
    count = count if count is not None else 2 * n * n + 32
    dirs = [np.eye(n)[j] * s for j in range(n) for s in (1.0, -1.0)]
    if n >= 2:
        for signs in itertools.product((1.0, -1.0), repeat=n):
            dirs.append(np.asarray(signs) / math.sqrt(n))
    if n == 2:
        ang = 2 * math.pi * (np.arange(count) + 0.5) / count
        dirs.extend(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    elif n == 3:
        dirs.extend(_fibonacci_sphere(count))
    elif n > 3:
        rng = np.random.default_rng(0)
        g = rng.standard_normal((count, n))
        dirs.extend(g / np.linalg.norm(g, axis=1, keepdims=True))
    if n_random:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n_random, n))
        dirs.extend(g / np.linalg.norm(g, axis=1, keepdims=True))
    return np.unique(np.round(np.asarray(dirs, dtype=float), 15), axis=0)


@dataclass
class SamplingPlan:
    """Radii and sample directions.

    Attributes
    ----------
    radii : ndarray
        Increasing geometric grid with ``radii[-1] / radii[0] >= 1e3``.
    directions : ndarray, shape (D, n)
        Unit vectors; ``D >= 2n``.
    curves : bool
        Whether the ``xi_j = ±r, xi_k = ±r^q`` families are sampled too.
    """

    radii: np.ndarray
    directions: np.ndarray
    curves: bool = True
    seed: int | None = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.directions = np.asarray(self.directions, dtype=float)
        if self.radii.ndim != 1 or np.any(np.diff(self.radii) <= 0) or self.radii[0] <= 0:
            raise InsufficientDataError("radii must be positive and increasing")
        if self.radii[-1] / self.radii[0] < 1e3:
            raise InsufficientDataError("radius range must span at least three decades")
        if self.directions.shape[0] < 2 * self.n:
            raise InsufficientDataError("need at least 2n directions")

    @property
    def n(self):
        return self.directions.shape[1]

    @classmethod
    def default(cls, n, r_min=10.0, r_max=1e5, n_radii=64, n_random=0, seed=None):
        return cls(
            np.geomspace(r_min, r_max, n_radii),
            default_directions(n, seed=seed, n_random=n_random),
            True,
            seed,
        )

    def points(self):
        """Sample points, shape ``(K, M, n)``; row ``k`` has norm ``radii[k]``."""
        r = self.radii[:, None, None]
        blocks = [r * self.directions[None, :, :]]
        n = self.n
        if self.curves and n >= 2:
            rows = []
            for j, k in itertools.permutations(range(n), 2):
                for q in CURVE_EXPONENTS:
                    for sj, sk in itertools.product((1.0, -1.0), repeat=2):
                        rows.append((j, k, q, sj, sk))
            pts = np.zeros((len(self.radii), len(rows), n))
            for i, (j, k, q, sj, sk) in enumerate(rows):
                pts[:, i, j] = sj * self.radii
                pts[:, i, k] = sk * self.radii**q
            pts *= self.radii[:, None, None] / np.linalg.norm(pts, axis=2, keepdims=True)
            blocks.append(pts)
        return np.concatenate(blocks, axis=1)

    def top_decade(self):
        return self.radii >= self.radii[-1] / 10.0 * (1 - 1e-12)

    def to_dict(self):
        return {
            "r_min": float(self.radii[0]),
            "r_max": float(self.radii[-1]),
            "n_radii": int(self.radii.size),
            "n_directions": int(self.directions.shape[0]),
            "curves": self.curves,
            "seed": self.seed,
        }


def _plan(P, plan):
    if plan is None:
        return SamplingPlan.default(P.n)
    if plan.n != P.n:
        raise DimensionMismatchError(f"plan is {plan.n}-dimensional, symbol is {P.n}-dimensional")
    return plan


# ---------------------------------------------------------------------------
# trend tests
# ---------------------------------------------------------------------------


@dataclass
class Trend:
    """Log-log fit of a curve over the top decade."""

    slope: float
    intercept: float
    residual: float
    last: float
    label: str

    def to_dict(self):
        return asdict(self)


def fit_loglog(r, y):
    """Slope, intercept and residual of ``log y`` against ``log r``.

    The residual is the larger of the maximum deviation from the line and the
    slope drift between the two halves of the window.
    """
    lr, ly = np.log(r), np.log(y)
    slope, icpt = np.polyfit(lr, ly, 1)
    dev = float(np.max(np.abs(ly - (slope * lr + icpt))))
    h = len(lr) // 2
    drift = 0.0
    if h >= 3:
        s1 = np.polyfit(lr[:h], ly[:h], 1)[0]
        s2 = np.polyfit(lr[h:], ly[h:], 1)[0]
        drift = float(abs(s2 - s1))
    return float(slope), float(icpt), max(dev, drift)


def trend(r, y, tol=1e-2, noise=0.5):
    """Classify a positive curve on its window as decaying, bounded or growing.

    A curve whose log deviates from its fitted line by more than ``noise``
    is labelled inconclusive.
    """
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    ok = np.isfinite(y) & (y > 0)
    if not np.any(np.isfinite(y)):
        return Trend(math.nan, math.nan, math.inf, math.nan, INCONCLUSIVE)
    if ok.sum() < 4:
        # identically zero (or nearly): the limit is zero
        if np.all(y[np.isfinite(y)] <= 0):
            return Trend(-math.inf, -math.inf, 0.0, 0.0, "decaying")
        return Trend(math.nan, math.nan, math.inf, math.nan, INCONCLUSIVE)
    slope, icpt, res = fit_loglog(r[ok], y[ok])
    last = float(y[ok][-1])
    if res > noise:
        label = INCONCLUSIVE
    elif slope < -tol or (last < tol * 1e-6 and slope <= tol):
        label = "decaying"
    elif slope > tol:
        label = "growing"
    else:
        label = "bounded"
    return Trend(slope, float(icpt), res, last, label)


# ---------------------------------------------------------------------------
# ratio curves
# ---------------------------------------------------------------------------


@dataclass
class RatioCheck:
    """Verdict plus the per-alpha sup-curves it was based on."""

    verdict: str
    radii: np.ndarray
    curves: dict
    trends: dict
    near_zero: np.ndarray
    weight: dict | None = None
    fitted_C: float | None = None
    note: str = ""

    @property
    def passed(self):
        return self.verdict == TRUE

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "radii": self.radii.tolist(),
            "curves": {_akey(a): np.asarray(c).tolist() for a, c in self.curves.items()},
            "trends": {_akey(a): t.to_dict() for a, t in self.trends.items()},
            "near_zero": self.near_zero.tolist(),
            "weight": self.weight,
            "fitted_C": self.fitted_C,
            "note": self.note,
        }

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["r", "alpha", "ratio"])
        for a, c in self.curves.items():
            for r, v in zip(self.radii, c):
                wr.writerow([repr(float(r)), _akey(a), repr(float(v))])
        return buf.getvalue()


def _akey(a):
    return "(" + ",".join(str(v) for v in a) + ")"


def _sample(P, plan):
    pts = plan.points()
    vals = np.abs(P(pts))
    scale = max(abs(c) for _, c in P.terms)
    thresh = 1e-12 * (1.0 + np.linalg.norm(pts, axis=2)) ** P.degree * scale
    near = vals <= thresh
    return pts, vals, near


def ratio_curves(P, plan, w=None, max_order=None):
    """``R_alpha(r) = max_theta omega(r)^|alpha| |∂^alpha P| / |P|`` with near-zeros skipped."""
    pts, vals, near = _sample(P, plan)
    weight = np.asarray(w(plan.radii)) if w is not None else np.ones_like(plan.radii)
    safe = np.where(near, 1.0, vals)
    curves = {}
    for alpha, d in P.derivatives:
        k = sum(alpha)
        if max_order is not None and k > max_order:
            continue
        ratio = np.abs(d(pts)) / safe
        ratio = np.where(near, -np.inf, ratio)
        curves[alpha] = np.max(ratio, axis=1) * weight**k
    return curves, near.sum(axis=1)


def _decide(P, plan, curves, near_counts, tol, need):
    top = plan.top_decade()
    total = plan.points().shape[1]
    trends = {a: trend(plan.radii[top], c[top], tol) for a, c in curves.items()}
    if np.mean(near_counts[top]) > 0.25 * total:
        return INCONCLUSIVE, trends, "more than 25% of top-decade samples lie near the real zero set"
    unbounded_zeros = bool(np.all(near_counts[top] > 0))
    labels = [t.label for t in trends.values()]
    # zeros skipped at every top-decade radius mean the curves cannot certify a true verdict
    zeros_note = "real zeros of P persist at every top-decade radius"
    if need == "limit":
        if all(lab == "decaying" for lab in labels):
            return (INCONCLUSIVE, trends, zeros_note) if unbounded_zeros else (TRUE, trends, "")
        if any(lab in ("bounded", "growing") for lab in labels):
            return FALSE, trends, ""
    else:
        if all(lab in ("decaying", "bounded") for lab in labels):
            return (INCONCLUSIVE, trends, zeros_note) if unbounded_zeros else (TRUE, trends, "")
        if any(lab == "growing" for lab in labels):
            return FALSE, trends, ""
    return INCONCLUSIVE, trends, "non-monotone ratio curve at the horizon"


def check_hypoelliptic(P, plan=None, tol=1e-2):
    """Decide whether ``∂^alpha P / P -> 0`` for every ``alpha != 0``.

    Returns a :class:`RatioCheck` whose verdict is ``"true"``, ``"false"`` or
    ``"inconclusive"``.
    """
    if P.degree < 1:
        from .errors import DegenerateSymbolError

        raise DegenerateSymbolError("hypoellipticity needs degree >= 1")
    plan = _plan(P, plan)
    curves, near = ratio_curves(P, plan)
    verdict, trends, note = _decide(P, plan, curves, near, tol, "limit")
    if verdict == TRUE:
        # the decreasing curves must also have dropped below tol at the horizon
        if any(t.last >= tol for t in trends.values() if math.isfinite(t.last)):
            verdict, note = INCONCLUSIVE, "ratios decrease but are not yet below tol at r_K"
    return RatioCheck(verdict, plan.radii, curves, trends, near, note=note)


def check_beurling_hypo(P, w, plan=None, tol=1e-2):
    """``omega(xi)^|alpha| |∂^alpha P| / |P| -> 0`` for every ``alpha != 0``."""
    plan = _plan(P, plan)
    curves, near = ratio_curves(P, plan, w)
    verdict, trends, note = _decide(P, plan, curves, near, tol, "limit")
    sup = max((float(np.max(c[np.isfinite(c)])) for c in curves.values()), default=0.0)
    return RatioCheck(verdict, plan.radii, curves, trends, near, w.to_dict(), sup, note)


def check_roumieu_hypo(P, w, plan=None, tol=1e-2):
    """``omega(xi)^|alpha| |∂^alpha P| <= C |P|``; ``fitted_C`` is the sup over the plan."""
    plan = _plan(P, plan)
    curves, near = ratio_curves(P, plan, w)
    verdict, trends, note = _decide(P, plan, curves, near, tol, "bounded")
    sup = max((float(np.max(c[np.isfinite(c)])) for c in curves.values()), default=0.0)
    return RatioCheck(verdict, plan.radii, curves, trends, near, w.to_dict(), sup, note)


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


@dataclass
class ExponentFit:
    value: float
    residual: float
    intercept: float
    curve: np.ndarray = field(repr=False, default=None)
    snapped: float | None = None

    def to_dict(self):
        return {
            "value": self.value,
            "residual": self.residual,
            "intercept": self.intercept,
            "snapped": self.snapped,
        }


def _min_curve(P, plan, fn):
    pts, vals, near = _sample(P, plan)
    q = fn(pts, vals)
    q = np.where(near, np.inf, q)
    return np.min(q, axis=1)


def _fit_top(plan, curve, name):
    top = plan.top_decade()
    ok = top & np.isfinite(curve) & (curve > 0)
    if ok.sum() < 4:
        raise InsufficientDataError(f"too few usable samples to estimate {name}")
    slope, icpt, res = fit_loglog(plan.radii[ok], curve[ok])
    if slope < 0:
        raise InconsistencyError(f"{name} slope {slope:.4g} is negative; P is not hypoelliptic")
    return slope, icpt, res


def _snap(value, residual, m):
    best = Fraction(value).limit_denominator(max(m, 1))
    if abs(float(best) - value) <= max(residual, 1e-2):
        return float(best)
    return None


def estimate_d(P, plan=None):
    """Growth exponent of ``min_theta |P(r theta)|`` on the top decade."""
    plan = _plan(P, plan)
    curve = _min_curve(P, plan, lambda pts, v: v)
    s, b, res = _fit_top(plan, curve, "d")
    return ExponentFit(s, res, b, curve)


def distance_proxy(P, pts, vals=None):
    """``(sum_{alpha != 0} |∂^alpha P / P|^{1/|alpha|})^{-1}`` at ``pts``."""
    if vals is None:
        vals = np.abs(P(pts))
    acc = np.zeros(np.shape(vals))
    for alpha, d in P.derivatives:
        acc = acc + (np.abs(d(pts)) / vals) ** (1.0 / sum(alpha))
    with np.errstate(divide="ignore"):
        return 1.0 / acc


def estimate_c(P, plan=None, snap=False):
    """Growth exponent of the minimal distance proxy on the top decade."""
    plan = _plan(P, plan)
    curve = _min_curve(P, plan, lambda pts, v: distance_proxy(P, pts, np.where(v > 0, v, np.inf)))
    s, b, res = _fit_top(plan, curve, "c")
    return ExponentFit(s, res, b, curve, _snap(s, res, P.degree) if snap else None)


@dataclass
class GammaFit:
    value: float
    C: float
    converged: bool
    interval: tuple
    rounds: int
    history: list

    def to_dict(self):
        return asdict(self)


def estimate_gamma(P, plan=None, max_rounds=20, tol=1e-6):
    """Smallest ``gamma`` with ``|∂^alpha P|^2 <= C (1 + |P|^2)^{1 - |alpha|/gamma}``.

    Alternates between fitting ``C`` on the bottom decade at the current
    ``gamma`` and taking the sup of the implied lower bounds on the top decade.
    """
    plan = _plan(P, plan)
    pts, vals, near = _sample(P, plan)
    logp = np.log1p(vals**2)
    ders = [(sum(a), np.abs(d(pts)) ** 2) for a, d in P.derivatives]
    low = plan.radii <= plan.radii[0] * 10.0 * (1 + 1e-12)
    top = plan.top_decade()
    gamma = float(P.degree)
    history = [gamma]
    C = math.nan
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        C = 0.0
        for k, d2 in ders:
            bound = np.exp((1.0 - k / gamma) * logp[low])
            C = max(C, float(np.max(np.where(near[low], 0.0, d2[low] / bound))))
        g = 0.0
        for k, d2 in ders:
            sel = top[:, None] & ~near & (d2 > 0)
            with np.errstate(divide="ignore"):
                L = np.log(d2[sel] / C) / logp[sel]
            if np.any(L >= 1.0):
                g = math.inf
                break
            g = max(g, float(np.max(k / (1.0 - L))) if L.size else 0.0)
        history.append(g)
        if not math.isfinite(g):
            break
        if abs(g - gamma) <= tol * max(1.0, gamma):
            gamma = g
            converged = True
            break
        gamma = g
    tail = history[-3:]
    interval = (float(min(tail)), float(max(tail)))
    return GammaFit(float(gamma), float(C), converged, interval if not converged else (gamma, gamma), rounds, history)


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------


@dataclass
class HypoReport:
    symbol: str
    hypoelliptic: str
    d: ExponentFit | None
    c: ExponentFit | None
    gamma: GammaFit | None
    check: RatioCheck
    plan: dict
    beurling: RatioCheck | None = None
    roumieu: RatioCheck | None = None
    notes: list = field(default_factory=list)

    @property
    def d_est(self):
        return self.d.value if self.d else None

    @property
    def c_est(self):
        return self.c.value if self.c else None

    @property
    def gamma_est(self):
        return self.gamma.value if self.gamma else None

    def to_dict(self, curves=True):
        out = {
            "symbol": self.symbol,
            "hypoelliptic": self.hypoelliptic,
            "d": self.d.to_dict() if self.d else None,
            "c": self.c.to_dict() if self.c else None,
            "gamma": self.gamma.to_dict() if self.gamma else None,
            "plan": self.plan,
            "notes": self.notes,
        }
        for key in ("check", "beurling", "roumieu"):
            rc = getattr(self, key)
            if rc is None:
                out[key] = None
                continue
            d = rc.to_dict()
            if not curves:
                d.pop("curves")
                d.pop("radii")
            out[key] = d
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def analyze(P, w=None, plan=None, tol=1e-2, snap=False):
    """Hypoellipticity verdict, exponents and optional weight tests in one report."""
    plan = _plan(P, plan)
    chk = check_hypoelliptic(P, plan, tol)
    notes = []
    d = c = g = None
    if chk.verdict == TRUE:
        d = estimate_d(P, plan)
        c = estimate_c(P, plan, snap)
        g = estimate_gamma(P, plan)
        if abs(P.degree * c.value - d.value) > P.degree * c.residual + d.residual + 0.05:
            notes.append("m*c and d disagree beyond the residuals")
        if not g.converged:
            notes.append(f"gamma did not converge; interval {g.interval}")
    beur = rou = None
    if w is not None:
        beur = check_beurling_hypo(P, w, plan, tol)
        rou = check_roumieu_hypo(P, w, plan, tol)
    return HypoReport(P.to_literal(), chk.verdict, d, c, g, chk, plan.to_dict(), beur, rou, notes)


# ---------------------------------------------------------------------------
# strength
# ---------------------------------------------------------------------------

P_WEAKER, Q_WEAKER, EQUAL, INCOMPARABLE = "P_weaker", "Q_weaker", "equally_strong", "incomparable"
_MIRROR = {P_WEAKER: Q_WEAKER, Q_WEAKER: P_WEAKER, EQUAL: EQUAL, INCOMPARABLE: INCOMPARABLE}


@dataclass
class StrengthVerdict:
    relation: str
    sup_P_over_Q: float
    sup_Q_over_P: float
    bounded_P_over_Q: bool
    bounded_Q_over_P: bool
    witness_P_over_Q: list
    witness_Q_over_P: list
    trend_P_over_Q: Trend
    trend_Q_over_P: Trend

    def mirrored(self):
        return _MIRROR[self.relation]

    def to_dict(self):
        out = asdict(self)
        return out


def compare_strength(P, Q, plan=None, tol=1e-2):
    """Compare tilde norms both ways; an increasing top-decade trend means unbounded."""
    if P.n != Q.n:
        raise DimensionMismatchError(f"dimensions differ: {P.n} vs {Q.n}")
    plan = _plan(P, plan)
    pts = plan.points()
    pt = P.tilde_norm(pts)
    qt = Q.tilde_norm(pts)
    top = plan.top_decade()

    def side(a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(b > 0, a / b, np.where(a > 0, np.inf, 1.0))
        curve = np.max(ratio, axis=1)
        idx = np.unravel_index(np.argmax(ratio), ratio.shape)
        tr = trend(plan.radii[top], curve[top], tol, noise=math.inf)
        bounded = bool(np.all(np.isfinite(curve)) and tr.label != "growing")
        return float(np.max(curve)), bounded, pts[idx].tolist(), tr

    s_pq, b_pq, w_pq, t_pq = side(pt, qt)
    s_qp, b_qp, w_qp, t_qp = side(qt, pt)
    if b_pq and b_qp:
        rel = EQUAL
    elif b_pq:
        rel = P_WEAKER
    elif b_qp:
        rel = Q_WEAKER
    else:
        rel = INCOMPARABLE
    return StrengthVerdict(rel, s_pq, s_qp, b_pq, b_qp, w_pq, w_qp, t_pq, t_qp)


@dataclass
class ConstantStrengthReport:
    constant_strength: bool
    worst_pair: tuple
    worst_relation: str
    worst_ratio: float
    relations: list

    def to_dict(self):
        return asdict(self)


def constant_strength_check(Q, x_samples, plan=None, tol=1e-2):
    """Freeze ``Q`` at every sample point and require pairwise equal strength."""
    xs = [np.asarray(x, dtype=float) for x in x_samples]
    if len(xs) < 2:
        raise InsufficientDataError("need at least two sample points")
    frozen = [Q.freeze(x) for x in xs]
    plan = plan if plan is not None else SamplingPlan.default(Q.n)
    rels = []
    worst = None
    for i, j in itertools.combinations(range(len(xs)), 2):
        v = compare_strength(frozen[i], frozen[j], plan, tol)
        score = max(v.trend_P_over_Q.slope, v.trend_Q_over_P.slope)
        rels.append({"pair": [xs[i].tolist(), xs[j].tolist()], "relation": v.relation, "slope": score})
        key = (v.relation != EQUAL, score)
        if worst is None or key > worst[0]:
            worst = (key, (xs[i].tolist(), xs[j].tolist()), v)
    ok = all(r["relation"] == EQUAL for r in rels)
    v = worst[2]
    return ConstantStrengthReport(
        ok, worst[1], v.relation, max(v.sup_P_over_Q, v.sup_Q_over_P), rels
    )


@dataclass
class InvariantsReport:
    relation: str
    assertions: list

    @property
    def all_pass(self):
        return all(a["passed"] for a in self.assertions)

    def to_dict(self):
        return {"relation": self.relation, "assertions": self.assertions, "all_pass": self.all_pass}


def equal_strength_invariants(P, Q, plan=None, weights=(), tol=1e-2):
    """Check that equally strong symbols share ``c`` and every hypoellipticity verdict."""
    plan = _plan(P, plan)
    rel = compare_strength(P, Q, plan, tol).relation
    out = [{"name": "equally_strong", "passed": rel == EQUAL, "detail": rel}]
    hp = check_hypoelliptic(P, plan, tol).verdict
    hq = check_hypoelliptic(Q, plan, tol).verdict
    out.append({"name": "hypoelliptic(P)", "passed": hp == TRUE, "detail": hp})
    out.append({"name": "hypoelliptic(Q)", "passed": hq == hp, "detail": hq})
    if hp == TRUE and hq == TRUE:
        cp, cq = estimate_c(P, plan), estimate_c(Q, plan)
        slack = cp.residual + cq.residual
        out.append(
            {
                "name": "c_P == c_Q",
                "passed": abs(cp.value - cq.value) <= slack,
                "detail": {"c_P": cp.value, "c_Q": cq.value, "slack": slack},
            }
        )
    for w in weights:
        for kind, fn in (("beurling", check_beurling_hypo), ("roumieu", check_roumieu_hypo)):
            a, b = fn(P, w, plan, tol).verdict, fn(Q, w, plan, tol).verdict
            out.append({"name": f"{kind}[{w.describe()}]", "passed": a == b, "detail": [a, b]})
    return InvariantsReport(rel, out)
