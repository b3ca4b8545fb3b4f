"""Weight functions, their Young conjugates and weight-driven decay envelopes.

A weight function ``omega`` is evaluated through one of a handful of named
families.  Every family is normalised to vanish on ``[0, 1]`` by clamping, so
``omega(4) == 2`` for ``gevrey(1/2)``.  The log-convex profile
``phi(u) = omega(exp(u))`` is what the Young conjugate and the convexity axiom
act on.  Clamping leaves a kink near ``u = 0``; the report records the knee
``M`` beyond which ``phi`` agrees with its lower convex envelope, and the
conjugate is unaffected by it.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError, InsufficientDataError, ParseError

FAMILIES = ("gevrey", "power", "log_power", "sublinear_log", "exp_log", "tabulated")

# Maximum number of doublings of the search interval in the conjugate search.
MAX_DOUBLINGS = 10_000


@dataclass(frozen=True)
class WeightFunction:
    """A normalised weight function.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    params : tuple of float
        Family parameters, e.g. ``(d,)`` for ``gevrey``.
    grid, values : tuple of float, optional
        Only for ``tabulated``; increasing abscissae and weight values.
    """

    family: str
    params: tuple = ()
    grid: tuple = field(default=(), repr=False)
    values: tuple = field(default=(), repr=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def gevrey(cls, d):
        d = float(d)
        if not 0.0 < d < 1.0:
            raise DomainError(f"gevrey exponent must lie in (0, 1), got {d}")
        return cls("gevrey", (d,))

    @classmethod
    def power(cls, d):
        """``t**d`` without the non-quasianalyticity restriction (``d = 1`` allowed)."""
        d = float(d)
        if d <= 0:
            raise DomainError(f"power exponent must be positive, got {d}")
        return cls("power", (d,))

    @classmethod
    def log_power(cls, s):
        s = float(s)
        if s <= 1.0:
            raise DomainError(f"log_power exponent must exceed 1, got {s}")
        return cls("log_power", (s,))

    @classmethod
    def sublinear_log(cls, beta):
        beta = float(beta)
        if beta <= 1.0:
            raise DomainError(f"sublinear_log beta must exceed 1, got {beta}")
        return cls("sublinear_log", (beta,))

    @classmethod
    def exp_log(cls, alpha, beta):
        alpha, beta = float(alpha), float(beta)
        if not 0.0 < alpha < 1.0 or beta <= 0:
            raise DomainError("exp_log needs alpha in (0, 1) and beta > 0")
        return cls("exp_log", (alpha, beta))

    @classmethod
    def tabulated(cls, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise InsufficientDataError("tabulated weight needs matching 1-D grid and values")
        if grid.size < 8:
            raise InsufficientDataError(
                f"tabulated weight needs at least 8 points, got {grid.size}"
            )
        if np.any(np.diff(grid) <= 0) or grid[0] < 0:
            raise DomainError("tabulated grid must be nonnegative and strictly increasing")
        if np.any(np.diff(values) < 0):
            raise DomainError("tabulated weight values must be nondecreasing")
        if grid[-1] <= 1.0 or values[-1] <= 0:
            raise InsufficientDataError("tabulated weight must extend beyond t = 1")
        return cls("tabulated", (), tuple(grid.tolist()), tuple(values.tolist()))

    # -- evaluation -------------------------------------------------------
    @property
    def clamped(self):
        """True when a tabulated weight had ``omega(t) > 0`` somewhere on ``[0, 1]``."""
        if self.family != "tabulated":
            return False
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        return bool(np.any(v[g <= 1.0] > 0)) or float(np.interp(1.0, g, v)) > 0

    def phi(self, u):
        """``omega(exp(u))`` for real ``u``; zero for ``u <= 0``."""
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            raw = self._phi_raw(np.maximum(u, 0.0))
        return np.where(u > 0, raw, 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(t < 0):
            raise DomainError("weight argument must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            u = np.log(np.maximum(t, 1e-300))
        out = self.phi(u)
        return float(out) if out.ndim == 0 else out

    def _phi_raw(self, u):
        f = self.family
        if f in ("gevrey", "power"):
            return np.exp(self.params[0] * u)
        if f == "log_power":
            return np.logaddexp(0.0, u) ** self.params[0]
        if f == "sublinear_log":
            return np.exp(u - self.params[0] * np.log(np.logaddexp(1.0, u)))
        if f == "exp_log":
            alpha, beta = self.params
            return np.exp(beta * np.logaddexp(0.0, u) ** alpha)
        if f == "tabulated":
            return self._tabulated_phi(u)
        raise DomainError(f"unknown weight family {f!r}")

    def _tabulated_phi(self, u):
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        t = np.exp(u)
        inside = np.interp(t, g, v)
        # power-law continuation of the last segment keeps phi log-convex
        pos = v > 0
        gp, vp = g[pos], v[pos]
        if gp.size >= 2:
            slope = (math.log(vp[-1]) - math.log(vp[-2])) / (math.log(gp[-1]) - math.log(gp[-2]))
        else:
            slope = 1.0
        tail = vp[-1] * np.exp(slope * (u - math.log(g[-1])))
        return np.where(t <= g[-1], inside, tail)

    def describe(self):
        if self.family == "tabulated":
            return f"tabulated[{len(self.grid)} points]"
        return f"{self.family}:" + ",".join(repr(p) for p in self.params)

    def to_dict(self):
        out = {"family": self.family, "params": list(self.params)}
        if self.family == "tabulated":
            out["grid"] = list(self.grid)
            out["values"] = list(self.values)
        return out


def eval_weight(w, t):
    """Return ``omega(t)``; exactly zero for ``t <= 1``."""
    if isinstance(t, (list, tuple, np.ndarray)):
        return w(np.asarray(t, dtype=float))
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"weight argument must be finite and nonnegative, got {t}")
    return float(w(t))


# ---------------------------------------------------------------------------
# config text
# ---------------------------------------------------------------------------

_ALIASES = {
    "gevrey": "gevrey",
    "power": "power",
    "logpow": "log_power",
    "log_power": "log_power",
    "sublog": "sublinear_log",
    "sublinear_log": "sublinear_log",
    "explog": "exp_log",
    "exp_log": "exp_log",
}

_KEYS = {
    "gevrey": ("d",),
    "power": ("d",),
    "log_power": ("s",),
    "sublinear_log": ("beta",),
    "exp_log": ("alpha", "beta"),
}


def parse_weight(text):
    """Parse ``family:p1,p2`` or ``family=gevrey d=0.5`` into a :class:`WeightFunction`.

    Tabulated weights use ``tabulated:t0/w0,t1/w1,...``.
    """
    src = text.strip()
    if not src:
        raise ParseError("empty weight string", text, 1, 1)
    if "=" in src:
        pairs = {}
        for m in re.finditer(r"(\w+)\s*=\s*([^\s,;]+)", src):
            pairs[m.group(1).lower()] = m.group(2)
        fam = pairs.pop("family", None)
        if fam is None:
            raise ParseError("missing 'family' key", text, 1, 1)
        family = _ALIASES.get(fam.lower())
        if family is None:
            raise ParseError(f"unknown weight family {fam!r}", text, 1, src.find(fam) + 1)
        try:
            args = [float(pairs[k]) for k in _KEYS[family]]
        except KeyError as exc:
            raise ParseError(f"missing parameter {exc.args[0]!r} for {family}", text, 1, 1)
        except ValueError:
            raise ParseError("non-numeric parameter", text, 1, 1)
        return _build(family, args)

    head, _, rest = src.partition(":")
    fam = head.strip().lower()
    if fam == "tabulated":
        pts = [p for p in rest.split(",") if p.strip()]
        try:
            grid, vals = zip(*[(float(a), float(b)) for a, b in (p.split("/") for p in pts)])
        except ValueError:
            raise ParseError("tabulated weight expects t/w pairs", text, 1, len(head) + 2)
        return WeightFunction.tabulated(grid, vals)
    family = _ALIASES.get(fam)
    if family is None:
        raise ParseError(f"unknown weight family {head.strip()!r}", text, 1, 1)
    args = []
    col = len(head) + 2
    for piece in rest.split(","):
        try:
            args.append(float(piece))
        except ValueError:
            raise ParseError(f"bad numeric parameter {piece.strip()!r}", text, 1, col)
        col += len(piece) + 1
    if len(args) != len(_KEYS[family]):
        raise ParseError(
            f"{family} expects {len(_KEYS[family])} parameter(s), got {len(args)}", text, 1, len(head) + 2
        )
    return _build(family, args)


def _build(family, args):
    return {
        "gevrey": WeightFunction.gevrey,
        "power": WeightFunction.power,
        "log_power": WeightFunction.log_power,
        "sublinear_log": WeightFunction.sublinear_log,
        "exp_log": WeightFunction.exp_log,
    }[family](*args)


# ---------------------------------------------------------------------------
# axioms
# ---------------------------------------------------------------------------


@dataclass
class WeightAxiomReport:
    weight: dict
    horizon: float
    tol: float
    alpha_L: float
    alpha_pass: bool
    beta_integral: float
    beta_tail_exponent: float
    beta_pass: bool
    gamma_ratio_start: float
    gamma_ratio_end: float
    gamma_pass: bool
    delta_margin: float
    delta_pass: bool
    knee: float
    clamped: bool = False
    notes: list = field(default_factory=list)

    @property
    def all_pass(self):
        return self.alpha_pass and self.beta_pass and self.gamma_pass and self.delta_pass

    def to_dict(self):
        out = asdict(self)
        out["all_pass"] = self.all_pass
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def tail_exponent(w, horizon, n=64):
    """Least-squares slope of ``log omega`` against ``log t`` on ``[horizon/10, horizon]``."""
    t = np.geomspace(horizon / 10.0, horizon, n)
    vals = w(t)
    if np.any(vals <= 0):
        return 0.0
    return float(np.polyfit(np.log(t), np.log(vals), 1)[0])


def weight_knee(w, u_max=None):
    """Return ``M = exp(u_k)`` where ``phi`` first meets its lower convex envelope.

    ``u_k`` minimises ``phi(u)/u``: the tangent point of the supporting line
    through the origin.
    """
    u_max = u_max or math.log(1e8)
    u = np.linspace(1e-3, u_max, 20001)
    ratio = w.phi(u) / u
    return float(math.exp(u[int(np.nanargmin(ratio))]))


def check_weight_axioms(w, horizon=1e4, tol=1e-3):
    """Numerically check the four weight-function axioms up to ``horizon``.

    Returns a :class:`WeightAxiomReport`; verdicts depend only on
    ``(w, horizon, tol)``.
    """
    if horizon < 1e3:
        raise DomainError("horizon must be at least 1e3")
    if w.family == "tabulated" and len(w.grid) < 8:
        raise InsufficientDataError("tabulated weight has too few points")
    notes = []
    if w.clamped:
        notes.append("tabulated weight is positive on [0,1]; clamped to zero there")

    # (alpha) omega(2t) <= L (omega(t) + 1)
    t = np.geomspace(1e-2, horizon / 2.0, 4000)
    L = float(np.max(w(2 * t) / (w(t) + 1.0)))
    alpha_pass = L <= 1e6

    # (beta) finite-horizon integral plus tail exponent
    integral, _ = integrate.quad(
        lambda u: float(w.phi(u)) * math.exp(-u), 0.0, math.log(horizon), limit=400
    )
    p = tail_exponent(w, horizon)
    beta_pass = p < 1.0 - tol

    # (gamma) log t / omega(t) decreasing on the tail
    tg = np.geomspace(math.sqrt(horizon), horizon, 200)
    ratio = np.log(tg) / w(tg)
    steps = np.diff(ratio)
    gamma_pass = bool(np.all(steps <= tol * ratio[:-1]) and ratio[-1] < ratio[0])

    # (delta) convexity of phi beyond the knee
    knee = weight_knee(w, u_max=math.log(horizon))
    u0 = math.log(knee)
    u = np.linspace(u0, math.log(horizon), 4001)
    ph = w.phi(u)
    h = u[1] - u[0]
    second = (ph[2:] - 2 * ph[1:-1] + ph[:-2]) / h**2
    scale = max(1.0, float(np.max(np.abs(ph))))
    margin = float(np.min(second)) / scale
    delta_pass = margin >= -max(1e-8, tol * 1e-5)
    if knee > 1.0 + 1e-9:
        notes.append(f"phi modified to its convex envelope on [0, {knee:.6g}]")

    return WeightAxiomReport(
        weight=w.to_dict(),
        horizon=float(horizon),
        tol=float(tol),
        alpha_L=L,
        alpha_pass=bool(alpha_pass),
        beta_integral=float(integral),
        beta_tail_exponent=p,
        beta_pass=bool(beta_pass),
        gamma_ratio_start=float(ratio[0]),
        gamma_ratio_end=float(ratio[-1]),
        gamma_pass=gamma_pass,
        delta_margin=margin,
        delta_pass=bool(delta_pass),
        knee=knee,
        clamped=w.clamped,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Young conjugate
# ---------------------------------------------------------------------------

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(fun, lo, hi, iters=90):
    """Vectorised golden-section maximisation of ``fun`` on ``[lo, hi]``."""
    a, b = lo.copy(), hi.copy()
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _GOLD * (b - a)
        new_d = a + _GOLD * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, fun(new_c), fd)
        fd_next = np.where(left, fc, fun(new_d))
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    x = 0.5 * (a + b)
    return x, fun(x)


def conjugate_values(w, s, n_search=257):
    """Evaluate ``phi*(s) = sup_{u >= 0} (s u - phi(u))`` for an array of ``s``.

    The search interval ``[0, t_cap]`` doubles until the discrete argmax is
    interior, then a golden-section step refines it.  Returns
    ``(values, maximisers)``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0) or np.any(~np.isfinite(s)):
        raise DomainError("conjugate argument must be finite and nonnegative")
    values = np.zeros_like(s)
    argmax = np.zeros_like(s)
    todo = np.nonzero(s > 0)[0]
    cap = np.ones_like(s)
    # the clamped phi jumps at u = 0, so search (0, cap] and compare with u = 0 last
    frac = np.linspace(0.0, 1.0, n_search)
    frac[0] = 1e-9
    for _ in range(MAX_DOUBLINGS):
        if todo.size == 0:
            break
        uu = cap[todo, None] * frac[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            obj = s[todo, None] * uu - w.phi(uu)
        obj = np.where(np.isnan(obj), -np.inf, obj)
        idx = np.argmax(obj, axis=1)
        at_edge = idx == n_search - 1
        done = todo[~at_edge]
        if done.size:
            k = idx[~at_edge]
            h = cap[done] / (n_search - 1)
            lo = np.maximum((k - 1) * h, 1e-9 * cap[done])
            hi = (k + 1) * h
            sd = s[done]

            def fun(u, sd=sd):
                with np.errstate(over="ignore"):
                    return sd * u - w.phi(u)

            xr, fr = _golden_max(fun, lo, hi)
            grid_best = obj[~at_edge, :][np.arange(done.size), k]
            better = fr > grid_best
            values[done] = np.where(better, fr, grid_best)
            best = np.where(better, fr, grid_best)
            argmax[done] = np.where(best > 0, np.where(better, xr, k * h), 0.0)
        todo = todo[at_edge]
        cap[todo] *= 2.0
        if todo.size and not np.all(np.isfinite(cap[todo])):
            break
    if todo.size:
        raise DivergenceError(
            f"conjugate search did not converge for s = {s[todo][:3].tolist()}"
        )
    return np.maximum(values, 0.0), argmax


def conjugate_at(w, s):
    """Pointwise ``phi*(s)`` without tabulation."""
    vals, _ = conjugate_values(w, s)
    return float(vals[0]) if np.ndim(s) == 0 else vals


def lower_convex_envelope(x, y):
    """Lower convex hull of points (monotone chain), re-sampled at ``x``."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    hx = np.asarray([x[i] for i in hull])
    hy = np.asarray([y[i] for i in hull])
    return np.interp(x, hx, hy)


@dataclass(frozen=True)
class YoungConjugate:
    """Tabulated ``phi*`` with piecewise-linear interpolation in ``s``."""

    source: WeightFunction
    s_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    maximizers: np.ndarray = field(repr=False)

    @property
    def s_max(self):
        return float(self.s_grid[-1])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.s_max * (1 + 1e-12)):
            raise DomainError(f"conjugate table covers [0, {self.s_max}]")
        out = np.interp(s, self.s_grid, self.values)
        return float(out) if out.ndim == 0 else out

    def biconjugate(self, u):
        """``phi**(u) = max_s (s u - phi*(s))`` over the table."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty_like(u)
        for start in range(0, u.size, 512):
            blk = u[start:start + 512]
            out[start:start + 512] = np.max(
                blk[:, None] * self.s_grid[None, :] - self.values[None, :], axis=1
            )
        return out

    def biconjugacy_error(self, n=400):
        """Max relative ``|phi** - phi|`` on the exposed range ``[log knee, u*(s_max)]``."""
        u_lo = math.log(weight_knee(self.source))
        u_hi = float(self.maximizers[-1])
        if u_hi <= u_lo:
            return 0.0
        u = np.linspace(u_lo, u_hi, n)
        ph = self.source.phi(u)
        bi = self.biconjugate(u)
        return float(np.max(np.abs(bi - ph) / np.maximum(np.abs(ph), 1e-300)))

    def is_convex(self, tol=1e-8):
        v, s = self.values, self.s_grid
        slopes = np.diff(v) / np.diff(s)
        return bool(np.all(np.diff(slopes) >= -tol * max(1.0, float(np.max(np.abs(slopes))))))

    def to_rows(self):
        return list(zip(self.s_grid.tolist(), self.values.tolist()))


def young_conjugate(w, s_max, n_grid=1024):
    """Tabulate ``phi*`` on ``{0} ∪ geomspace(s_max * 1e-4, s_max, n_grid - 1)``.

    Raises
    ------
    DivergenceError
        If the supremum search does not settle (``phi* = inf``).
    """
    if s_max <= 0:
        raise DomainError("s_max must be positive")
    if n_grid < 64:
        raise DomainError("n_grid must be at least 64")
    s = np.concatenate([[0.0], np.geomspace(s_max * 1e-4, s_max, n_grid - 1)])
    vals, arg = conjugate_values(w, s)
    vals = lower_convex_envelope(s, vals)
    return YoungConjugate(w, s, vals, arg)


# ---------------------------------------------------------------------------
# strong weights and envelopes
# ---------------------------------------------------------------------------


@dataclass
class StrongWeightResult:
    passed: bool
    c: float
    y_grid: list
    ratios: list
    tail_exponents: list

    def to_dict(self):
        return asdict(self)


def check_strong_weight(w, horizon=1e4, n_y=13):
    """Test ``∫_1^∞ σ(ty)/t² dt <= c σ(y) + c`` on a geometric ``y`` grid.

    The integral is computed on ``[1, horizon]`` and closed with the
    power-law tail fitted on the last decade; a tail exponent ``>= 1`` means
    the inner integral diverges and the test fails.
    """
    if horizon < 1e3:
        raise DomainError("horizon must be at least 1e3")
    ys = np.geomspace(1.0, horizon, n_y)
    ratios, exps = [], []
    log_t = math.log(horizon)
    for y in ys:
        def integrand(u, y=y):
            return float(w(math.exp(u) * y)) * math.exp(-u)

        inner, _ = integrate.quad(integrand, 0.0, log_t, limit=400)
        tt = np.geomspace(horizon / 10, horizon, 32)
        vals = w(tt * y)
        if np.all(vals > 0):
            p = float(np.polyfit(np.log(tt), np.log(vals), 1)[0])
        else:
            p = 0.0
        exps.append(p)
        if p >= 1.0 - 1e-3:
            ratios.append(math.inf)
            continue
        inner += float(w(horizon * y)) / horizon / (1.0 - p)
        ratios.append(inner / (float(w(y)) + 1.0))
    c = max(ratios)
    return StrongWeightResult(
        passed=bool(math.isfinite(c)),
        c=float(c),
        y_grid=ys.tolist(),
        ratios=[float(r) for r in ratios],
        tail_exponents=exps,
    )


def decay_envelope(w, P, k, xi):
    """``exp(-k * omega(|P(xi)|**(1/m)))`` with ``m = deg P``."""
    from .errors import DegenerateSymbolError

    m = P.degree
    if m < 1:
        raise DegenerateSymbolError("decay envelope needs a symbol of degree >= 1")
    val = np.abs(P(np.asarray(xi)))
    return np.exp(-k * w(val ** (1.0 / m)))
