"""Wave-front classification with respect to the iterates of ``P``.

A cell is a pair (base-point window, frequency cone).  For each cell the field
is localised by a Gevrey plateau ``psi`` centred in the window and the shell
maxima ``M`` of ``|(psi u)^|`` inside the cone are compared with the envelopes
``exp(-k omega(|P(xi)|^{1/m}))``.

The finite band cannot decide "for every k" or "for some k" directly, so the
verdict rests on the decay rate ``k`` fitted on three nested outer tails:

* the rate that a pure power ``|xi|^{-p_sing}`` would produce on a tail is
  subtracted, leaving the excess rate ``kappa``;
* ``kappa <= 0`` on the outer tail, or a clearly decreasing ``kappa``, means
  the maxima beat every exponential envelope: singular;
* an increasing ``k`` reaching ``k_min`` is the Beurling surrogate, a stable
  positive ``k`` the Roumieu one.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import (
    DomainError,
    MarginError,
    ParseError,
    ResolutionError,
)
from .spectral import (
    FREQUENCY,
    SPACE,
    GridField,
    fft_forward,
    gevrey_profile,
    gevrey_step,
    make_bump,
)
from .weights import conjugate_values

BEURLING, ROUMIEU = "beurling", "roumieu"
REGULAR_BEURLING = "regular_beurling"
REGULAR_ROUMIEU = "regular_roumieu_only"
SINGULAR = "singular"
INCONCLUSIVE = "inconclusive"
MIN_MARGIN = math.radians(5.0)


def _mode(mode):
    m = str(mode).lower()
    if m in ("beurling", "b", "(omega)"):
        return BEURLING
    if m in ("roumieu", "r", "{omega}"):
        return ROUMIEU
    raise DomainError(f"mode must be 'beurling' or 'roumieu', got {mode!r}")


def is_regular(label, mode):
    """Whether ``label`` counts as regular under ``mode``."""
    if _mode(mode) == BEURLING:
        return label == REGULAR_BEURLING
    return label in (REGULAR_BEURLING, REGULAR_ROUMIEU)


def is_singular(label, mode):
    """Singular under ``mode``.

    A Roumieu-only label is also not Beurling-regular, but only an explicit
    singular verdict places a cell in the estimated wave-front set.
    """
    _mode(mode)
    return label == SINGULAR


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cone:
    """``{xi : <xi/|xi|, axis> >= cos(half_angle)}``."""

    axis: tuple
    half_angle: float
    inner: bool = False

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        nrm = float(np.linalg.norm(a))
        if nrm == 0:
            raise DomainError("cone axis must be nonzero")
        if not 0.0 < self.half_angle < math.pi / 2:
            raise DomainError("half-angle must lie in (0, pi/2)")
        object.__setattr__(self, "axis", tuple((a / nrm).tolist()))

    @property
    def n(self):
        return len(self.axis)

    def angle_to(self, xi):
        xi = np.asarray(xi, dtype=float)
        r = np.linalg.norm(xi, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            c = (xi @ np.asarray(self.axis)) / r
        return np.arccos(np.clip(np.where(r > 0, c, 1.0), -1.0, 1.0))

    def contains(self, xi):
        xi = np.asarray(xi, dtype=float)
        r = np.linalg.norm(xi, axis=-1)
        return (r > 0) & (self.angle_to(xi) <= self.half_angle + 1e-12)

    def shrink(self, margin=MIN_MARGIN):
        return Cone(self.axis, self.half_angle - margin, True)

    def axis_angle(self, other):
        c = float(np.dot(self.axis, other.axis if isinstance(other, Cone) else np.asarray(other) / np.linalg.norm(other)))
        return math.acos(max(-1.0, min(1.0, c)))

    def to_dict(self):
        return {"axis": list(self.axis), "half_angle_deg": math.degrees(self.half_angle), "inner": self.inner}


def check_nested(inner, outer, margin=MIN_MARGIN):
    """Raise unless ``inner ⊂⊂ outer`` with an angular margin of at least ``margin``."""
    if inner.n != outer.n:
        raise DomainError("cones live in different dimensions")
    if inner.axis_angle(outer) > 1e-9:
        raise MarginError("nested cones must share their axis")
    if outer.half_angle - inner.half_angle < margin - 1e-12:
        raise MarginError(
            f"angular margin {math.degrees(outer.half_angle - inner.half_angle):.3g} deg is below "
            f"{math.degrees(margin):.3g} deg"
        )


def default_cones(n, count=None, half_angle=None):
    """Cone decomposition covering ``S^{n-1}``.

    2-D: ``count`` (default 16) equally spaced axes with half-angle 15 deg.
    3-D: ``count`` (default 32) Fibonacci axes; the half-angle defaults to the
    covering radius of the axes plus 5 deg so the cones still cover the sphere.
    """
    if n == 1:
        return [Cone((1.0,), half_angle or math.radians(15)), Cone((-1.0,), half_angle or math.radians(15))]
    if n == 2:
        count = count or 16
        ang = 2 * math.pi * np.arange(count) / count
        ha = half_angle or math.radians(15.0)
        if ha < math.pi / count:
            raise DomainError("cones do not cover the circle")
        return [Cone((math.cos(a), math.sin(a)), ha) for a in ang]
    if n == 3:
        count = count or 32
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        rho = np.sqrt(1 - z**2)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        axes = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
        if half_angle is None:
            probe = np.random.default_rng(0).standard_normal((20000, 3))
            probe /= np.linalg.norm(probe, axis=1, keepdims=True)
            cover = float(np.max(np.arccos(np.clip(np.max(probe @ axes.T, axis=1), -1, 1))))
            half_angle = min(cover + math.radians(5.0), math.radians(80.0))
        return [Cone(tuple(a), half_angle) for a in axes]
    raise DomainError("cone decompositions are provided for n <= 3")


def cone_cutoff(inner, outer, grid, r0=None, s=1.5):
    """Multiplier ``phi(xi)``: 1 on ``inner`` for ``|xi| >= r0``, 0 outside ``outer``.

    The angular and radial transitions are Gevrey smooth steps; the radial
    factor vanishes for ``|xi| <= r0/2``.  ``r0`` defaults to 8 shell widths.
    """
    check_nested(inner, outer)
    xi = grid.freq_mesh()
    r = np.linalg.norm(xi, axis=-1)
    if r0 is None:
        r0 = 8.0 * shell_width(grid)
    ang = outer.angle_to(xi)
    t_ang = (outer.half_angle - ang) / (outer.half_angle - inner.half_angle)
    t_rad = (r - r0 / 2.0) / (r0 / 2.0)
    vals = gevrey_step(t_ang, s) * gevrey_step(t_rad, s)
    vals = np.where(r > 0, vals, 0.0)
    return GridField(vals, grid, FREQUENCY)


def apply_multiplier(phi, u):
    """Transform of ``phi(D) u``: pointwise ``phi * u^``."""
    uh = fft_forward(u) if u.domain == SPACE else u
    return GridField(phi.values * uh.values, u.grid, FREQUENCY)


# ---------------------------------------------------------------------------
# settings, windows and psi
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassifierSettings:
    """Numerical knobs of the decay-law classifier.

    Attributes
    ----------
    p_sing : float
        Power-law order that separates "polynomial" from "exponential" decay
        on the band; maxima decaying no faster than ``|xi|^{-p_sing}`` are
        beaten by every envelope.
    trend_tol : float
        Relative change of the fitted rate across tails counted as a trend.
    k_min : float
        Outer-tail rate required for the Beurling verdict.
    n_shells : int
        Radial shells between ``band[0]`` and ``band[1]`` times the Nyquist radius.
    floor : float
        Shell maxima below ``floor * max|(psi u)^|`` are discarded as noise.
    margin : float
        Half-width of the inconclusive band around each threshold, relative.
    min_points : int
        Fewest lattice points a cone shell may hold.
    psi_floor_factor : float
        Shell maxima below this multiple of ``psi^(0) sup |u|`` (sup over
        the support of ``psi``) times the window's own relative transform
        level on the outer tail, ``max |psi^| / psi^(0)``, are discarded:
        decay beyond that level is not resolved by ``psi``.
    """

    p_sing: float = 3.0
    trend_tol: float = 0.15
    k_min: float = 3.0
    n_shells: int = 24
    band: tuple = (0.125, 0.5)
    floor: float = 1e-8
    margin: float = 0.1
    min_points: int = 32
    psi_floor_factor: float = 3.0

    def to_dict(self):
        return asdict(self)


DEFAULT_SETTINGS = ClassifierSettings()


def shell_width(grid, settings=DEFAULT_SETTINGS):
    nyq = min(grid.nyquist())
    lo, hi = settings.band
    return (hi - lo) * nyq / settings.n_shells


def choose_s(w, gamma, t_max, s_floor=1.25):
    """Gevrey index of the localising bump.

    ``s_max`` is the largest ``s`` with ``omega(t^gamma) t^{-1/s}`` decreasing
    on ``[e, t_max]``; the choice is ``s_max / 2``.  When that is not above 1
    the hypothesis fails for this ``gamma`` and the elliptic value
    ``gamma = 1`` is used with ``s = (1 + s_max) / 2``, floored at ``s_floor``.
    Returns ``(s, note)``.
    """

    def smax_for(g):
        t = np.geomspace(math.e, max(t_max, 10.0), 400)
        with np.errstate(divide="ignore"):
            lw = np.log(np.maximum(w(t**g), 1e-300))
        # local log-log slope of omega(t^g); need 1/s strictly above its sup
        slope = np.gradient(lw, np.log(t))
        top = float(np.max(slope[len(t) // 2:]))
        if top <= 0:
            return math.inf
        return 1.0 / top

    sm = smax_for(gamma)
    if sm / 2.0 > 1.0:
        return min(sm / 2.0, 4.0), ""
    sm1 = smax_for(1.0)
    s = max((1.0 + min(sm1, 4.0)) / 2.0, s_floor) if sm1 > 1.0 else s_floor
    note = (
        f"omega(t^gamma) = o(t^(1/s)) has no s > 1 for gamma = {gamma:.3g}; "
        f"using gamma = 1 (s = {s:.3g})"
    )
    return s, note


@dataclass(frozen=True)
class WindowGrid:
    """Window centres (tensor grid of cells) and the nominal bump radius.

    The default radius is ``coverage = 0.5`` times the cell width, so the
    support of ``psi`` stays inside the cell's own neighbourhood and a
    singularity is seen from its home window and at most the adjacent ones.
    """

    centers: tuple
    radius: float
    per_axis: tuple
    widths: tuple

    @classmethod
    def regular(cls, grid, per_axis=8, coverage=0.5):
        per = (per_axis,) * grid.n if isinstance(per_axis, int) else tuple(per_axis)
        if len(per) != grid.n:
            raise DomainError("per_axis must give one count per dimension")
        axes = []
        widths = []
        for L, o, k in zip(grid.lengths, grid.origin, per):
            h = L / k
            widths.append(h)
            axes.append(o + (np.arange(k) + 0.5) * h)
        centers = tuple(tuple(c) for c in itertools.product(*[a.tolist() for a in axes]))
        return cls(centers, coverage * min(widths), per, tuple(widths))

    @property
    def cell(self):
        return min(self.widths)

    def index_of(self, x):
        """Index of the window whose cell contains ``x``."""
        cs = np.asarray(self.centers)
        return int(np.argmin(np.max(np.abs(cs - np.asarray(x)) / np.asarray(self.widths), axis=1)))

    def cell_distance(self, i, j):
        """Chebyshev distance between two windows in cells."""
        a, b = np.asarray(self.centers[i]), np.asarray(self.centers[j])
        return int(round(float(np.max(np.abs(a - b) / np.asarray(self.widths)))))

    def to_dict(self):
        return {"per_axis": list(self.per_axis), "radius": self.radius, "widths": list(self.widths), "n_windows": len(self.centers)}


def window_radius(x0, radius, grid):
    """``radius`` shrunk so the ball around ``x0`` stays inside the box."""
    room = min(min(c - o, o + L - c) for c, o, L in zip(x0, grid.origin, grid.lengths))
    if room <= 0:
        raise DomainError(f"window centre {tuple(x0)} is not interior")
    return min(radius, room)


# ---------------------------------------------------------------------------
# shell statistics
# ---------------------------------------------------------------------------


class _ShellIndex:
    """Per-cone flat indices of lattice points, grouped by radial shell."""

    def __init__(self, grid, cones, settings):
        self.grid = grid
        self.settings = settings
        xi = grid.freq_mesh().reshape(-1, grid.n)
        r = np.linalg.norm(xi, axis=-1)
        nyq = min(grid.nyquist())
        lo, hi = settings.band[0] * nyq, settings.band[1] * nyq
        self.edges = np.linspace(lo, hi, settings.n_shells + 1)
        self.mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        shell = np.searchsorted(self.edges, r, side="right") - 1
        inband = (r >= lo) & (r < hi)
        self.xi = xi
        self.r = r
        self.groups = []
        self.counts = []
        for cone in cones:
            sel = np.nonzero(inband & cone.contains(xi))[0]
            sh = shell[sel]
            order = np.argsort(sh, kind="stable")
            sel, sh = sel[order], sh[order]
            counts = np.bincount(sh, minlength=settings.n_shells)
            self.groups.append((sel, np.concatenate([[0], np.cumsum(counts)])))
            self.counts.append(counts)

    def resolved(self, ci):
        return int(np.min(self.counts[ci])) >= self.settings.min_points

    def shell_reduce(self, ci, values, fn=np.min):
        """Per-shell reduction of a per-point array (NaN for empty shells)."""
        sel, starts = self.groups[ci]
        vals = values[sel]
        out = np.full(len(starts) - 1, math.nan)
        for k in range(len(starts) - 1):
            a, b = starts[k], starts[k + 1]
            if b > a:
                out[k] = fn(vals[a:b])
        return out

    def maxima(self, ci, F):
        """Shell maxima and the flat index of each maximiser."""
        sel, starts = self.groups[ci]
        vals = F[sel]
        M = np.zeros(len(starts) - 1)
        idx = np.zeros(len(starts) - 1, dtype=int)
        for k in range(len(starts) - 1):
            a, b = starts[k], starts[k + 1]
            if b > a:
                j = a + int(np.argmax(vals[a:b]))
                M[k] = vals[j]
                idx[k] = sel[j]
        return M, idx


@dataclass
class DecayFit:
    """Regression of ``log M`` against ``-omega(|P|^{1/m})`` over radial shells.

    ``exponents`` holds ``omega(|P(xi*)|^{1/m})`` at the shell-max points.
    The regression abscissa ``fit_exponents`` is the smallest exponent on each
    cone shell: any envelope ``C exp(-k omega(|P|^{1/m}))`` bounds the shell
    maximum by ``C exp(-k e_min)``, and unlike the argmax value it is monotone
    in the radius when ``|P|`` is anisotropic across the cone.

    ``k_fit`` and ``log_C`` describe the full window; ``tail_k`` holds the
    nested-tail refits (outermost last) and ``tail_kappa`` the same rates with
    the ``|xi|^{-p_sing}`` rate removed.
    """

    cone: dict
    radii: list
    maxima: list
    exponents: list
    fit_exponents: list
    k_fit: float
    log_C: float
    residual: float
    tail_k: list
    tail_kappa: list
    tail_poly: list
    trend: str
    below_floor: bool = False
    zero: bool = False

    def to_dict(self):
        return asdict(self)


def _slope(x, y):
    if len(x) < 2 or np.ptp(x) == 0:
        return math.nan, math.nan, math.nan
    b, a = np.polyfit(x, y, 1)
    res = float(np.max(np.abs(y - (b * x + a))))
    return float(b), float(a), res


def _tails(n_valid, n_shells):
    """Start indices of the three nested tails over the valid shell range."""
    return [0, n_shells // 3, (2 * n_shells) // 3]


def fit_decay(radii, M, e, cone, settings, floor, e_star=None):
    """Upper-envelope fit of shell maxima against the shell exponents ``e``.

    The maxima are replaced by their reverse cumulative maximum (sidelobe
    zeros of the window transform would otherwise read as decay), then
    ``-log M`` is regressed on ``e`` over three nested outer tails.  The
    polynomial rate subtracted on each tail is ``p_sing`` times the slope of
    ``log |xi|`` against ``e``.
    """
    M = np.asarray(M, dtype=float)
    e = np.asarray(e, dtype=float)
    lr = np.log(np.asarray(radii, dtype=float))
    e_star = list(e) if e_star is None else list(e_star)
    n = len(M)
    valid = M > floor
    if not np.any(valid):
        return DecayFit(cone, list(radii), M.tolist(), e_star, list(e), math.inf, math.nan, 0.0, [], [], [], "below_floor", True, False)
    last = int(np.nonzero(valid)[0][-1])
    starts = _tails(last + 1, n)
    below = last < starts[-1] + 3
    env = np.maximum.accumulate(np.where(valid, M, 0.0)[::-1])[::-1]
    upto = last + 1
    ks, kp, kap = [], [], []
    for s0 in starts:
        sl = slice(s0, upto)
        if upto - s0 < 3:
            ks.append(math.nan)
            kp.append(math.nan)
            kap.append(math.nan)
            continue
        k, _, _ = _slope(e[sl], -np.log(env[sl]))
        g, _, _ = _slope(e[sl], lr[sl])
        poly = settings.p_sing * g if math.isfinite(g) else math.nan
        ks.append(k)
        kp.append(poly)
        kap.append(k - poly)
    k_all, a_all, res = _slope(e[:upto], -np.log(env[:upto]))
    trend = _trend(kap, settings)
    return DecayFit(cone, list(radii), M.tolist(), e_star, list(e), k_all, -a_all if math.isfinite(a_all) else math.nan, res, ks, kap, kp, trend, below, False)


def _trend(kap, settings):
    finite = [v for v in kap if math.isfinite(v)]
    if len(finite) < 2:
        return "undetermined"
    first, last = finite[0], finite[-1]
    scale = max(abs(first), abs(last), 1e-12)
    change = (last - first) / scale
    if change > settings.trend_tol:
        return "increasing"
    if change < -settings.trend_tol:
        return "decreasing"
    return "stable"


def decide(fit, mode, settings):
    """Map a :class:`DecayFit` to a classification label.

    The outer-tail excess rate ``kappa`` decides singular versus regular; the
    Beurling label additionally needs an increasing rate that reaches ``k_min``.
    In Beurling mode a cell without that evidence is inconclusive, since a
    finite band cannot show that some envelope ``exp(-omega/k)`` fails.
    """
    if fit.zero or fit.below_floor:
        # the maxima fall under the noise floor before the outer tail
        return REGULAR_BEURLING
    kap = [v for v in fit.tail_kappa if math.isfinite(v)]
    if not kap:
        return INCONCLUSIVE
    k3 = kap[-1]
    band = settings.margin * max(abs(fit.tail_poly[-1]), 1e-12)
    if k3 <= -band:
        return SINGULAR
    if k3 < band:
        return INCONCLUSIVE
    k_out = fit.tail_k[-1]
    if fit.trend == "increasing" and k_out >= settings.k_min * (1 + settings.margin):
        return REGULAR_BEURLING
    if _mode(mode) == ROUMIEU:
        return REGULAR_ROUMIEU
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass
class Classification:
    label: str
    mode: str
    fit: DecayFit
    x0: tuple
    s: float
    psi_radius: float
    note: str = ""

    @property
    def regular(self):
        return is_regular(self.label, self.mode)

    @property
    def singular(self):
        return is_singular(self.label, self.mode)

    def to_dict(self, curves=False):
        fit = self.fit.to_dict()
        if not curves:
            for key in ("radii", "maxima", "exponents"):
                fit.pop(key)
        return {
            "label": self.label,
            "mode": self.mode,
            "x0": list(self.x0),
            "s": self.s,
            "psi_radius": self.psi_radius,
            "note": self.note,
            "fit": fit,
        }


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    vol: float
    floor: float


class _Localiser:
    """Cached ``|(psi u)^|`` per window plus the shared shell index."""

    def __init__(self, u, P, w, cones, settings, s, radius):
        if u.domain != SPACE:
            raise DomainError("wave-front estimation expects a space-domain field")
        self.u = u
        self.P = P
        self.w = w
        self.cones = cones
        self.settings = settings
        self.s = s
        self.radius = radius
        self.index = _ShellIndex(u.grid, cones, settings)
        self.m = P.degree
        self.absP = np.abs(P(self.index.xi))
        self.umax = float(np.max(np.abs(u.values))) if u.values.size else 0.0
        self._conj = {}
        self._tables = {}
        self._psi_level = {}
        self.set_weight(w)

    def set_weight(self, w):
        """Switch the envelope weight (the spectra and shells are kept)."""
        self.w = w
        self.e_all = np.asarray(w(self.absP ** (1.0 / self.m)), dtype=float)
        self._efit = {}
        self._conj = {}
        self._tables = {}

    def e_fit(self, ci):
        if ci not in self._efit:
            self._efit[ci] = self.index.shell_reduce(ci, self.e_all, np.min)
        return self._efit[ci]

    def shell_absP(self, ci):
        """Smallest ``|P|`` on each shell of cone ``ci`` (the point where ``e_fit`` is taken)."""
        key = ("absP", ci)
        if key not in self._efit:
            self._efit[key] = self.index.shell_reduce(ci, self.absP, np.min)
        return self._efit[key]

    def iterate_table(self, ci, lam, N_max):
        """``max_N (N log|P| - lam phi*(N m / lam))`` and its maximiser, per shell."""
        Ns = np.arange(N_max + 1)
        phis = self.conjugates(Ns * self.m, lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = np.log(self.shell_absP(ci))
        tab = Ns[None, :] * logp[:, None] - lam * phis[None, :]
        tab[~np.isfinite(logp)] = -np.inf
        best = np.argmax(tab, axis=1)
        return tab[np.arange(len(logp)), best], best

    def iterate_stack(self, ci, lams, N_max):
        """:meth:`iterate_table` for every ``lam``, stacked row-wise."""
        key = (ci, tuple(float(v) for v in lams), int(N_max))
        if key not in self._tables:
            rows = [self.iterate_table(ci, lam, N_max) for lam in lams]
            self._tables[key] = (np.stack([r[0] for r in rows]), np.stack([r[1] for r in rows]))
        return self._tables[key]

    def conjugates(self, s, lam):
        """``phi*(s / lam)``, cached per ``lam`` (the tables are shared by all cells)."""
        key = (float(lam), len(s))
        if key not in self._conj:
            self._conj[key] = conjugate_values(self.w, np.asarray(s, dtype=float) / lam)[0]
        return self._conj[key]

    def psi_level(self, r):
        """Largest ``|psi^| / psi^(0)`` over the outer third of the band, per radius."""
        if r not in self._psi_level:
            g = self.u.grid
            c = tuple(o + L / 2 for o, L in zip(g.origin, g.lengths))
            F = np.abs(fft_forward(make_bump(c, r, self.s, g, fit=False).field).values).reshape(-1)
            outer = self.index.r >= self.index.edges[(2 * self.settings.n_shells) // 3]
            outer &= self.index.r < self.index.edges[-1]
            self._psi_level[r] = float(np.max(F[outer]) / np.max(F))
        return self._psi_level[r]

    def spectrum(self, x0):
        """``|(psi u)^|`` on the flattened lattice, the mass of ``psi`` and the noise floor."""
        r = window_radius(x0, self.radius, self.u.grid)
        psi = make_bump(x0, r, self.s, self.u.grid, fit=False)
        prod = GridField(psi.values * self.u.values, self.u.grid, SPACE)
        F = np.abs(fft_forward(prod).values).reshape(-1)
        vol = float(np.sum(psi.values.real)) * self.u.grid.cell_volume
        # leakage of psi's own transform scales with |u| where psi lives,
        # not with the peak of (psi u)^, which is small when u vanishes
        # over most of the window
        on = psi.values.real > 0
        uloc = float(np.max(np.abs(self.u.values[on]))) if np.any(on) else 0.0
        floor = max(self.settings.floor * self.umax * vol, self.settings.psi_floor_factor * self.psi_level(r) * uloc * vol)
        return Spectrum(F, vol, floor)

    def classify(self, spec, ci, mode, x0):
        F, vol = spec.values, spec.vol
        cone = self.cones[ci]
        if not self.index.resolved(ci):
            raise ResolutionError(
                f"cone {cone.axis} has fewer than {self.settings.min_points} lattice points in some shell"
            )
        M, idx = self.index.maxima(ci, F)
        e_star = self.e_all[idx].tolist()
        e = self.e_fit(ci)
        ref = self.umax * vol
        fmax = float(np.max(F)) if F.size else 0.0
        if ref == 0 or fmax <= 1e-13 * ref:
            fit = DecayFit(cone.to_dict(), self.index.mid.tolist(), M.tolist(), e_star, e.tolist(), math.inf, math.nan, 0.0, [], [], [], "zero", False, True)
            return Classification(REGULAR_BEURLING, mode, fit, tuple(x0), self.s, self.radius, "field vanishes on the window")
        fit = fit_decay(self.index.mid, M, e, cone.to_dict(), self.settings, spec.floor, e_star)
        return Classification(decide(fit, mode, self.settings), mode, fit, tuple(x0), self.s, self.radius)


def _defaults(u, P, w, s, psi_radius, gamma, windows=None):
    if psi_radius is None:
        psi_radius = (windows or WindowGrid.regular(u.grid)).radius
    note = ""
    if s is None:
        if gamma is None:
            from .hypo import estimate_gamma

            gamma = estimate_gamma(P).value
        s, note = choose_s(w, gamma, max(u.grid.nyquist()))
    return s, psi_radius, note


def classify_direction(u, x0, cone, P, w, mode=ROUMIEU, psi_radius=None, s=None, gamma=None, settings=DEFAULT_SETTINGS):
    """Classify ``(x0, cone)`` for the field ``u``.

    ``psi_radius`` defaults to half the default window spacing; ``s`` to
    :func:`choose_s`.
    """
    mode = _mode(mode)
    s, psi_radius, note = _defaults(u, P, w, s, psi_radius, gamma)
    loc = _Localiser(u, P, w, [cone], settings, s, psi_radius)
    out = loc.classify(loc.spectrum(x0), 0, mode, x0)
    if note:
        out.note = (out.note + "; " if out.note else "") + note
    return out


@dataclass
class WavefrontEstimate:
    """Per-(window, cone) labels; the singular set keeps its cone closures."""

    mode: str
    windows: WindowGrid
    cones: list
    labels: np.ndarray
    cells: list
    s: float
    psi_radius: float
    symbol: str
    weight: dict
    grid: dict
    notes: list = field(default_factory=list)

    def singular_cells(self):
        out = []
        for wi in range(self.labels.shape[0]):
            for ci in range(self.labels.shape[1]):
                if is_singular(self.labels[wi, ci], self.mode):
                    out.append((wi, ci))
        return out

    def singular_set(self):
        """``[(center, axis, half_angle)]`` for every singular cell."""
        return [
            (self.windows.centers[wi], self.cones[ci].axis, self.cones[ci].half_angle)
            for wi, ci in self.singular_cells()
        ]

    def label(self, wi, ci):
        return self.labels[wi, ci]

    def counts(self):
        vals, cnt = np.unique(self.labels, return_counts=True)
        return {str(v): int(c) for v, c in zip(vals, cnt)}

    def to_dict(self, curves=False):
        return {
            "mode": self.mode,
            "symbol": self.symbol,
            "weight": self.weight,
            "grid": self.grid,
            "windows": self.windows.to_dict(),
            "cones": [c.to_dict() for c in self.cones],
            "s": self.s,
            "psi_radius": self.psi_radius,
            "counts": self.counts(),
            "singular": [
                {"window": wi, "center": list(self.windows.centers[wi]), "cone": ci, "axis": list(self.cones[ci].axis)}
                for wi, ci in self.singular_cells()
            ],
            "cells": [c if curves else _strip(c) for c in self.cells],
            "notes": self.notes,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def table_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        n = len(self.windows.centers[0])
        wr.writerow(["window"] + [f"x{j + 1}" for j in range(n)] + ["cone"] + [f"a{j + 1}" for j in range(n)] + ["label", "k_fit", "kappa_outer", "trend"])
        for c in self.cells:
            wr.writerow(
                [c["window"]] + [repr(v) for v in c["center"]] + [c["cone"]] + [repr(v) for v in c["axis"]]
                + [c["label"], repr(c["k_fit"]), repr(c["kappa_outer"]), c["trend"]]
            )
        return buf.getvalue()

    def curves_csv(self):
        """Per-shell decay curves: window, cone, radius, shell max, exponent."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["window", "cone", "radius", "shell_max", "omega_P"])
        for c in self.cells:
            for r, m, e in zip(c.get("radii", []), c.get("maxima", []), c.get("exponents", [])):
                wr.writerow([c["window"], c["cone"], repr(r), repr(m), repr(e)])
        return buf.getvalue()


def _strip(c):
    return {k: v for k, v in c.items() if k not in ("radii", "maxima", "exponents")}


def estimate_wavefront(u, P, w, mode=ROUMIEU, windows=None, cones=None, psi_radius=None, s=None, gamma=None, settings=DEFAULT_SETTINGS):
    """Classify every (window, cone) cell; resolution failures become inconclusive."""
    mode = _mode(mode)
    windows = windows or WindowGrid.regular(u.grid)
    cones = cones or default_cones(u.grid.n)
    s, psi_radius, note = _defaults(u, P, w, s, psi_radius, gamma, windows)
    loc = _Localiser(u, P, w, cones, settings, s, psi_radius)
    labels = np.empty((len(windows.centers), len(cones)), dtype=object)
    cells = []
    for wi, x0 in enumerate(windows.centers):
        spec = loc.spectrum(x0)
        for ci, cone in enumerate(cones):
            try:
                c = loc.classify(spec, ci, mode, x0)
                lab, fit = c.label, c.fit
            except ResolutionError as exc:
                lab, fit = INCONCLUSIVE, None
                note_c = str(exc)
            labels[wi, ci] = lab
            cell = {
                "window": wi,
                "center": list(x0),
                "cone": ci,
                "axis": list(cone.axis),
                "label": lab,
                "k_fit": fit.tail_k[-1] if fit and fit.tail_k else (math.inf if fit else math.nan),
                "kappa_outer": fit.tail_kappa[-1] if fit and fit.tail_kappa else (math.inf if fit else math.nan),
                "trend": fit.trend if fit else "unresolved",
            }
            if fit is not None:
                cell["radii"], cell["maxima"], cell["exponents"] = fit.radii, fit.maxima, fit.exponents
            else:
                cell["note"] = note_c
            cells.append(cell)
    notes = [note] if note else []
    return WavefrontEstimate(mode, windows, list(cones), labels, cells, s, psi_radius, P.to_literal(), _wdict(w), u.grid.to_dict(), notes)


def _wdict(w):
    return w.to_dict() if hasattr(w, "to_dict") else {"weight": repr(w)}


# ---------------------------------------------------------------------------
# iterate-family criterion
# ---------------------------------------------------------------------------


def _iterate_classify(F, ci, loc, settings, lambdas, N_max, floor):
    """Capped iterate-family test on the cone shells of one window.

    For each ``lam`` the shell curve
    ``G(lam) = max_shell |F| sup_{N<=N_max} |P|^N e^{-lam phi*(N m/lam)} (1+|xi|)^ell``
    is formed with ``ell = p_sing``; ``|P|`` is taken at its shell minimum,
    the same point at which the decay fit reads ``omega``.  ``lambda_crit``
    is the largest ``lam`` for which ``G`` does not increase along a tail.
    Returns the critical values per tail and the maximising ``N`` at the
    largest critical ``lam``.
    """
    M, _ = loc.index.maxima(ci, F)
    with np.errstate(divide="ignore"):
        base = np.where(M > floor, np.log(np.maximum(M, 1e-300)), -np.inf)
    base = base + settings.p_sing * np.log1p(loc.index.mid)
    n = len(M)
    has = np.isfinite(base)
    upto = int(np.nonzero(has)[0][-1]) + 1 if np.any(has) else 0
    e = loc.e_fit(ci)
    lams = np.asarray(lambdas, dtype=float)
    T, best = loc.iterate_stack(ci, lams, N_max)
    curves = T + base[None, :]
    crit = []
    for s0 in _tails(upto, n):
        if upto - s0 < 3:
            crit.append(math.nan)
            continue
        x = e[s0:upto] - np.mean(e[s0:upto])
        Y = curves[:, s0:upto]
        ok = np.all(np.isfinite(Y), axis=1)
        slopes = np.full(len(lams), math.inf)
        if np.any(ok):
            slopes[ok] = (Y[ok] - Y[ok].mean(axis=1, keepdims=True)) @ x / float(x @ x)
        crit.append(_root(lams, slopes))
    finite = [c for c in crit if math.isfinite(c)]
    at = float(np.max(finite)) if finite else lams[0]
    li = int(np.clip(np.searchsorted(lams, at), 0, len(lams) - 1))
    sat = int(np.max(best[li, :upto][has[:upto]])) if upto else 0
    return crit, sat


def _root(lams, slopes):
    """Largest ``lam`` with non-increasing curve, interpolated between grid nodes."""
    ok = np.nonzero(slopes <= 0)[0]
    if len(ok) == 0:
        return 0.0
    i = int(ok[-1])
    if i == len(lams) - 1:
        return float(lams[-1])
    a, b = slopes[i], slopes[i + 1]
    t = a / (a - b) if b != a else 0.0
    return float(lams[i] + t * (lams[i + 1] - lams[i]))


def _iterate_label(crit, fit, mode, settings, lambdas):
    if fit.zero or fit.below_floor:
        return REGULAR_BEURLING
    vals = [v for v in crit if math.isfinite(v)]
    if not vals:
        return INCONCLUSIVE
    lam_lo = lambdas[0]
    c3 = vals[-1]
    if c3 <= 0.0:
        return SINGULAR
    if c3 <= lam_lo * (1 + settings.margin):
        return INCONCLUSIVE
    pseudo = replace(fit, tail_kappa=list(crit), tail_k=[c + p for c, p in zip(crit, fit.tail_poly)], trend=_trend(crit, settings))
    return decide(pseudo, mode, settings)


@dataclass
class CrosscheckReport:
    omega_label: str
    iterate_label: str
    agree: bool
    counted: bool
    saturation_N: int
    saturated: bool
    lambda_crit: list
    kappa: list

    def to_dict(self):
        return asdict(self)


def default_lambdas():
    return np.geomspace(0.01, 20.0, 121).tolist()


def _crosscheck(loc, spec, ci, x0, mode, lambdas, N_max):
    settings = loc.settings
    c = loc.classify(spec, ci, mode, x0)
    if c.fit.zero:
        return CrosscheckReport(c.label, REGULAR_BEURLING, True, True, 0, False, [], [])
    crit, sat = _iterate_classify(spec.values, ci, loc, settings, lambdas, N_max, spec.floor)
    il = _iterate_label(crit, c.fit, mode, settings, lambdas)
    counted = INCONCLUSIVE not in (c.label, il)
    agree = c.label == il or (
        is_singular(c.label, mode) == is_singular(il, mode) and is_regular(c.label, mode) == is_regular(il, mode)
    )
    return CrosscheckReport(c.label, il, bool(agree), counted, sat, sat >= N_max, crit, c.fit.tail_kappa)


def crosscheck_criteria(u, x0, cone, P, w, mode=ROUMIEU, psi_radius=None, s=None, gamma=None, N_max=64, lambdas=None, settings=DEFAULT_SETTINGS):
    """Compare the omega-decay criterion with the capped iterate-family criterion.

    Both read the same localised transform.  The iterate criterion takes
    ``sup_{N <= N_max} |P|^N |(psi u)^| e^{-lam phi*(N m/lam)} (1+|xi|)^ell``
    on each shell and reports the largest ``lam`` for which the
    shell curve does not increase; its verdict uses the same rules as the
    decay fit.  Agreement is only counted when neither label is inconclusive.
    """
    mode = _mode(mode)
    lambdas = lambdas or default_lambdas()
    s, psi_radius, _ = _defaults(u, P, w, s, psi_radius, gamma)
    loc = _Localiser(u, P, w, [cone], settings, s, psi_radius)
    return _crosscheck(loc, loc.spectrum(x0), 0, x0, mode, lambdas, N_max)


@dataclass
class CrosscheckSummary:
    reports: list
    counted: int
    disagreements: int
    saturated: int

    @property
    def disagreement_rate(self):
        return self.disagreements / self.counted if self.counted else 0.0

    def to_dict(self):
        return {
            "counted": self.counted,
            "disagreements": self.disagreements,
            "disagreement_rate": self.disagreement_rate,
            "saturated": self.saturated,
            "cells": self.reports,
        }


def crosscheck_field(u, P, w, mode=ROUMIEU, windows=None, cones=None, psi_radius=None, s=None, gamma=None, N_max=64, lambdas=None, settings=DEFAULT_SETTINGS, cells=None):
    """:func:`crosscheck_criteria` over every (window, cone) cell, or the listed ``cells``."""
    mode = _mode(mode)
    lambdas = lambdas or default_lambdas()
    windows = windows or WindowGrid.regular(u.grid)
    cones = cones or default_cones(u.grid.n)
    s, psi_radius, _ = _defaults(u, P, w, s, psi_radius, gamma, windows)
    loc = _Localiser(u, P, w, cones, settings, s, psi_radius)
    wanted = None if cells is None else {tuple(c) for c in cells}
    out, counted, bad, sat = [], 0, 0, 0
    for wi, x0 in enumerate(windows.centers):
        if wanted is not None and not any(c[0] == wi for c in wanted):
            continue
        spec = loc.spectrum(x0)
        for ci in range(len(cones)):
            if wanted is not None and (wi, ci) not in wanted:
                continue
            try:
                r = _crosscheck(loc, spec, ci, x0, mode, lambdas, N_max)
            except ResolutionError:
                continue
            d = r.to_dict()
            d.update(window=wi, cone=ci)
            out.append(d)
            counted += r.counted
            bad += r.counted and not r.agree
            sat += r.saturated
    return CrosscheckSummary(out, counted, int(bad), sat)


# ---------------------------------------------------------------------------
# monotonicity checks
# ---------------------------------------------------------------------------


@dataclass
class MonotonicityReport:
    holds: bool
    violations: list
    compared: int

    def to_dict(self):
        return asdict(self)


def cutoff_monotonicity_check(u, psi, P, w, mode=ROUMIEU, windows=None, cones=None, s=None, gamma=None, settings=DEFAULT_SETTINGS, base=None):
    """Singular cells of ``psi u`` must be singular cells of ``u`` (inconclusive excluded)."""
    pv = psi.values if hasattr(psi, "values") else np.asarray(psi)
    pv = pv.values if isinstance(pv, GridField) else pv
    cut = GridField(np.asarray(pv) * u.values, u.grid, SPACE)
    e_u = base or estimate_wavefront(u, P, w, mode, windows, cones, s=s, gamma=gamma, settings=settings)
    e_c = estimate_wavefront(cut, P, w, mode, e_u.windows, e_u.cones, s=e_u.s, settings=settings)
    viol = []
    compared = 0
    for wi in range(e_c.labels.shape[0]):
        for ci in range(e_c.labels.shape[1]):
            a, b = e_c.labels[wi, ci], e_u.labels[wi, ci]
            if INCONCLUSIVE in (a, b):
                continue
            compared += 1
            if is_singular(a, mode) and not is_singular(b, mode):
                viol.append({"window": wi, "cone": ci, "cut": a, "field": b})
    return MonotonicityReport(not viol, viol, compared)


@dataclass(frozen=True)
class PowerWeight:
    """``sigma(t) = omega(t)^theta``, the Beurling-scan weights."""

    base: object
    theta: float

    def __call__(self, t):
        return np.asarray(self.base(t), dtype=float) ** self.theta

    def phi(self, u):
        return np.asarray(self.base.phi(u), dtype=float) ** self.theta

    def to_dict(self):
        return {"family": "power_of", "theta": self.theta, "base": _wdict(self.base)}

    def describe(self):
        return f"({self.base.describe()})^{self.theta:g}"


@dataclass
class ScanReport:
    thetas: list
    labels: list
    regular: list
    monotone: bool
    theta_star: float | None
    kappa: list

    def to_dict(self):
        return asdict(self)


def beurling_scale_scan(u, x0, cone, P, w, theta_grid, psi_radius=None, s=None, gamma=None, settings=DEFAULT_SETTINGS):
    """Beurling classification under ``omega^theta`` for each ``theta``.

    Regularity must be downward closed in ``theta``; ``theta_star`` is the
    smallest ``theta`` at which the cell stops being regular.
    """
    thetas = sorted(float(t) for t in theta_grid)
    if any(not 0.0 < t <= 1.0 for t in thetas):
        raise DomainError("theta values must lie in (0, 1]")
    s, psi_radius, _ = _defaults(u, P, w, s, psi_radius, gamma)
    loc = _Localiser(u, P, w, [cone], settings, s, psi_radius)
    spec = loc.spectrum(x0)
    labels, kap = [], []
    for th in thetas:
        loc.set_weight(PowerWeight(w, th))
        c = loc.classify(spec, 0, BEURLING, x0)
        labels.append(c.label)
        kap.append(c.fit.tail_kappa[-1] if c.fit.tail_kappa else math.inf)
    reg = [lab == REGULAR_BEURLING for lab in labels]
    decided = [(t, r) for t, r, lab in zip(thetas, reg, labels) if lab != INCONCLUSIVE]
    monotone = all(not (r_hi and not r_lo) for (t_lo, r_lo), (t_hi, r_hi) in itertools.combinations(decided, 2))
    star = next((t for t, r in decided if not r), None)
    return ScanReport(thetas, labels, reg, bool(monotone), star, kap)


# ---------------------------------------------------------------------------
# prescribed wave-front sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrescribedSet:
    """Finite list of ``(x_k, theta_k)``; the series cycles through it."""

    points: tuple
    directions: tuple

    def __post_init__(self):
        if len(self.points) != len(self.directions):
            raise DomainError("points and directions must pair up")
        dirs = []
        for d in self.directions:
            d = np.asarray(d, dtype=float)
            nrm = float(np.linalg.norm(d))
            if nrm == 0:
                raise DomainError("directions must be nonzero")
            dirs.append(tuple((d / nrm).tolist()))
        object.__setattr__(self, "directions", tuple(dirs))
        object.__setattr__(self, "points", tuple(tuple(float(v) for v in p) for p in self.points))

    def __len__(self):
        return len(self.points)

    def term(self, k):
        """``(x_k, theta_k)`` for ``k >= 1`` under cycling: every element recurs infinitely often."""
        i = (k - 1) % len(self.points)
        return self.points[i], self.directions[i]

    def terms(self, k, schedule="all"):
        """Elements attached to index ``k``.

        ``"cycle"`` walks through the list one element per index.  ``"all"``
        attaches every element to every index, i.e. the field is the sum of
        the single-element series; each element is then the limit of the
        whole sequence of its terms, and on a finite band every element keeps
        a carrier in every tail instead of one in ``len(S)``.
        """
        if schedule == "cycle":
            return [self.term(k)]
        if schedule == "all":
            return list(zip(self.points, self.directions))
        raise DomainError(f"unknown schedule {schedule!r}")

    @classmethod
    def parse(cls, text):
        """One ``x1 x2 ... ; t1 t2 ...`` entry per line; ``#`` starts a comment."""
        pts, dirs = [], []
        n = None
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ";" not in line:
                raise ParseError("expected 'x1 x2 ... ; t1 t2 ...'", raw, ln, 1)
            a, b = line.split(";", 1)
            try:
                x = [float(v) for v in a.split()]
            except ValueError:
                raise ParseError("non-numeric point coordinate", raw, ln, 1)
            try:
                t = [float(v) for v in b.split()]
            except ValueError:
                raise ParseError("non-numeric direction component", raw, ln, raw.index(";") + 2)
            if len(x) != len(t) or not x:
                raise ParseError("point and direction lengths differ", raw, ln, raw.index(";") + 1)
            if n is not None and len(x) != n:
                raise ParseError("inconsistent dimension", raw, ln, 1)
            n = len(x)
            pts.append(x)
            dirs.append(t)
        return cls(tuple(pts), tuple(dirs))

    def to_text(self):
        return "".join(
            " ".join(repr(v) for v in p) + " ; " + " ".join(repr(v) for v in d) + "\n"
            for p, d in zip(self.points, self.directions)
        )


@dataclass
class ConstructionInfo:
    K_requested: int
    K_effective: int
    capped: bool
    amplitudes: list
    mode: str
    alpha_rule: str
    phi_radius: float
    phi_s: float
    schedule: str
    warnings: list

    def to_dict(self):
        return asdict(self)


def series_amplitude(w, d, m, k, mode):
    """Coefficient of the ``k``-th term.

    Beurling: ``exp(-sigma(k^{d/m}))`` with ``sigma(t) = omega(t^{3/2})``.
    Roumieu: ``exp(-(sigma/alpha)(k^{d/m}) log k)`` with
    ``alpha(t) = sigma(t) / log(e + t)``.
    """
    t = k ** (d / m)
    sig = float(w(t**1.5))
    if _mode(mode) == BEURLING:
        return math.exp(-sig)
    if sig == 0.0:
        return 1.0
    alpha = sig / math.log(math.e + t)
    return math.exp(-(sig / alpha) * math.log(k))


def construct_prescribed(S, d, m, w, mode, K_terms, grid, phi_radius=None, phi_s=None, schedule="all", return_info=False):
    """Modulated bump series with wave-front set ``S``.

    ``u(x) = sum_k a_k phi(k (x - x_k)) exp(i k^3 <x, theta_k>)`` where
    ``phi`` is a Gevrey bump with unit integral and ``a_k`` follows
    :func:`series_amplitude`; ``schedule`` picks the elements attached to
    each ``k`` (see :meth:`PrescribedSet.terms`).  Terms whose carrier
    ``k^3`` exceeds half the Nyquist radius, or whose bump ``phi(k .)`` has
    fewer than 4 cells of radius, are dropped; the effective cap is recorded.
    ``phi_radius`` defaults to a quarter of the shortest box side.
    """
    mode = _mode(mode)
    if not 0 < d < m:
        raise DomainError("need 0 < d < m (hypoelliptic, not elliptic)")
    if K_terms < 1:
        raise DomainError("K_terms must be positive")
    for p in S.points:
        if len(p) != grid.n:
            raise DomainError("prescribed points do not match the grid dimension")
        for c, o, L in zip(p, grid.origin, grid.lengths):
            if not o <= c <= o + L:
                raise DomainError(f"prescribed point {p} lies outside the grid box")
    h = max(grid.spacing)
    phi_radius = phi_radius if phi_radius is not None else 0.125 * min(grid.lengths)
    phi_s = phi_s if phi_s is not None else 1.5
    half_band = 0.75 * min(grid.nyquist())
    k_cap = int(math.floor(half_band ** (1.0 / 3.0) + 1e-9))
    k_cap = min(k_cap, int(phi_radius / (4 * h)))
    K_eff = min(K_terms, max(k_cap, 0))
    warnings = []
    if K_terms < 16:
        warnings.append("fewer than 16 terms: the series is a short truncation")
    if K_eff < K_terms:
        warnings.append(f"K_terms capped at {K_eff}: k^3 must stay inside the resolvable band")
    x = grid.mesh()
    vals = np.zeros(grid.shape, dtype=complex)
    amps = []
    q = 1.0 / (phi_s - 1.0)
    base_norm = None
    if len(S):
        # normalise phi to unit integral on a fine 1-D radial quadrature
        rr = np.linspace(0.0, 1.0, 20001)
        prof = gevrey_profile(rr, q)
        if grid.n == 1:
            base_norm = 2 * np.trapezoid(prof, rr) * phi_radius
        elif grid.n == 2:
            base_norm = 2 * math.pi * np.trapezoid(prof * rr, rr) * phi_radius**2
        else:
            base_norm = 4 * math.pi * np.trapezoid(prof * rr**2, rr) * phi_radius**3
        for k in range(1, K_eff + 1):
            a = series_amplitude(w, d, m, k, mode)
            amps.append(a)
            for xk, th in S.terms(k, schedule):
                dist = np.linalg.norm(k * (x - np.asarray(xk)), axis=-1) / phi_radius
                bump = gevrey_profile(dist, q) / base_norm
                phase = np.exp(1j * k**3 * (x @ np.asarray(th)))
                vals += a * bump * phase
    u = GridField(vals, grid, SPACE)
    info = ConstructionInfo(
        K_terms, K_eff, K_eff < K_terms, amps, mode, "alpha(t) = sigma(t)/log(e+t)", float(phi_radius), float(phi_s), schedule, warnings
    )
    return (u, info) if return_info else u


def series_transform_at(S, d, m, w, mode, K_eff, xi, phi_radius, phi_s, n, schedule="all"):
    """Continuum transform of the truncated series at frequencies ``xi``.

    Uses ``(phi(k(.-x_k)) e^{i k^3<., theta>})^(xi) = k^{-n} phi^((xi - k^3 theta)/k) e^{-i<x_k, xi - k^3 theta>}``
    with ``phi^`` computed by radial quadrature.
    """
    q = 1.0 / (phi_s - 1.0)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    out = np.zeros(xi.shape[0], dtype=complex)
    for k in range(1, K_eff + 1):
        a = series_amplitude(w, d, m, k, mode)
        for xk, th in S.terms(k, schedule):
            eta = (xi - k**3 * np.asarray(th)) / k
            out += a * k ** (-n) * _phi_hat(eta, phi_radius, q, n) * np.exp(-1j * (eta * k) @ np.asarray(xk))
    return out


def _phi_hat(eta, radius, q, n):
    """Transform of the unit-integral radial bump by direct quadrature."""
    m = 64
    g = np.linspace(-radius, radius, 2 * m + 1)
    h = g[1] - g[0]
    mesh = np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1).reshape(-1, n)
    prof = gevrey_profile(np.linalg.norm(mesh, axis=1) / radius, q)
    prof /= prof.sum() * h**n
    return (np.exp(-1j * eta @ mesh.T) @ prof) * h**n


@dataclass
class RoundTripReport:
    """Recovery of a prescribed set from a wave-front estimate.

    ``recovered[i]`` lists the singular cells within ``window_tol`` windows
    of ``x_i`` whose cone reaches within ``angle_tol`` of ``theta_i``;
    ``spurious`` lists singular cells farther than ``spread`` window cells
    or ``spread`` cone spacings from every element.
    """

    recovered: list
    spurious: list
    window_tol: int
    angle_tol_deg: float
    spread: int

    @property
    def passed(self):
        return all(self.recovered) and not self.spurious

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


def cone_gap(cone, theta):
    """Angle from ``theta`` to the closed cone (zero inside)."""
    return max(0.0, cone.axis_angle(theta) - cone.half_angle)


def cone_spacing(cones):
    """Smallest angle between two distinct cone axes."""
    best = math.pi
    for a, b in itertools.combinations(cones, 2):
        ang = a.axis_angle(b)
        if ang > 1e-9:
            best = min(best, ang)
    return best


def roundtrip_check(S, est, window_tol=1, angle_tol=math.radians(15.0), spread=2):
    """Compare the singular cells of ``est`` with the prescribed set ``S``."""
    wg, cones = est.windows, est.cones
    step = cone_spacing(cones)
    homes = [wg.index_of(p) for p in S.points]
    recovered = [[] for _ in S.points]
    spurious = []
    for wi, ci in est.singular_cells():
        explained = False
        for i, (home, th) in enumerate(zip(homes, S.directions)):
            dw = wg.cell_distance(wi, home)
            gap = cone_gap(cones[ci], th)
            if dw <= window_tol and gap <= angle_tol + 1e-9:
                recovered[i].append([int(wi), int(ci)])
            if dw <= spread and gap <= spread * step + 1e-9:
                explained = True
        if not explained:
            spurious.append([int(wi), int(ci)])
    return RoundTripReport(recovered, spurious, window_tol, math.degrees(angle_tol), spread)
