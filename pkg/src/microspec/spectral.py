"""Grid fields, Fourier transforms, iterate multipliers and Paley–Wiener sums.

Transforms follow ``f^(xi) = ∫ exp(-i<x, xi>) f(x) dx``: the discrete sum is
scaled by the cell volume and the origin phase is applied explicitly, so
values approximate the continuum transform.  Frequency-domain fields are
stored centred (ascending ``xi``), with ``xi_j = 2 pi k / (N_j dx_j)`` and
``k`` in ``[-N_j/2, N_j/2)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.special import logsumexp

from .errors import (
    AliasingError,
    DomainError,
    MagnitudeOverflowError,
    ResolutionError,
)
from .weights import conjugate_values

SPACE, FREQUENCY = "space", "frequency"
MAGIC = b"MSGF"
LOG_MAX = 700.0  # largest exponent handled before reporting overflow
NOISE_FLOOR = 1e-12


def workers():
    """FFT worker count from ``MICROSPEC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("MICROSPEC_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform box grid: ``x_j = origin_j + i * spacing_j`` for ``i < shape_j``."""

    shape: tuple
    spacing: tuple
    origin: tuple

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not 1 <= len(shape) <= 3:
            raise DomainError("grids must be 1-, 2- or 3-dimensional")
        for s in shape:
            if s < 8 or s & (s - 1):
                raise DomainError(f"grid sizes must be powers of two and >= 8, got {s}")
        if len(self.spacing) != len(shape) or len(self.origin) != len(shape):
            raise DomainError("spacing and origin must match the grid dimension")
        if any(h <= 0 for h in self.spacing):
            raise DomainError("spacing must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def box(cls, lo, hi, shape):
        """Cell-centred-free grid on ``[lo, hi)`` per axis (periodic convention)."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (len(shape),))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (len(shape),))
        spacing = tuple(((hi - lo) / np.asarray(shape)).tolist())
        return cls(tuple(shape), spacing, tuple(lo.tolist()))

    @property
    def n(self):
        return len(self.shape)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def lengths(self):
        return tuple(s * h for s, h in zip(self.shape, self.spacing))

    def axes(self):
        return [o + h * np.arange(s) for s, h, o in zip(self.shape, self.spacing, self.origin)]

    def mesh(self):
        """Coordinates, shape ``shape + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def freq_axes(self):
        return [
            2 * math.pi * np.arange(-s // 2, s // 2) / (s * h) for s, h in zip(self.shape, self.spacing)
        ]

    def freq_spacing(self):
        return tuple(2 * math.pi / (s * h) for s, h in zip(self.shape, self.spacing))

    def freq_mesh(self):
        return np.stack(np.meshgrid(*self.freq_axes(), indexing="ij"), axis=-1)

    def nyquist(self):
        return tuple(math.pi / h for h in self.spacing)

    def to_dict(self):
        return {"shape": list(self.shape), "spacing": list(self.spacing), "origin": list(self.origin)}


@dataclass(frozen=True)
class GridField:
    """Complex samples on a uniform box grid.

    For a space-domain field ``grid`` describes ``x``.  A frequency-domain
    field keeps the space grid it came from in ``grid`` and stores values on
    the centred frequency lattice of that grid.
    """

    values: np.ndarray = field(repr=False)
    grid: GridSpec
    domain: str = SPACE

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise DomainError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if self.domain not in (SPACE, FREQUENCY):
            raise DomainError(f"unknown domain tag {self.domain!r}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(fn(grid.mesh()), grid, SPACE)

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape, dtype=complex), grid, SPACE)

    @property
    def n(self):
        return self.grid.n

    @property
    def shape(self):
        return self.grid.shape

    @property
    def spacing(self):
        if self.domain == SPACE:
            return self.grid.spacing
        return self.grid.freq_spacing()

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def coordinates(self):
        return self.grid.mesh() if self.domain == SPACE else self.grid.freq_mesh()

    def with_values(self, values):
        return GridField(values, self.grid, self.domain)

    def l2_norm(self, box=None):
        """Riemann-sum ``L^2`` norm over ``box`` (list of ``(lo, hi)``) or the whole grid."""
        v = self.values
        if box is not None:
            v = v[box_mask(self.grid, box)]
        return float(np.sqrt(np.sum(np.abs(v) ** 2) * self.cell_volume))

    # -- serialisation --------------------------------------------------------
    def to_bytes(self):
        n = self.n
        head = MAGIC + struct.pack("<BBB", 1, n, 0 if self.domain == SPACE else 1)
        head += struct.pack(f"<{n}I", *self.shape)
        head += struct.pack(f"<{n}d", *self.grid.spacing)
        head += struct.pack(f"<{n}d", *self.grid.origin)
        return head + self.values.astype("<c8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != MAGIC:
            raise DomainError("not a grid-field file (bad magic)")
        version, n, tag = struct.unpack_from("<BBB", data, 4)
        if version != 1:
            raise DomainError(f"unsupported grid-field version {version}")
        off = 7
        shape = struct.unpack_from(f"<{n}I", data, off)
        off += 4 * n
        spacing = struct.unpack_from(f"<{n}d", data, off)
        off += 8 * n
        origin = struct.unpack_from(f"<{n}d", data, off)
        off += 8 * n
        count = int(np.prod(shape))
        vals = np.frombuffer(data, dtype="<c8", count=count, offset=off).reshape(shape)
        return cls(vals.astype(complex), GridSpec(shape, spacing, origin), SPACE if tag == 0 else FREQUENCY)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def slice_csv(self, axis=None, index=None):
        """CSV of a 1-D field or of one 2-D slice (``axis`` fixed at ``index``)."""
        coords = self.coordinates()
        vals = self.values
        if self.n == 3:
            axis = 2 if axis is None else axis
            index = self.shape[axis] // 2 if index is None else index
            vals = np.take(vals, index, axis=axis)
            coords = np.take(coords, index, axis=axis)
            coords = np.delete(coords, axis, axis=-1)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        k = coords.shape[-1]
        wr.writerow([f"x{j + 1}" for j in range(k)] + ["re", "im", "abs"])
        for c, v in zip(coords.reshape(-1, k), vals.reshape(-1)):
            wr.writerow([repr(float(t)) for t in c] + [repr(v.real), repr(v.imag), repr(abs(v))])
        return buf.getvalue()


def box_mask(grid, box):
    mesh = grid.mesh()
    mask = np.ones(grid.shape, dtype=bool)
    for j, (lo, hi) in enumerate(box):
        mask &= (mesh[..., j] >= lo) & (mesh[..., j] <= hi)
    return mask


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def _origin_phase(grid, sign):
    ph = np.zeros(grid.shape)
    for j, xi in enumerate(grid.freq_axes()):
        shape = [1] * grid.n
        shape[j] = -1
        ph = ph + (grid.origin[j] * xi).reshape(shape)
    return np.exp(sign * 1j * ph)


def fft_forward(f):
    """Approximate ``f^`` on the centred frequency lattice."""
    if f.domain != SPACE:
        raise DomainError("fft_forward expects a space-domain field")
    g = f.grid
    hat = sfft.fftshift(sfft.fftn(f.values, workers=workers())) * g.cell_volume
    return GridField(hat * _origin_phase(g, -1), g, FREQUENCY)


def fft_inverse(fh):
    """Inverse of :func:`fft_forward`."""
    if fh.domain != FREQUENCY:
        raise DomainError("fft_inverse expects a frequency-domain field")
    g = fh.grid
    vals = fh.values * _origin_phase(g, +1)
    out = sfft.ifftn(sfft.ifftshift(vals), workers=workers()) / g.cell_volume
    return GridField(out, g, SPACE)


def inner_band_mask(grid, fraction=0.5):
    """Frequencies with ``|xi_j| <= fraction * Nyquist_j`` on every axis."""
    mask = np.ones(grid.shape, dtype=bool)
    for j, (xi, nyq) in enumerate(zip(grid.freq_axes(), grid.nyquist())):
        shape = [1] * grid.n
        shape[j] = -1
        mask &= (np.abs(xi) <= fraction * nyq).reshape(shape)
    return mask


# ---------------------------------------------------------------------------
# iterates
# ---------------------------------------------------------------------------


def symbol_on_grid(P, grid):
    if P.n != grid.n:
        from .errors import DimensionMismatchError

        raise DimensionMismatchError(f"symbol is {P.n}-dimensional, grid is {grid.n}-dimensional")
    return P(grid.freq_mesh())


def _log_multiplier(P, grid, N):
    pv = symbol_on_grid(P, grid)
    with np.errstate(divide="ignore"):
        logmag = N * np.log(np.abs(pv))
    return logmag, N * np.angle(pv)


def _shell_of(grid, index):
    xi = grid.freq_mesh()[index]
    return float(np.linalg.norm(xi))


def apply_iterate(P, N, f):
    """``P(D)^N f`` as the multiplier ``P(xi)^N`` with log-magnitude accumulation."""
    N = int(N)
    if N < 0:
        raise DomainError("iterate order must be nonnegative")
    if N == 0:
        return f
    fh = fft_forward(f) if f.domain == SPACE else f
    logmag, phase = _log_multiplier(P, f.grid, N)
    with np.errstate(divide="ignore"):
        total = logmag + np.log(np.abs(fh.values))
    total = np.where(np.isnan(total), -np.inf, total)
    if np.max(total) > LOG_MAX:
        idx = np.unravel_index(np.argmax(total), total.shape)
        shell = _shell_of(f.grid, idx)
        raise MagnitudeOverflowError(
            f"|P|^{N} |f^| overflows at |xi| = {shell:.6g}", shell=shell
        )
    out = np.exp(total) * np.exp(1j * (phase + np.angle(fh.values)))
    res = GridField(out, f.grid, FREQUENCY)
    return fft_inverse(res) if f.domain == SPACE else res


@dataclass
class SeminormResult:
    value: float
    log_value: float
    argmax: int
    truncated: bool
    log_norms: list
    log_weights: list

    def to_dict(self):
        return {
            "value": self.value,
            "log_value": self.log_value,
            "argmax": self.argmax,
            "truncated": self.truncated,
            "log_norms": self.log_norms,
            "log_weights": self.log_weights,
        }


def iterate_log_norms(f, P, N_max, box=None):
    """``log ||P^j(D) f||_{2,K}`` for ``j = 0..N_max``.

    On the whole grid the norms come from Parseval in log space; on a
    sub-box each iterate is transformed back with a per-``j`` rescaling.
    """
    fh = fft_forward(f) if f.domain == SPACE else f
    g = f.grid
    pv = symbol_on_grid(P, g)
    with np.errstate(divide="ignore"):
        lp = np.log(np.abs(pv))
        lf = np.log(np.abs(fh.values))
    lf = np.where(np.isnan(lf), -np.inf, lf)
    out = []
    if box is None:
        dxi = float(np.prod(g.freq_spacing()))
        base = math.log(dxi) - g.n * math.log(2 * math.pi)
        for j in range(N_max + 1):
            a = 2 * (lf + (j * lp if j else 0.0))
            a = np.where(np.isnan(a), -np.inf, a)
            s = logsumexp(a)
            out.append(0.5 * (s + base) if np.isfinite(s) else -math.inf)
        return out
    mask = box_mask(g, box)
    ang = np.angle(fh.values)
    ph = np.angle(pv)
    for j in range(N_max + 1):
        t = lf + (j * lp if j else 0.0)
        t = np.where(np.isnan(t), -np.inf, t)
        shift = float(np.max(t))
        if not np.isfinite(shift):
            out.append(-math.inf)
            continue
        vals = np.exp(t - shift) * np.exp(1j * (ang + j * ph))
        sp = fft_inverse(GridField(vals, g, FREQUENCY)).values
        nrm = math.sqrt(float(np.sum(np.abs(sp[mask]) ** 2)) * g.cell_volume)
        out.append(math.log(nrm) + shift if nrm > 0 else -math.inf)
    return out


def iterate_seminorm(f, P, K, lam, w, N_max):
    """``sup_j ||P^j(D) f||_{2,K} exp(-lam phi*(j m / lam))`` for ``j <= N_max``.

    ``K`` is a list of ``(lo, hi)`` per axis or ``None`` for the whole grid.
    The argmax is reported; ``argmax == N_max`` sets ``truncated``.
    """
    if N_max < 8:
        raise DomainError("N_max must be at least 8")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    m = P.degree
    if K is not None:
        for (lo, hi), a, L, o in zip(K, f.grid.axes(), f.grid.lengths, f.grid.origin):
            if lo < o - 1e-12 or hi > o + L + 1e-12 or lo > hi:
                raise DomainError("K must lie inside the grid box")
    norms = iterate_log_norms(f, P, N_max, K)
    s = np.arange(N_max + 1) * m / lam
    phis, _ = conjugate_values(w, s)
    logw = (-lam * phis).tolist()
    tot = np.asarray(norms) + np.asarray(logw)
    if not np.any(np.isfinite(tot)):
        return SeminormResult(0.0, -math.inf, 0, False, norms, logw)
    j = int(np.argmax(tot))
    lv = float(tot[j])
    return SeminormResult(math.exp(lv) if lv < LOG_MAX else math.inf, lv, j, j == N_max, norms, logw)


# ---------------------------------------------------------------------------
# Paley–Wiener sums
# ---------------------------------------------------------------------------


def support_box(f, rel=NOISE_FLOOR):
    """Smallest grid box containing every sample above ``rel * max|f|``."""
    a = np.abs(f.values)
    mx = float(np.max(a))
    if mx == 0:
        return None
    idx = np.nonzero(a > rel * mx)
    box = []
    for j, ax in enumerate(f.grid.axes()):
        box.append((float(ax[idx[j].min()]), float(ax[idx[j].max()])))
    return box


def support_function(box, eta):
    """``H_K(eta) = sup_{x in K} <x, eta>`` for a box ``K``."""
    eta = np.asarray(eta, dtype=float)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return np.sum(np.maximum(lo * eta, hi * eta), axis=-1)


def box_measure(box):
    return float(np.prod([hi - lo for lo, hi in box]))


def check_padding(f):
    """Raise unless the support box sits inside with padding >= 2x its diameter."""
    box = support_box(f)
    if box is None:
        return None
    for (lo, hi), L, h in zip(box, f.grid.lengths, f.grid.spacing):
        diam = hi - lo + h
        if L < 3.0 * diam - 1e-9:
            raise AliasingError(
                f"support diameter {diam:.4g} needs a grid length of at least {3 * diam:.4g}, got {L:.4g}"
            )
    return box


def weight_exponent(P, w, grid):
    """``omega(|P(xi)|^{1/m})`` on the frequency lattice."""
    m = P.degree
    if m < 1:
        from .errors import DegenerateSymbolError

        raise DegenerateSymbolError("weight exponent needs degree >= 1")
    return w(np.abs(symbol_on_grid(P, grid)) ** (1.0 / m))


def dyadic_shells(grid, mask, n_shells=None):
    """Shell index per frequency (``-1`` outside ``mask``) and the shell edges."""
    r = np.linalg.norm(grid.freq_mesh(), axis=-1)
    rmax = float(np.max(r[mask]))
    r0 = 4.0 * max(grid.freq_spacing())
    k = max(3, int(math.floor(math.log2(rmax / r0))) + 1) if n_shells is None else n_shells
    edges = np.concatenate([[0.0], r0 * 2.0 ** np.arange(k)])
    edges[-1] = max(edges[-1], rmax * (1 + 1e-12))
    idx = np.searchsorted(edges, r, side="right") - 1
    idx = np.where(mask & (r <= edges[-1]), np.minimum(idx, k - 1), -1)
    return idx, edges


@dataclass
class PWReport:
    lambdas: list
    integrals: list
    log_integrals: list
    shell_edges: list
    shell_sums: list
    finite: list
    verdict: str
    support: list | None
    support_measure: float | None
    full_band_integrals: list

    def H_K(self, eta):
        if self.support is None:
            return 0.0
        return support_function(self.support, eta)

    def to_dict(self):
        return {
            "lambdas": self.lambdas,
            "integrals": self.integrals,
            "log_integrals": self.log_integrals,
            "shell_edges": self.shell_edges,
            "shell_sums": self.shell_sums,
            "finite": self.finite,
            "verdict": self.verdict,
            "support": self.support,
            "support_measure": self.support_measure,
            "full_band_integrals": self.full_band_integrals,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


BEURLING_TYPE, ROUMIEU_TYPE, NEITHER = "beurling", "roumieu", "neither"


def _finite_trend(shells):
    """Tail test on dyadic shell sums: the last shells must be decreasing."""
    s = np.asarray(shells, dtype=float)
    nz = np.nonzero(s > 0)[0]
    if nz.size == 0:
        return True
    last = nz[-1]
    if last < len(s) - 1:
        return True  # the integrand vanishes (below the noise floor) near the band edge
    if len(s) < 3:
        return False
    return bool(s[-1] < s[-2] < s[-3] or (s[-1] < s[-2] and s[-1] < 1e-6 * s.max()))


def pw_test(f, P, w, lambda_grid):
    """Weighted ``L^2`` integrals of ``f^`` on the inner half-band.

    ``I(lam) = sum |f^|^2 exp(lam omega(|P|^{1/m})) dxi`` with dyadic shell
    partial sums; a λ counts as finite when the shell sums decrease at the
    band edge.  Transform values below ``1e-12 * max|f^|`` are treated as zero.
    """
    box = check_padding(f)
    g = f.grid
    lams = [float(v) for v in lambda_grid]
    if any(v < 0 for v in lams):
        raise DomainError("lambda values must be nonnegative")
    fh = fft_forward(f)
    a2 = np.abs(fh.values) ** 2
    if box is None or float(np.max(a2)) == 0:
        z = [0.0] * len(lams)
        return PWReport(lams, z, [-math.inf] * len(lams), [], [], [True] * len(lams), BEURLING_TYPE, None, None, z)
    a2 = np.where(a2 > (NOISE_FLOOR**2) * float(np.max(a2)), a2, 0.0)
    ex = weight_exponent(P, w, g)
    mask = inner_band_mask(g)
    shells, edges = dyadic_shells(g, mask)
    dxi = float(np.prod(g.freq_spacing()))
    ints, logs, sums, fin, full = [], [], [], [], []
    with np.errstate(divide="ignore"):
        la2 = np.log(a2)
    for lam in lams:
        t = la2 + lam * ex
        t = np.where(np.isnan(t), -np.inf, t)
        li = float(logsumexp(np.where(mask, t, -np.inf))) + math.log(dxi)
        logs.append(li)
        ints.append(math.exp(li) if li < LOG_MAX else math.inf)
        lf = float(logsumexp(t)) + math.log(dxi)
        full.append(math.exp(lf) if lf < LOG_MAX else math.inf)
        ss = np.bincount(shells[shells >= 0], weights=np.exp(np.minimum(t[shells >= 0], LOG_MAX)), minlength=len(edges) - 1) * dxi
        sums.append(ss.tolist())
        fin.append(_finite_trend(ss))
    if all(fin):
        verdict = BEURLING_TYPE
    elif any(fin):
        verdict = ROUMIEU_TYPE
    else:
        verdict = NEITHER
    return PWReport(lams, ints, logs, edges.tolist(), sums, fin, verdict, box, box_measure(box), full)


@dataclass
class LemmaLoopResult:
    lambda0: float
    lam: float
    C: float
    seminorm: float
    ratio: float
    argmax: int
    truncated: bool
    holds: bool

    def to_dict(self):
        return self.__dict__.copy()


def lemma_loop(f, P, w, lambda0, N_max=64, slack=2.0):
    """From ``I(lambda0)`` derive ``C`` and test the iterate bound at ``lambda0 / 2``.

    ``C = (2 pi)^{-n/2} I(lambda0)^{1/2}`` with the integral over the full
    lattice; the check passes when the seminorm is at most ``slack * C``.
    """
    rep = pw_test(f, P, w, [lambda0])
    C = (2 * math.pi) ** (-f.n / 2) * math.sqrt(rep.full_band_integrals[0])
    lam = lambda0 / 2.0
    sn = iterate_seminorm(f, P, None, lam, w, N_max)
    ratio = sn.value / C if C > 0 else (0.0 if sn.value == 0 else math.inf)
    return LemmaLoopResult(lambda0, lam, C, sn.value, ratio, sn.argmax, sn.truncated, bool(rep.finite[0] and ratio <= slack))


# ---------------------------------------------------------------------------
# Gevrey bumps
# ---------------------------------------------------------------------------


def gevrey_profile(rho, q):
    """``exp(-(1 - rho^2)^{-q})`` for ``rho < 1``, zero otherwise."""
    rho = np.asarray(rho, dtype=float)
    inside = rho < 1.0
    t = np.where(inside, 1.0 - rho**2, 1.0)
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(inside, np.exp(-(t ** (-q))), 0.0)


def gevrey_step(t, s):
    """Smooth step: 0 for ``t <= 0``, 1 for ``t >= 1``, Gevrey of index ``s`` in between."""
    q = 1.0 / (s - 1.0)
    t = np.asarray(t, dtype=float)
    a = np.clip(t, 0.0, 1.0)
    with np.errstate(over="ignore", divide="ignore"):
        h0 = np.where(a > 0, np.exp(-(np.where(a > 0, a, 1.0) ** (-q))), 0.0)
        h1 = np.where(a < 1, np.exp(-(np.where(a < 1, 1.0 - a, 1.0) ** (-q))), 0.0)
    return h0 / (h0 + h1)


def _wrapped_offsets(grid):
    axes = []
    for s, h in zip(grid.shape, grid.spacing):
        k = np.arange(s)
        axes.append(np.where(k < s // 2, k, k - s) * h)
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class BumpFunction:
    """Plateau bump: ``1`` on ``|x - c| <= r/2``, supported in ``|x - c| <= r``."""

    center: tuple
    radius: float
    s: float
    field: GridField = field(repr=False)
    decay_exponent: float = math.nan
    decay_residual: float = math.nan

    def plateau_decay_exponent(self):
        """Same fit on the plateau itself (biased low by the indicator's power law)."""
        return fourier_decay_exponent(self.field)

    @property
    def q(self):
        return 1.0 / (self.s - 1.0)

    @property
    def values(self):
        return self.field.values


def make_bump(center, radius, s, grid, fit=True):
    """Gevrey-``s`` plateau bump on ``grid``.

    The indicator of the ball of radius ``3r/4`` is convolved with the
    normalised profile ``exp(-(1 - |x|^2/(r/4)^2)^{-q})``, ``q = 1/(s - 1)``.
    """
    s = float(s)
    if s <= 1.0:
        raise DomainError("Gevrey index s must exceed 1")
    center = np.asarray(center, dtype=float)
    if center.shape != (grid.n,):
        raise DomainError("center dimension does not match the grid")
    h = min(grid.spacing)
    if radius < 8 * h:
        raise ResolutionError(f"bump radius {radius:.4g} is under 8 cells ({8 * h:.4g})")
    for c, o, L in zip(center, grid.origin, grid.lengths):
        if c - radius < o - 1e-12 or c + radius > o + L + 1e-12:
            raise DomainError("bump ball must lie inside the grid box")
    q = 1.0 / (s - 1.0)
    mesh = grid.mesh()
    dist = np.linalg.norm(mesh - center, axis=-1)
    ind = (dist <= 0.75 * radius).astype(float)
    kern = gevrey_profile(np.linalg.norm(_wrapped_offsets(grid), axis=-1) / (0.25 * radius), q)
    kern /= kern.sum()
    conv = np.real(sfft.ifftn(sfft.fftn(ind) * sfft.fftn(kern), workers=workers()))
    vals = np.clip(conv, 0.0, 1.0)
    vals[dist > radius] = 0.0
    vals[dist <= 0.5 * radius] = 1.0
    fld = GridField(vals, grid, SPACE)
    beta, res = (math.nan, math.nan)
    if fit:
        # the class is carried by the profile; the indicator only adds a power of |xi|
        prof = gevrey_profile(dist / (0.25 * radius), q)
        beta, res = fourier_decay_exponent(GridField(prof, grid, SPACE))
    return BumpFunction(tuple(center.tolist()), float(radius), s, fld, beta, res)


def fourier_decay_exponent(f, band=(0.02, 1.0), n_bins=40, floor=1e-10):
    """Fit ``|f^| ~ exp(-eps |xi|^beta)`` on the upper envelope of the transform.

    Envelope maxima are taken over geometric bins of ``|xi|`` between
    ``band`` fractions of the Nyquist radius, stopping where the envelope
    drops below ``floor * max|f^|``.  ``beta`` is the slope of
    ``log(-log(M / M_0))`` against ``log |xi|`` on the middle half of the
    usable bins, where neither the low-frequency plateau nor the noise floor
    dominates.  Returns ``(beta, residual)``.
    """
    fh = np.abs(fft_forward(f).values)
    g = f.grid
    r = np.linalg.norm(g.freq_mesh(), axis=-1)
    nyq = min(g.nyquist())
    m0 = float(np.max(fh))
    if m0 == 0:
        return math.nan, math.nan
    edges = np.geomspace(band[0] * nyq, band[1] * nyq, n_bins)
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (r >= lo) & (r < hi)
        if not np.any(sel):
            continue
        mx = float(np.max(fh[sel]))
        if mx < floor * m0:
            break
        xs.append(math.sqrt(lo * hi))
        ys.append(-math.log(mx / m0))
    k = len(xs)
    sl = slice(k // 4, 3 * k // 4 + 1)
    xs, ys = np.asarray(xs[sl]), np.asarray(ys[sl])
    ok = ys > 0
    if ok.sum() < 4:
        return math.nan, math.nan
    lx, ly = np.log(xs[ok]), np.log(ys[ok])
    beta, icpt = np.polyfit(lx, ly, 1)
    res = float(np.max(np.abs(ly - (beta * lx + icpt))))
    return float(beta), res
