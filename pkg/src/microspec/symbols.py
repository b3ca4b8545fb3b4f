"""Polynomial symbols ``P(xi) = sum a_alpha xi^alpha`` and variable-coefficient symbols.

Derivatives are plain ``∂^α``.  Every quantity built from them downstream
(ratios, tilde norms) uses moduli, so the phase of ``D = -i∂`` never enters.
The operator ``∂_j`` has symbol ``i xi_j`` and ``-Δ`` has symbol ``|xi|^2``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateSymbolError, DimensionMismatchError, DomainError, ParseError

MAX_ORDER = 64


def multi_index(alpha, n=None):
    """Validate and return ``alpha`` as a tuple of nonnegative ints."""
    a = tuple(int(v) for v in alpha)
    if any(v < 0 for v in a):
        raise DomainError(f"multi-index entries must be nonnegative: {alpha}")
    if sum(a) > MAX_ORDER:
        raise DomainError(f"multi-index order exceeds {MAX_ORDER}: {alpha}")
    if n is not None and len(a) != n:
        raise DimensionMismatchError(f"multi-index {alpha} has length {len(a)}, expected {n}")
    return a


def _fmt_coeff(c):
    c = complex(c)
    if c.imag == 0.0 and not math.copysign(1.0, c.imag) < 0:
        return repr(c.real)
    return "(" + repr(c.real) + ("+" if c.imag >= 0 or math.isnan(c.imag) else "") + repr(c.imag) + "j)"


@dataclass(frozen=True)
class PolynomialSymbol:
    """Sparse polynomial with complex coefficients.

    Parameters
    ----------
    n : int
        Number of variables.
    terms : tuple of (multi-index, complex)
        Sorted, zero-free coefficient list.  Build through :meth:`from_dict`.
    """

    n: int
    terms: tuple = field(default=())

    @classmethod
    def from_dict(cls, n, coeffs):
        n = int(n)
        if n < 1:
            raise DomainError("symbol dimension must be at least 1")
        acc = {}
        for alpha, c in dict(coeffs).items():
            a = multi_index(alpha, n)
            acc[a] = acc.get(a, 0j) + complex(c)
        items = tuple(sorted((a, c) for a, c in acc.items() if c != 0))
        return cls(n, items)

    @classmethod
    def constant(cls, n, c):
        return cls.from_dict(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n, j, coeff=1.0):
        """``coeff * xi_j``."""
        a = [0] * n
        a[j] = 1
        return cls.from_dict(n, {tuple(a): coeff})

    # -- basic properties ---------------------------------------------------
    @property
    def coeffs(self):
        return dict(self.terms)

    @cached_property
    def degree(self):
        return max((sum(a) for a, _ in self.terms), default=0)

    @property
    def m(self):
        return self.degree

    @property
    def is_zero(self):
        return not self.terms

    @cached_property
    def _max_pow(self):
        if not self.terms:
            return (0,) * self.n
        return tuple(int(v) for v in np.max(np.array([a for a, _ in self.terms]), axis=0))

    # -- evaluation -----------------------------------------------------------
    def __call__(self, zeta):
        """Evaluate at points ``zeta`` of shape ``(..., n)`` (real or complex)."""
        z = np.asarray(zeta)
        if z.shape[-1:] != (self.n,):
            raise DimensionMismatchError(
                f"symbol has n={self.n} but argument has trailing dimension {z.shape[-1:]}"
            )
        if not self.terms:
            out = np.zeros(z.shape[:-1], dtype=complex)
            return complex(out) if out.ndim == 0 else out
        dtype = complex if np.iscomplexobj(z) or any(c.imag for _, c in self.terms) else float
        z = z.astype(complex if dtype is complex else float)
        pows = []
        for j in range(self.n):
            k = self._max_pow[j]
            p = [np.ones(z.shape[:-1], dtype=z.dtype)]
            for _ in range(k):
                p.append(p[-1] * z[..., j])
            pows.append(p)
        out = np.zeros(z.shape[:-1], dtype=complex)
        for a, c in self.terms:
            t = np.full(z.shape[:-1], c, dtype=complex)
            for j, e in enumerate(a):
                if e:
                    t = t * pows[j][e]
            out += t
        return complex(out) if out.ndim == 0 else out

    def abs(self, xi):
        return np.abs(self(xi))

    # -- algebra --------------------------------------------------------------
    def _check(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PolynomialSymbol.constant(self.n, other)
        if not isinstance(other, PolynomialSymbol):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatchError(f"dimensions differ: {self.n} vs {other.n}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        acc = dict(self.terms)
        for a, c in other.terms:
            acc[a] = acc.get(a, 0j) + c
        return PolynomialSymbol.from_dict(self.n, acc)

    __radd__ = __add__

    def __neg__(self):
        return PolynomialSymbol(self.n, tuple((a, -c) for a, c in self.terms))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        acc = {}
        for a, c in self.terms:
            for b, e in other.terms:
                k = tuple(x + y for x, y in zip(a, b))
                acc[k] = acc.get(k, 0j) + c * e
        return PolynomialSymbol.from_dict(self.n, acc)

    __rmul__ = __mul__

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            raise DomainError("negative powers are not polynomials")
        if k * self.degree > MAX_ORDER:
            raise DomainError("power exceeds the multi-index order cap; use pointwise powers")
        out = PolynomialSymbol.constant(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, lam):
        return self * complex(lam)

    # -- calculus -------------------------------------------------------------
    def derivative(self, alpha):
        """Return ``∂^alpha P``."""
        alpha = multi_index(alpha, self.n)
        acc = {}
        for a, c in self.terms:
            if any(x < y for x, y in zip(a, alpha)):
                continue
            f = 1
            for x, y in zip(a, alpha):
                f *= math.perm(x, y)
            acc[tuple(x - y for x, y in zip(a, alpha))] = c * f
        return PolynomialSymbol.from_dict(self.n, acc)

    @cached_property
    def derivatives(self):
        """All nonzero ``(alpha, ∂^alpha P)`` with ``alpha != 0``, by increasing order."""
        out = []
        ranges = [range(k + 1) for k in self._max_pow]
        for alpha in sorted(itertools.product(*ranges), key=lambda a: (sum(a), a)):
            if sum(alpha) == 0:
                continue
            d = self.derivative(alpha)
            if not d.is_zero:
                out.append((alpha, d))
        return tuple(out)

    def tilde_norm(self, xi):
        """``sqrt(sum_alpha |∂^alpha P(xi)|^2)`` over all alpha including 0."""
        acc = np.abs(self(xi)) ** 2
        for _, d in self.derivatives:
            acc = acc + np.abs(d(xi)) ** 2
        out = np.sqrt(acc)
        return float(out) if np.ndim(out) == 0 else out

    def principal_part(self):
        if self.degree < 1:
            raise DegenerateSymbolError("constant symbol has no principal part of degree >= 1")
        m = self.degree
        return PolynomialSymbol(self.n, tuple((a, c) for a, c in self.terms if sum(a) == m))

    # -- text -----------------------------------------------------------------
    def to_literal(self):
        body = ", ".join(
            "(" + ",".join(str(v) for v in a) + "): " + _fmt_coeff(c) for a, c in self.terms
        )
        return f"poly n={self.n} m={self.degree} {{ {body} }}"

    def __str__(self):
        return self.to_literal()

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.degree,
            "literal": self.to_literal(),
        }


# module-level aliases -------------------------------------------------------


def evaluate(P, zeta):
    return P(zeta)


def derivative(P, alpha):
    return P.derivative(alpha)


def tilde_norm(P, xi):
    return P.tilde_norm(xi)


def principal_part(P):
    return P.principal_part()


# ---------------------------------------------------------------------------
# variable-coefficient symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariableSymbol:
    """``Q(x, xi) = sum_k a_k(x) xi^{alpha_k}`` with smooth coefficient functions.

    ``terms`` holds ``(callable, multi-index)`` pairs; a callable receives a
    real vector ``x`` of length ``n`` and returns a complex number.
    """

    n: int
    terms: tuple
    domain: tuple = ()
    name: str = "variable"

    def __post_init__(self):
        for coef, alpha in self.terms:
            if not callable(coef):
                raise DomainError("coefficient entries must be callables of x")
            multi_index(alpha, self.n)
        if not self.domain:
            object.__setattr__(self, "domain", tuple((-1.0, 1.0) for _ in range(self.n)))

    def freeze(self, x0):
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (self.n,):
            raise DimensionMismatchError(f"freeze point must have length {self.n}")
        for xi, (lo, hi) in zip(x0, self.domain):
            if not lo <= xi <= hi:
                raise DomainError(f"freeze point {x0.tolist()} outside the domain box")
        acc = {}
        for coef, alpha in self.terms:
            a = tuple(alpha)
            acc[a] = acc.get(a, 0j) + complex(coef(x0))
        return PolynomialSymbol.from_dict(self.n, acc)

    @classmethod
    def from_polynomials(cls, n, pieces, name="variable", domain=()):
        """Build from ``[(a(x), P), ...]`` meaning ``sum a(x) P(xi)``."""
        terms = []
        for coef, P in pieces:
            for alpha, c in P.terms:
                terms.append((_scaled(coef, c), alpha))
        return cls(n, tuple(terms), domain, name)


def _scaled(f, c):
    def g(x):
        return c * f(x)

    return g


def freeze(Q, x0):
    return Q.freeze(x0)


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


def heat(k=1):
    """``i tau + |xi|^2`` in variables ``(tau, xi_1, ..., xi_k)``."""
    n = k + 1
    P = PolynomialSymbol.variable(n, 0, 1j)
    for j in range(1, n):
        P = P + PolynomialSymbol.variable(n, j) ** 2
    return P


def laplace(n=2):
    """``|xi|^2``, the symbol of ``-Δ``."""
    P = PolynomialSymbol.constant(n, 0.0)
    for j in range(n):
        P = P + PolynomialSymbol.variable(n, j) ** 2
    return P


def degenerate_anisotropic(m=1, h=2):
    """``D_x^{2m} + x^{2h} D_y^{2m+2}`` in variables ``(x, y)``."""
    return VariableSymbol(
        2,
        ((lambda x: 1.0, (2 * m, 0)), (lambda x: x[0] ** (2 * h), (0, 2 * m + 2))),
        name=f"degenerate_anisotropic(m={m},h={h})",
    )


def degenerate_radial(n=2, m=2, mp=1, h=1):
    """``|x|^{2h} q(xi)^m + q(xi)^{m'}`` with ``q = |xi|^2`` and ``m' < m``."""
    q = laplace(n)
    return VariableSymbol.from_polynomials(
        n,
        [(lambda x: float(np.sum(np.asarray(x) ** 2)) ** h, q**m), (lambda x: 1.0, q**mp)],
        name=f"degenerate_radial(m={m},m'={mp},h={h})",
    )


def laplace_drift(n=2, amplitude=0.5):
    """``-Δ + a(x) ∂_1`` with ``a(x) = 1 + amplitude sin(x_1)``."""
    return VariableSymbol.from_polynomials(
        n,
        [(lambda x: 1.0, laplace(n)), (lambda x: 1.0 + amplitude * math.sin(x[0]), PolynomialSymbol.variable(n, 0, 1j))],
        name="laplace_drift",
    )


VARIABLE_FIXTURES = {
    "degenerate_anisotropic": degenerate_anisotropic,
    "degenerate_radial": degenerate_radial,
    "laplace_drift": laplace_drift,
}


def variable_fixture(name):
    key = name.strip().lower().replace("-", "").replace("_", "").replace(".", "")
    table = {k.replace("_", ""): v for k, v in VARIABLE_FIXTURES.items()}
    if key not in table:
        raise ParseError(f"unknown variable symbol {name!r}", name, 1, 1)
    return table[key]()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_FIXTURE_RE = re.compile(r"^(heat|laplace)\s*(\d*)$")
_VAR_RE = re.compile(r"^(d|xi)(\d+)$")
_LITERAL_RE = re.compile(r"^poly\s+n\s*=\s*(\d+)\s+m\s*=\s*(\d+)\s*\{(.*)\}$", re.S)
_ENTRY_RE = re.compile(r"\s*\(([^()]*)\)\s*:\s*(\([^()]*\)|[^,]+?)\s*(?:,|$)")


def parse_literal(text, offset=0):
    """Parse ``poly n=2 m=2 { (2,0): 1, (0,2): 1 }``."""
    src = text.strip()
    mt = _LITERAL_RE.match(src)
    if not mt:
        raise ParseError("malformed polynomial literal", text, 1, offset + 1)
    n, m = int(mt.group(1)), int(mt.group(2))
    body = mt.group(3)
    body_start = src.index("{") + 1
    coeffs = {}
    pos = 0
    while pos < len(body):
        if not body[pos:].strip():
            break
        me = _ENTRY_RE.match(body, pos)
        if not me:
            raise ParseError("expected '(i,j,...): coefficient'", text, 1, offset + body_start + pos + 1)
        try:
            alpha = tuple(int(v) for v in me.group(1).split(","))
        except ValueError:
            raise ParseError("non-integer exponent", text, 1, offset + body_start + me.start(1) + 1)
        if len(alpha) != n:
            raise ParseError(
                f"multi-index {alpha} does not have length n={n}", text, 1, offset + body_start + me.start(1) + 1
            )
        try:
            c = complex(me.group(2).replace(" ", ""))
        except ValueError:
            raise ParseError(f"bad coefficient {me.group(2)!r}", text, 1, offset + body_start + me.start(2) + 1)
        if alpha in coeffs:
            raise ParseError(f"duplicate multi-index {alpha}", text, 1, offset + body_start + me.start(1) + 1)
        coeffs[alpha] = c
        pos = me.end()
    P = PolynomialSymbol.from_dict(n, coeffs)
    if P.degree != m and not P.is_zero:
        raise ParseError(f"declared m={m} but coefficients have degree {P.degree}", text, 1, offset + 1)
    return P


def _split_top(text, sep):
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "{(":
            depth += 1
        elif ch in "})":
            depth -= 1
        elif ch == sep and depth == 0:
            if sep == "+" and i > 0 and text[i - 1] in "eE" and i > 1 and text[i - 2].isdigit():
                continue
            parts.append((start, text[start:i]))
            start = i + 1
    parts.append((start, text[start:]))
    return parts


def parse_symbol(text, n=None):
    """Parse a symbol expression.

    Accepted atoms are polynomial literals, fixtures (``heat1``, ``heat 2``,
    ``laplace2``), numbers, ``dj`` (the symbol ``i xi_j`` of ``∂_j``, 1-based)
    and ``xij`` (``xi_j``).  Atoms combine with ``*`` and top-level ``+``.
    """
    if not text or not text.strip():
        raise ParseError("empty symbol", text or "", 1, 1)
    atoms = []
    for start, term in _split_top(text, "+"):
        if not term.strip():
            raise ParseError("empty term", text, 1, start + 1)
        factors = []
        for fstart, fac in _split_top(term, "*"):
            col = start + fstart + (len(fac) - len(fac.lstrip())) + 1
            factors.append((col, fac.strip()))
        atoms.append(factors)

    dims = []
    for factors in atoms:
        for col, fac in factors:
            d = _atom_dim(fac)
            if d is not None:
                dims.append(d)
    dims = set(dims)
    if n is not None:
        dims.add(int(n))
    if len(dims) > 1:
        raise ParseError(f"terms have inconsistent dimensions {sorted(dims)}", text, 1, 1)
    if not dims:
        # only d_j / numbers: dimension is the largest index
        idx = [int(_VAR_RE.match(f).group(2)) for fs in atoms for _, f in fs if _VAR_RE.match(f)]
        if not idx:
            raise ParseError("cannot infer the dimension of a constant symbol", text, 1, 1)
        dims = {max(idx)}
    dim = dims.pop()

    total = PolynomialSymbol.constant(dim, 0.0)
    for factors in atoms:
        term = PolynomialSymbol.constant(dim, 1.0)
        for col, fac in factors:
            term = term * _atom(fac, dim, text, col)
        total = total + term
    return total


def _atom_dim(fac):
    if fac.startswith("poly"):
        mt = re.match(r"poly\s+n\s*=\s*(\d+)", fac)
        return int(mt.group(1)) if mt else None
    mt = _FIXTURE_RE.match(fac.lower())
    if mt:
        k = int(mt.group(2) or (1 if mt.group(1) == "heat" else 2))
        return k + 1 if mt.group(1) == "heat" else k
    return None


def _atom(fac, dim, text, col):
    low = fac.lower()
    if low.startswith("poly"):
        return parse_literal(fac, col - 1)
    mt = _FIXTURE_RE.match(low)
    if mt:
        k = int(mt.group(2) or (1 if mt.group(1) == "heat" else 2))
        return heat(k) if mt.group(1) == "heat" else laplace(k)
    mt = _VAR_RE.match(low)
    if mt:
        j = int(mt.group(2))
        if not 1 <= j <= dim:
            raise ParseError(f"variable index {j} outside 1..{dim}", text, 1, col)
        return PolynomialSymbol.variable(dim, j - 1, 1j if mt.group(1) == "d" else 1.0)
    try:
        return PolynomialSymbol.constant(dim, complex(fac.replace(" ", "")))
    except ValueError:
        raise ParseError(f"unrecognised symbol term {fac!r}", text, 1, col)
