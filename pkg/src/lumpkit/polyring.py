"""Exact polynomial arithmetic over the Gaussian rationals.

Two polynomial families share one sparse representation:

* ``SigmaPoly`` lives in the formal variables sigma_1..sigma_K and their
  starred (conjugate) partners.
* ``RSTPoly`` lives in the real coordinates r, s, t.

Coefficients are pairs of ``gmpy2.mpq`` (real part, imaginary part).  A
monomial is packed into a single Python integer with ``EXP_BITS`` bits per
variable, so multiplying two monomials is one integer addition.  Slot ``2j``
holds the exponent of sigma_{j+1} and slot ``2j+1`` holds its starred
partner; RSTPoly uses slots 0, 1, 2 for r, s, t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

EXP_BITS = 10
EXP_MASK = (1 << EXP_BITS) - 1
_ZERO = mpq(0)
_ONE = mpq(1)


class ParameterError(ValueError):
    """Raised for degenerate physical parameters such as b = 0."""


def to_mpq(x) -> mpq:
    """Convert ints, Fractions, decimal strings or mpq into an exact rational."""
    if isinstance(x, type(_ZERO)):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(x, (int, Fraction, Rational)):
        return mpq(x)
    if isinstance(x, str):
        return mpq(Fraction(x))
    if isinstance(x, float):
        return mpq(Fraction(x))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


class Gaussian:
    """Exact complex rational ``re + im*i``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = to_mpq(re)
        self.im = to_mpq(im)

    @classmethod
    def coerce(cls, x) -> "Gaussian":
        if isinstance(x, Gaussian):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, tuple):
            return cls(*x)
        return cls(x, 0)

    def pair(self) -> tuple[mpq, mpq]:
        return (self.re, self.im)

    def conjugate(self) -> "Gaussian":
        return Gaussian(self.re, -self.im)

    def abs2(self) -> mpq:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        if isinstance(other, Poly):
            return NotImplemented
        o = Gaussian.coerce(other)
        return Gaussian(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return Gaussian(-self.re, -self.im)

    def __sub__(self, other):
        o = Gaussian.coerce(other)
        return Gaussian(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return Gaussian.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Poly):
            return NotImplemented
        o = Gaussian.coerce(other)
        return Gaussian(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Gaussian.coerce(other)
        den = o.abs2()
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return Gaussian((self.re * o.re + self.im * o.im) / den, (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        return Gaussian.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return (Gaussian(1) / self) ** (-k)
        out = Gaussian(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        try:
            o = Gaussian.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"Gaussian({self.re}, {self.im})"

    def text(self) -> str:
        return format_coefficient((self.re, self.im))


I = Gaussian(0, 1)


def format_coefficient(c: tuple[mpq, mpq]) -> str:
    """Canonical ``a/b+c/d*i`` form; the imaginary sign replaces the ``+``."""
    re, im = c
    sign = "-" if im < 0 else "+"
    return f"{_q(re)}{sign}{_q(abs(im))}*i"


def _q(x: mpq) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def pack(exps: Sequence[int]) -> int:
    key = 0
    for slot, e in enumerate(exps):
        if e < 0 or e > EXP_MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= e << (EXP_BITS * slot)
    return key


def unpack(key: int, nslots: int) -> tuple[int, ...]:
    return tuple((key >> (EXP_BITS * slot)) & EXP_MASK for slot in range(nslots))


def _slot_exp(key: int, slot: int) -> int:
    return (key >> (EXP_BITS * slot)) & EXP_MASK


def _mul_terms(a: Mapping[int, tuple], b: Mapping[int, tuple]) -> dict[int, tuple]:
    out: dict[int, list] = {}
    for ka, (ar, ai) in a.items():
        a_real = not ai
        for kb, (br, bi) in b.items():
            k = ka + kb
            if a_real:
                if bi:
                    re, im = ar * br, ar * bi
                else:
                    re, im = ar * br, _ZERO
            elif not bi:
                re, im = ar * br, ai * br
            else:
                re, im = ar * br - ai * bi, ar * bi + ai * br
            acc = out.get(k)
            if acc is None:
                out[k] = [re, im]
            else:
                acc[0] += re
                acc[1] += im
    return {k: (v[0], v[1]) for k, v in out.items() if v[0] or v[1]}


def _add_terms(a: Mapping[int, tuple], b: Mapping[int, tuple], sign: int = 1) -> dict[int, tuple]:
    out = dict(a)
    for k, (br, bi) in b.items():
        if sign < 0:
            br, bi = -br, -bi
        cur = out.get(k)
        if cur is None:
            out[k] = (br, bi)
        else:
            re, im = cur[0] + br, cur[1] + bi
            if re or im:
                out[k] = (re, im)
            else:
                del out[k]
    return out


def _iadd_scaled(out: dict[int, list], a: Mapping[int, tuple], c: tuple) -> None:
    """In place: ``out += c * a`` with list-valued accumulators."""
    cr, ci = c
    for k, (ar, ai) in a.items():
        re, im = ar * cr - ai * ci, ar * ci + ai * cr
        acc = out.get(k)
        if acc is None:
            out[k] = [re, im]
        else:
            acc[0] += re
            acc[1] += im


def _finish(acc: dict[int, list]) -> dict[int, tuple]:
    return {k: (v[0], v[1]) for k, v in acc.items() if v[0] or v[1]}


def _scale_terms(a: Mapping[int, tuple], c: tuple) -> dict[int, tuple]:
    cr, ci = c
    if not cr and not ci:
        return {}
    out = {}
    for k, (ar, ai) in a.items():
        re, im = ar * cr - ai * ci, ar * ci + ai * cr
        if re or im:
            out[k] = (re, im)
    return out


class Poly:
    """Shared sparse machinery; subclasses fix the variable layout."""

    __slots__ = ("terms",)
    NSLOTS = 0

    def __init__(self, terms: Mapping[int, tuple] | None = None):
        self.terms: dict[int, tuple] = {}
        if terms:
            for k, c in terms.items():
                re, im = (to_mpq(c[0]), to_mpq(c[1])) if not isinstance(c, Gaussian) else c.pair()
                if re or im:
                    self.terms[k] = (re, im)

    # construction helpers -------------------------------------------------
    @classmethod
    def _raw(cls, terms: dict[int, tuple], **kw):
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._init_extra(**kw)
        return obj

    def _init_extra(self, **kw) -> None:
        pass

    def _like(self, terms: dict[int, tuple]):
        return type(self)._raw(terms)

    @classmethod
    def constant(cls, c) -> "Poly":
        g = Gaussian.coerce(c)
        return cls._raw({0: g.pair()} if g else {})

    @classmethod
    def zero(cls):
        return cls._raw({})

    @classmethod
    def one(cls):
        return cls.constant(1)

    # arithmetic ----------------------------------------------------------
    def _coerce_other(self, other):
        if isinstance(other, Poly):
            return other
        return type(self).constant(other)

    def __add__(self, other):
        o = self._coerce_other(other)
        return self._like(_add_terms(self.terms, o.terms))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce_other(other)
        return self._like(_add_terms(self.terms, o.terms, -1))

    def __rsub__(self, other):
        return self._coerce_other(other) - self

    def __neg__(self):
        return self._like({k: (-re, -im) for k, (re, im) in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Poly):
            return self._like(_mul_terms(self.terms, other.terms))
        return self.scale(other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = type(self).one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c):
        return self._like(_scale_terms(self.terms, Gaussian.coerce(c).pair()))

    def __truediv__(self, c):
        return self.scale(Gaussian(1) / Gaussian.coerce(c))

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.terms == other.terms
        try:
            return self.terms == type(self).constant(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, exps: Sequence[int]) -> Gaussian:
        c = self.terms.get(pack(exps))
        return Gaussian(*c) if c else Gaussian(0)

    def items(self) -> Iterable[tuple[tuple[int, ...], Gaussian]]:
        for k, c in self.terms.items():
            yield unpack(k, self.NSLOTS), Gaussian(*c)

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(unpack(k, self.NSLOTS)) for k in self.terms)

    # presentation --------------------------------------------------------
    def variable_names(self) -> list[str]:
        raise NotImplementedError

    def text(self) -> str:
        """Canonical text: monomials by total degree, then lexicographically."""
        if not self.terms:
            return "0"
        names = self.variable_names()
        nslots = len(names)
        rows = []
        for k, c in self.terms.items():
            exps = unpack(k, nslots)
            rows.append(((sum(exps), tuple(-e for e in exps)), exps, c))
        rows.sort(key=lambda row: row[0])
        pieces = []
        for _, exps, c in rows:
            factors = [f"({format_coefficient(c)})"]
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            pieces.append("*".join(factors))
        return " + ".join(pieces)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.text()})"


class SigmaPoly(Poly):
    """Polynomial in sigma_1..sigma_K and the starred sigma_1*..sigma_K*.

    ``K`` is the variable cutoff: the largest sigma index the polynomial may
    mention.  It is bookkeeping only, since slot positions do not depend on
    it; combining polynomials takes the larger cutoff.
    """

    __slots__ = ("K",)

    def __init__(self, terms=None, K: int = 1):
        super().__init__(terms)
        self.K = max(K, self._max_index())

    def _init_extra(self, K: int = 1) -> None:
        self.K = max(K, self._max_index())

    def _max_index(self) -> int:
        top = 0
        for k in self.terms:
            slot = 0
            while k:
                if k & EXP_MASK:
                    top = max(top, slot // 2 + 1)
                k >>= EXP_BITS
                slot += 1
        return top

    @property
    def NSLOTS(self) -> int:  # type: ignore[override]
        return 2 * self.K

    def _like(self, terms):
        return SigmaPoly._raw(terms, K=self.K)

    @classmethod
    def _raw(cls, terms, K: int = 1):
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.K = K
        return obj

    def _coerce_other(self, other):
        if isinstance(other, SigmaPoly):
            return other
        return SigmaPoly.constant(other)

    def __add__(self, other):
        o = self._coerce_other(other)
        return SigmaPoly._raw(_add_terms(self.terms, o.terms), K=max(self.K, o.K))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce_other(other)
        return SigmaPoly._raw(_add_terms(self.terms, o.terms, -1), K=max(self.K, o.K))

    def __mul__(self, other):
        if isinstance(other, SigmaPoly):
            return SigmaPoly._raw(_mul_terms(self.terms, other.terms), K=max(self.K, other.K))
        return self.scale(other)

    __rmul__ = __mul__

    @classmethod
    def var(cls, j: int, starred: bool = False) -> "SigmaPoly":
        if j < 1:
            raise ValueError("sigma indices start at 1")
        slot = 2 * (j - 1) + (1 if starred else 0)
        return cls._raw({1 << (EXP_BITS * slot): (_ONE, _ZERO)}, K=j)

    @staticmethod
    def slot(j: int, starred: bool) -> int:
        return 2 * (j - 1) + (1 if starred else 0)

    def variable_names(self) -> list[str]:
        names = []
        for j in range(1, self.K + 1):
            names += [f"s{j}", f"s{j}*"]
        return names

    def exponents(self, key: int) -> dict[tuple[int, bool], int]:
        """Decode a packed key into ``{(j, starred): exponent}``."""
        out = {}
        for slot, e in enumerate(unpack(key, 2 * self.K)):
            if e:
                out[(slot // 2 + 1, bool(slot % 2))] = e
        return out

    def weighted_degree(self) -> int:
        """Largest weighted degree with wt(sigma_j) = wt(sigma_j*) = j; -1 for zero."""
        best = -1
        for k in self.terms:
            w = 0
            slot = 0
            while k:
                e = k & EXP_MASK
                if e:
                    w += (slot // 2 + 1) * e
                k >>= EXP_BITS
                slot += 1
            best = max(best, w)
        return best

    def conjugate(self) -> "SigmaPoly":
        """Swap every sigma_j with sigma_j* and conjugate the coefficients."""
        out = {}
        for k, (re, im) in self.terms.items():
            new = 0
            slot = 0
            while k:
                e = k & EXP_MASK
                if e:
                    new |= e << (EXP_BITS * (slot ^ 1))
                k >>= EXP_BITS
                slot += 1
            out[new] = (re, -im)
        return SigmaPoly._raw(out, K=self.K)

    def star_variables(self) -> "SigmaPoly":
        """Swap sigma_j with sigma_j* but keep the coefficients as they are."""
        out = {}
        for k, c in self.terms.items():
            new = 0
            slot = 0
            while k:
                e = k & EXP_MASK
                if e:
                    new |= e << (EXP_BITS * (slot ^ 1))
                k >>= EXP_BITS
                slot += 1
            out[new] = c
        return SigmaPoly._raw(out, K=self.K)

    def truncate(self, K: int) -> "SigmaPoly":
        """Drop every monomial that mentions a sigma index above ``K``."""
        limit = 1 << (EXP_BITS * 2 * K)
        return SigmaPoly._raw({k: c for k, c in self.terms.items() if k < limit}, K=K)


def diff_sigma(p: SigmaPoly, j: int, starred: bool = False) -> SigmaPoly:
    if j < 1:
        raise ValueError("sigma indices start at 1")
    slot = SigmaPoly.slot(j, starred)
    shift = EXP_BITS * slot
    unit = 1 << shift
    out = {}
    for k, (re, im) in p.terms.items():
        e = (k >> shift) & EXP_MASK
        if e:
            out[k - unit] = (re * e, im * e)
    return SigmaPoly._raw(out, K=p.K)


class RSTPoly(Poly):
    """Polynomial in the real coordinates r, s, t.

    With ``real=True`` the constructor verifies that every coefficient has a
    zero imaginary part.
    """

    __slots__ = ("real",)
    NSLOTS = 3
    VARS = ("r", "s", "t")

    def __init__(self, terms=None, real: bool = False):
        super().__init__(terms)
        self.real = False
        if real:
            self.assert_real()

    @classmethod
    def _raw(cls, terms, real: bool = False):
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.real = real
        return obj

    def _like(self, terms):
        return RSTPoly._raw(terms)

    @classmethod
    def from_exponents(cls, mapping: Mapping[tuple[int, int, int], object], real: bool = False) -> "RSTPoly":
        terms = {}
        for exps, c in mapping.items():
            g = Gaussian.coerce(c)
            if g:
                terms[pack(exps)] = g.pair()
        return cls(terms, real=real)

    @classmethod
    def var(cls, name: str) -> "RSTPoly":
        return cls._raw({1 << (EXP_BITS * cls.VARS.index(name)): (_ONE, _ZERO)})

    def variable_names(self) -> list[str]:
        return list(self.VARS)

    def assert_real(self) -> "RSTPoly":
        bad = [k for k, (_, im) in self.terms.items() if im]
        if bad:
            raise ValueError(f"{len(bad)} coefficients have nonzero imaginary part")
        self.real = True
        return self

    def conjugate(self) -> "RSTPoly":
        """Coefficientwise conjugate; r, s, t are real symbols."""
        return RSTPoly._raw({k: (re, -im) for k, (re, im) in self.terms.items()}, real=self.real)

    def degree_in(self, var: str) -> int:
        slot = self.VARS.index(var)
        return max((_slot_exp(k, slot) for k in self.terms), default=-1)

    def fix_t(self, t) -> "RSTPoly":
        """Substitute an exact value for t, leaving a polynomial in r and s."""
        tq = to_mpq(t)
        out: dict[int, list] = {}
        mask_t = EXP_MASK << (2 * EXP_BITS)
        for k, (re, im) in self.terms.items():
            e = _slot_exp(k, 2)
            f = tq**e
            base = k & ~mask_t
            acc = out.setdefault(base, [_ZERO, _ZERO])
            acc[0] += re * f
            acc[1] += im * f
        return RSTPoly._raw({k: (v[0], v[1]) for k, v in out.items() if v[0] or v[1]}, real=self.real)

    def coefficient_arrays(self):
        """Exponent array ``(T, 3)`` plus complex coefficient vector, as floats."""
        import numpy as np

        keys = list(self.terms)
        exps = np.array([unpack(k, 3) for k in keys], dtype=np.int64).reshape(-1, 3)
        coef = np.array([complex(float(re), float(im)) for re, im in self.terms.values()], dtype=complex)
        return exps, coef


def modulus_squared(p: RSTPoly) -> RSTPoly:
    out = RSTPoly._raw(_mul_terms(p.terms, p.conjugate().terms))
    # Cross terms pair up into conjugates, so the result is real; enforce it.
    return out.assert_real()


def diff_rst(p: RSTPoly, var: str, order: int = 1) -> RSTPoly:
    if order < 1:
        raise ValueError("order must be at least 1")
    slot = RSTPoly.VARS.index(var)
    shift = EXP_BITS * slot
    terms = p.terms
    for _ in range(order):
        out = {}
        unit = 1 << shift
        for k, (re, im) in terms.items():
            e = (k >> shift) & EXP_MASK
            if e:
                out[k - unit] = (re * e, im * e)
        terms = out
    return RSTPoly._raw(terms, real=p.real)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, Rational, Gaussian, type(_ZERO))) and not isinstance(x, bool)


def evaluate(p: RSTPoly, point: Sequence) -> Gaussian | complex:
    """Evaluate at ``(r, s, t)``.

    Exact inputs (ints, Fractions, mpq) give an exact ``Gaussian``; any float
    input switches to complex floating point.  Powers are tabulated once per
    variable and combined per monomial.
    """
    exact = all(_is_exact(x) for x in point)
    if exact:
        vals = [to_mpq(x) for x in point]
        powers = _power_tables(vals, p, one=_ONE)
        re_acc, im_acc = _ZERO, _ZERO
        for k, (re, im) in p.terms.items():
            m = powers[0][k & EXP_MASK] * powers[1][(k >> EXP_BITS) & EXP_MASK] * powers[2][(k >> (2 * EXP_BITS)) & EXP_MASK]
            re_acc += re * m
            im_acc += im * m
        return Gaussian(re_acc, im_acc)
    vals = [float(x) for x in point]
    powers = _power_tables(vals, p, one=1.0)
    acc = 0j
    for k, (re, im) in p.terms.items():
        m = powers[0][k & EXP_MASK] * powers[1][(k >> EXP_BITS) & EXP_MASK] * powers[2][(k >> (2 * EXP_BITS)) & EXP_MASK]
        acc += complex(float(re), float(im)) * m
    return acc


def evaluate_termwise(p: RSTPoly, point: Sequence) -> Gaussian:
    """Independent exact evaluator: one ``**`` per factor, no shared tables."""
    vals = [to_mpq(x) for x in point]
    total = Gaussian(0)
    for exps, c in p.items():
        m = _ONE
        for v, e in zip(vals, exps):
            m *= v**e
        total = total + c * m
    return total


def _power_tables(vals, p: RSTPoly, one):
    tables = []
    for slot, v in enumerate(vals):
        top = max((_slot_exp(k, slot) for k in p.terms), default=0)
        row = [one]
        for _ in range(top):
            row.append(row[-1] * v)
        tables.append(row)
    return tables


@dataclass(frozen=True)
class SigmaParams:
    """Constants of the coordinate substitution: b, omega and gamma_1..gamma_3."""

    b: object = Fraction(1, 2)
    omega: object = Fraction(1, 2)
    gammas: tuple = (0, 0, 0)
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self) -> None:
        if to_mpq(self.b) == 0:
            raise ParameterError("b must be nonzero")
        if to_mpq(self.omega) == 0:
            raise ParameterError("omega must be nonzero")
        if len(self.gammas) != 3:
            raise ParameterError("exactly three gamma constants are expected")

    @property
    def bq(self) -> mpq:
        return to_mpq(self.b)

    @property
    def wq(self) -> mpq:
        return to_mpq(self.omega)

    def sigma_images(self) -> list[RSTPoly]:
        """Images of sigma_1, sigma_2, sigma_3 as polynomials in r, s, t."""
        if "images" not in self._cache:
            b, w = self.bq, self.wq
            g1, g2, g3 = (Gaussian.coerce(g) for g in self.gammas)
            r, s, t = RSTPoly.var("r"), RSTPoly.var("s"), RSTPoly.var("t")
            sig1 = (r + s.scale(I) + g1) * I
            sig2 = s.scale(-1 / (2 * b * w)) + t.scale(1 / w) + s.scale(Gaussian(0, 1 / (2 * b))) + g2 * I
            sig3 = s.scale(Gaussian(0, 1 / (6 * b * b * w))) - t.scale(Gaussian(0, 1 / (3 * b * w))) + g3 * I
            self._cache["images"] = [sig1, sig2, sig3]
        return self._cache["images"]

    def sigma_values(self, r, s, t) -> list[Gaussian]:
        """Exact values of sigma_1..sigma_3 at a rational point."""
        return [Gaussian(*evaluate(img, (r, s, t)).pair()) for img in self.sigma_images()]

    def sigma_ds(self) -> list[complex]:
        """d sigma_j / ds for j = 1, 2, 3 (d/dr is i for j = 1 and zero otherwise)."""
        b, w = float(self.bq), float(self.wq)
        return [-1 + 0j, complex(-1 / (2 * b * w), 1 / (2 * b)), complex(0, 1 / (6 * b * b * w))]


def substitute_sigma(p: SigmaPoly, params: SigmaParams) -> RSTPoly:
    """Replace sigma_j by its (r, s, t) image and sigma_j* by the conjugate image.

    Monomials with any sigma index above 3 vanish.  Products are accumulated
    along a prefix cache so shared leading factors are multiplied only once.
    """
    images = params.sigma_images()
    slot_polys = []
    for j in range(3):
        slot_polys.append(images[j])
        slot_polys.append(images[j].conjugate())
    power_cache: dict[tuple[int, int], RSTPoly] = {}

    def power(slot: int, e: int) -> RSTPoly:
        key = (slot, e)
        if key not in power_cache:
            power_cache[key] = slot_polys[slot] ** e
        return power_cache[key]

    limit = 1 << (EXP_BITS * 6)
    prefix_cache: dict[tuple, dict] = {(): {0: (_ONE, _ZERO)}}
    acc: dict[int, list] = {}
    for k, c in p.terms.items():
        if k >= limit:
            continue
        exps = unpack(k, 6)
        prefix: tuple = ()
        terms = prefix_cache[()]
        for slot, e in enumerate(exps):
            prefix = prefix + (e,)
            cached = prefix_cache.get(prefix)
            if cached is None:
                cached = _mul_terms(terms, power(slot, e).terms) if e else terms
                prefix_cache[prefix] = cached
            terms = cached
        _iadd_scaled(acc, terms, c)
    return RSTPoly._raw(_finish(acc))


def evaluate_sigma(p: SigmaPoly, values: Sequence, starred_values: Sequence | None = None) -> Gaussian:
    """Evaluate a SigmaPoly at exact sigma values.

    ``values[j-1]`` is sigma_j; starred variables default to the complex
    conjugates.  Indices beyond ``len(values)`` are taken to be zero.
    """
    vals = [Gaussian.coerce(v) for v in values]
    stars = [v.conjugate() for v in vals] if starred_values is None else [Gaussian.coerce(v) for v in starred_values]
    slot_vals = []
    for a, b in zip(vals, stars):
        slot_vals += [a, b]
    total_re, total_im = _ZERO, _ZERO
    pow_cache: dict[tuple[int, int], Gaussian] = {}
    for k, (re, im) in p.terms.items():
        m = Gaussian(1)
        slot = 0
        kk = k
        zero = False
        while kk:
            e = kk & EXP_MASK
            if e:
                if slot >= len(slot_vals):
                    zero = True
                    break
                key = (slot, e)
                if key not in pow_cache:
                    pow_cache[key] = slot_vals[slot] ** e
                m = m * pow_cache[key]
            kk >>= EXP_BITS
            slot += 1
        if zero:
            continue
        total_re += re * m.re - im * m.im
        total_im += re * m.im + im * m.re
    return Gaussian(total_re, total_im)


__all__ = [
    "Gaussian",
    "I",
    "ParameterError",
    "RSTPoly",
    "SigmaParams",
    "SigmaPoly",
    "diff_rst",
    "diff_sigma",
    "evaluate",
    "evaluate_sigma",
    "evaluate_termwise",
    "format_coefficient",
    "modulus_squared",
    "substitute_sigma",
    "to_mpq",
]
