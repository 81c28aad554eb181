"""Generalized Schur polynomials and the exact tau-function terms.

The chain of objects is

    p_n  ->  Q_{m,n} = (p_{m-1} + k0 p_m) p_n*  ->  Z_{m,n,l}
         ->  W(r) = det[Z_{m_j, m_n, r_i}]  ->  Q(r) = sum_s U(r;s) i^{|s|} W(s)

and tau is the weighted sum of squares ``sum_r |Q(r)|^2 / (2b)^(2|r|)`` over
all strictly increasing multi-indices ``r`` in ``[0, 2 m_n]``.

Polynomial arithmetic is exact (see :mod:`lumpkit.polyring`).  A variable
cutoff ``K`` may be given to every builder: monomials mentioning sigma_j with
``j > K`` are discarded as they appear.  Because the coordinate substitution
sends sigma_j to zero for ``j > 3``, building with ``K = 3`` yields the same
substituted polynomials at a fraction of the cost.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Sequence

from gmpy2 import mpq

from .partition_core import (
    InvalidMultiIndexError,
    Partition,
    check_multiindex,
    compare_multiindices,
    degree_vector,
    enumerate_multiindices,
)
from .polyring import Gaussian, I, ParameterError, SigmaParams, SigmaPoly, to_mpq


class SchurTable:
    """Memoized p_0, p_1, ... built from ``n p_n = sum_j j sigma_j p_{n-j}``.

    Filling is guarded by a lock so concurrent readers see each entry built
    exactly once.
    """

    def __init__(self, K: int | None = None):
        self.K = K
        self._p: list[SigmaPoly] = [SigmaPoly.one()]
        self._star: dict[int, SigmaPoly] = {}
        self._lock = threading.Lock()

    def p(self, n: int) -> SigmaPoly:
        if n < 0:
            return SigmaPoly.zero()
        if n >= len(self._p):
            with self._lock:
                while len(self._p) <= n:
                    self._p.append(self._next())
        return self._p[n]

    def _next(self) -> SigmaPoly:
        k = len(self._p)
        top = k if self.K is None else min(k, self.K)
        acc = SigmaPoly.zero()
        for j in range(1, top + 1):
            acc = acc + (SigmaPoly.var(j) * self._p[k - j]).scale(mpq(j, k))
        acc.K = max(acc.K, k if self.K is None else min(k, self.K))
        return acc

    def p_star(self, n: int) -> SigmaPoly:
        """p_n with every variable starred; coefficients are rational so unchanged."""
        if n < 0:
            return SigmaPoly.zero()
        if n not in self._star:
            self._star[n] = self.p(n).star_variables()
        return self._star[n]


_TABLES: dict[int | None, SchurTable] = {}


def schur_table(K: int | None = None) -> SchurTable:
    if K not in _TABLES:
        _TABLES[K] = SchurTable(K)
    return _TABLES[K]


def schur_p(n: int, K: int | None = None) -> SigmaPoly:
    return schur_table(K).p(n)


def schur_p_enumerated(n: int) -> SigmaPoly:
    """p_n summed directly over weighted compositions m_1 + 2 m_2 + ... = n."""
    if n < 0:
        return SigmaPoly.zero()
    total = SigmaPoly.zero()

    def rec(j: int, remaining: int, mono: SigmaPoly, denom: int) -> None:
        nonlocal total
        if remaining == 0:
            total = total + mono.scale(mpq(1, denom))
            return
        if j > remaining:
            return
        power = SigmaPoly.one()
        fact = 1
        for e in range(remaining // j + 1):
            if e:
                power = power * SigmaPoly.var(j)
                fact *= e
            rec(j + 1, remaining - e * j, mono * power, denom * fact)

    rec(1, n, SigmaPoly.one(), 1)
    total.K = max(total.K, n)
    return total


def k0_of(b, omega) -> Gaussian:
    """k0 = b (omega + i)."""
    bq, wq = to_mpq(b), to_mpq(omega)
    return Gaussian(bq * wq, bq)


def q_poly(m: int, n: int, k0, K: int | None = None) -> SigmaPoly:
    if m < 0 or n < 0:
        return SigmaPoly.zero()
    table = schur_table(K)
    return _q_cached(m, n, Gaussian.coerce(k0).pair(), K, table)


def _q_cached(m, n, k0pair, K, table):
    key = (m, n, k0pair, K)
    hit = _Q_CACHE.get(key)
    if hit is None:
        left = table.p(m - 1) + table.p(m).scale(Gaussian(*k0pair))
        hit = left * table.p_star(n)
        if K is not None:
            hit = hit.truncate(K)
        _Q_CACHE[key] = hit
    return hit


_Q_CACHE: dict = {}
_Z_CACHE: dict = {}


def z_poly(m: int, n: int, l: int, k0, K: int | None = None) -> SigmaPoly:
    """Z_{m,n,l} = sum_j C(l,j) (-1)^j Q_{m-l+j, n-j}; zero once l > m + n."""
    if l < 0:
        raise ValueError("l must be non-negative")
    key = (m, n, l, Gaussian.coerce(k0).pair(), K)
    hit = _Z_CACHE.get(key)
    if hit is None:
        hit = SigmaPoly.zero()
        for j in range(l + 1):
            term = q_poly(m - l + j, n - j, k0, K)
            if term:
                c = comb(l, j) * (-1 if j % 2 else 1)
                hit = hit + term.scale(c)
        _Z_CACHE[key] = hit
    return hit


def u_matrix(m_n: int, b) -> list[list[mpq]]:
    """Upper unitriangular U with U_{rs} = C(s,r) / (2b)^(s-r)."""
    bq = to_mpq(b)
    if bq == 0:
        raise ParameterError("b must be nonzero")
    size = 2 * m_n + 1
    c = 1 / (2 * bq)
    return [[mpq(comb(s, r)) * c ** (s - r) if r <= s else mpq(0) for s in range(size)] for r in range(size)]


def d_matrix(m_n: int, b) -> list[mpq]:
    """Diagonal of D: (2b)^(-2r) for r = 0..2 m_n."""
    bq = to_mpq(b)
    if bq == 0:
        raise ParameterError("b must be nonzero")
    return [1 / (2 * bq) ** (2 * r) for r in range(2 * m_n + 1)]


def c_matrix(m_n: int, b) -> list[list[mpq]]:
    """C_{ab} = C(a+b, a) / (2b)^(a+b)."""
    bq = to_mpq(b)
    size = 2 * m_n + 1
    return [[mpq(comb(a + c, a)) / (2 * bq) ** (a + c) for c in range(size)] for a in range(size)]


def poly_det(matrix: Sequence[Sequence[SigmaPoly]]) -> SigmaPoly:
    """Determinant by Laplace expansion along rows, memoized on column subsets."""
    n = len(matrix)
    if n == 0:
        return SigmaPoly.one()
    memo: dict[tuple[int, tuple[int, ...]], SigmaPoly] = {}

    def minor(row: int, cols: tuple[int, ...]) -> SigmaPoly:
        if row == n:
            return SigmaPoly.one()
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc = SigmaPoly.zero()
        for pos, col in enumerate(cols):
            entry = matrix[row][col]
            if not entry:
                continue
            rest = minor(row + 1, cols[:pos] + cols[pos + 1:])
            if not rest:
                continue
            term = entry * rest
            acc = acc - term if pos % 2 else acc + term
        memo[key] = acc
        return acc

    return minor(0, tuple(range(n)))


def _admissible(lam: Partition, r: Sequence[int]) -> None:
    check_multiindex(r, bound=2 * lam.m_n)
    if len(r) != lam.n:
        raise InvalidMultiIndexError(f"{tuple(r)} has length {len(r)}, expected {lam.n}")


def w_minor(lam: Partition, r: Sequence[int], k0, K: int | None = None) -> SigmaPoly:
    """W(r) = det[Z_{m_j, m_n, r_i}] with rows indexed by r and columns by j."""
    _admissible(lam, r)
    m = degree_vector(lam)
    mn = m[-1]
    rows = [[z_poly(mj, mn, ri, k0, K) for mj in m] for ri in r]
    return poly_det(rows)


@dataclass(frozen=True)
class TauTerm:
    index: tuple[int, ...]
    combo: SigmaPoly
    weight: int

    def to_json(self) -> dict:
        return {"index": list(self.index), "weight": self.weight, "poly": self.combo.text()}


def u_minor(U: Sequence[Sequence[mpq]], rows: Sequence[int], cols: Sequence[int]) -> mpq:
    """Exact n x n minor of U on the given rows and columns."""
    sub = [[U[a][c] for c in cols] for a in rows]
    return _rational_det(sub)


def _rational_det(a: list[list]) -> object:
    """Exact determinant by Gaussian elimination over a field (mpq or Gaussian)."""
    a = [row[:] for row in a]
    n = len(a)
    det = 1
    for col in range(n):
        pivot = next((i for i in range(col, n) if a[i][col]), None)
        if pivot is None:
            return a[0][0] * 0 if n else 1
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        piv = a[col][col]
        det = piv * det
        for i in range(col + 1, n):
            if a[i][col]:
                f = a[i][col] / piv
                a[i] = [x - f * y for x, y in zip(a[i], a[col])]
    return det


def q_of_r(lam: Partition, r: Sequence[int], b, k0=None, K: int | None = None, method: str = "rows") -> TauTerm:
    """Combined minor Q(r) with weight |r|.

    ``method="minors"`` sums ``U(r;s) i^{|s|} W(s)`` over every ``s`` that
    dominates ``r``; ``method="rows"`` takes the determinant of rows ``r`` of
    the product ``U P`` directly.  Both give the same polynomial by the
    Cauchy-Binet formula.
    """
    _admissible(lam, r)
    if k0 is None:
        raise ValueError("k0 is required")
    r = tuple(r)
    m = degree_vector(lam)
    mn = m[-1]
    U = u_matrix(mn, b)
    if method == "minors":
        combo = SigmaPoly.zero()
        for s in enumerate_multiindices(lam.n, mn):
            if not compare_multiindices(r, s).dominated:
                continue
            coeff = u_minor(U, r, s)
            if not coeff:
                continue
            w = w_minor(lam, s, k0, K)
            combo = combo + w.scale(Gaussian(coeff) * I ** sum(s))
    elif method == "rows":
        rows = []
        for ri in r:
            row = []
            for mj in m:
                entry = SigmaPoly.zero()
                for s in range(ri, 2 * mn + 1):
                    if s > mj + mn:
                        break
                    z = z_poly(mj, mn, s, k0, K)
                    if z:
                        entry = entry + z.scale(Gaussian(U[ri][s]) * I**s)
                row.append(entry)
            rows.append(row)
        combo = poly_det(rows)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TauTerm(r, combo, sum(r))


def tau_terms(lam: Partition, b, omega, K: int | None = None, method: str = "rows") -> list[TauTerm]:
    k0 = k0_of(b, omega)
    return [q_of_r(lam, r, b, k0, K, method) for r in enumerate_multiindices(lam.n, lam.m_n)]


# ---------------------------------------------------------------------------
# Pointwise exact oracles


def schur_values(sigmas: Sequence[Gaussian], top: int) -> list[Gaussian]:
    """Exact p_0..p_top at given sigma values (sigma_j = 0 beyond the list)."""
    p = [Gaussian(1)]
    for k in range(1, top + 1):
        acc = Gaussian(0)
        for j in range(1, min(k, len(sigmas)) + 1):
            acc = acc + sigmas[j - 1] * p[k - j] * j
        p.append(acc / k)
    return p


def _p_matrix_values(lam: Partition, params: SigmaParams, point) -> list[list[Gaussian]]:
    """P_{rj} = i^r Z_{m_j, m_n, r} evaluated exactly at a point."""
    m = degree_vector(lam)
    mn = m[-1]
    sig = params.sigma_values(*point)
    p = schur_values(sig, mn + 2 * mn + 1)
    k0 = k0_of(params.b, params.omega)

    def pv(n):
        return p[n] if n >= 0 else Gaussian(0)

    def qv(a, c):
        if a < 0 or c < 0:
            return Gaussian(0)
        return (pv(a - 1) + k0 * pv(a)) * pv(c).conjugate()

    P = []
    for row in range(2 * mn + 1):
        line = []
        for mj in m:
            z = Gaussian(0)
            if row <= mj + mn:
                for j in range(row + 1):
                    z = z + qv(mj - row + j, mn - j) * (comb(row, j) * (-1 if j % 2 else 1))
            line.append(z * I**row)
        P.append(line)
    return P


def tau_oracle_det(lam: Partition, b, omega, point, gammas=(0, 0, 0)) -> mpq:
    """det(P^dagger C P) at an exact point, from pointwise values only."""
    params = SigmaParams(b, omega, tuple(gammas))
    P = _p_matrix_values(lam, params, point)
    C = c_matrix(lam.m_n, b)
    size = len(P)
    n = lam.n
    CP = [[sum((P[c][j] * C[a][c] for c in range(size)), Gaussian(0)) for j in range(n)] for a in range(size)]
    H = [[sum((P[a][i].conjugate() * CP[a][j] for a in range(size)), Gaussian(0)) for j in range(n)] for i in range(n)]
    det = _rational_det(H)
    det = Gaussian.coerce(det)
    if det.im != 0:
        raise ArithmeticError("Hermitian Gram determinant came out non-real")
    return det.re


def tau_full_AB(lam: Partition, b, omega, point, gammas=(0, 0, 0)) -> mpq:
    """det A * det B with A_ij = sum_l (d/dx)^l Q_{m_i,m_j} / (2b)^l and B its starred mirror.

    Since ``d/dx`` acts on Q through sigma_1 only, ``(d/dx)^l Q = i^l Z``.
    B is the conjugate transpose of A, so the product is ``|det A|^2``.
    """
    params = SigmaParams(b, omega, tuple(gammas))
    m = degree_vector(lam)
    top = 2 * m[-1] + 2
    p = schur_values(params.sigma_values(*point), top)
    k0 = k0_of(b, omega)
    bq = to_mpq(b)

    def pv(n):
        return p[n] if n >= 0 else Gaussian(0)

    def qv(a, c):
        if a < 0 or c < 0:
            return Gaussian(0)
        return (pv(a - 1) + k0 * pv(a)) * pv(c).conjugate()

    def entry(mi, mj):
        total = Gaussian(0)
        for l in range(mi + mj + 1):
            z = Gaussian(0)
            for j in range(l + 1):
                z = z + qv(mi - l + j, mj - j) * (comb(l, j) * (-1 if j % 2 else 1))
            total = total + z * (I / (2 * bq)) ** l
        return total

    A = [[entry(mi, mj) for mj in m] for mi in m]
    B = [[entry(mj, mi).conjugate() for mj in m] for mi in m]
    detA = Gaussian.coerce(_rational_det(A))
    detB = Gaussian.coerce(_rational_det(B))
    prod = detA * detB
    if prod.im != 0:
        raise ArithmeticError("det A * det B came out non-real")
    return prod.re


def tau_sum_of_squares(terms: Sequence[TauTerm], b, omega, point, gammas=(0, 0, 0)) -> mpq:
    """sum_r |Q(r)|^2 / (2b)^(2|r|) evaluated exactly at a point."""
    from .polyring import evaluate_sigma

    params = SigmaParams(b, omega, tuple(gammas))
    sig = params.sigma_values(*point)
    bq = to_mpq(b)
    total = mpq(0)
    for term in terms:
        val = evaluate_sigma(term.combo, sig)
        total += val.abs2() / (2 * bq) ** (2 * term.weight)
    return total


@lru_cache(maxsize=None)
def top_weighted_degree(lam: Partition, r: tuple[int, ...]) -> int:
    """(sum m_i) + n m_n - |r|, the degree bound for Q(r)."""
    m = degree_vector(lam)
    return sum(m) + lam.n * m[-1] - sum(r)


def q_expansion(lam: Partition, r: Sequence[int], b) -> dict[tuple[int, ...], Gaussian]:
    """Coefficients of W(s) inside Q(r) after factoring out ``i^{|r|}``.

    The coefficient of ``W(s)`` is ``U(r;s) i^{|s| - |r|}``; only dominating
    ``s`` with a nonzero minor appear.
    """
    _admissible(lam, r)
    U = u_matrix(lam.m_n, b)
    out = {}
    for s in enumerate_multiindices(lam.n, lam.m_n):
        if not compare_multiindices(tuple(r), s).dominated:
            continue
        coeff = u_minor(U, r, s)
        if coeff:
            out[s] = Gaussian(coeff) * I ** (sum(s) - sum(r))
    return out
