"""Tau polynomial in (r, s, t), the field v, grid evaluation and peak detection.

Two evaluation routes are kept side by side:

* the exact route substitutes every Q(r) into (r, s, t), sums the weighted
  modulus squares into one rational polynomial, and differentiates it
  symbolically;
* the floating route never expands anything.  It propagates second-order
  jets (value, d/dr, d/ds, d2/dr2, d2/drds) through the Schur recurrence and
  the n x n minors of ``U P``, then sums ``|Q(r)|^2`` terms.  Every
  contribution is non-negative, so tau keeps full relative accuracy even far
  from the origin where the expanded polynomial would cancel catastrophically.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import ndimage, optimize

from .partition_core import Partition, degree_vector, enumerate_multiindices, make_partition
from .polyring import (
    Gaussian,
    ParameterError,
    RSTPoly,
    SigmaParams,
    diff_rst,
    evaluate,
    modulus_squared,
    substitute_sigma,
    to_mpq,
)
from .schur_engine import k0_of, tau_terms, u_matrix


class SingularPointError(ArithmeticError):
    """Raised when tau vanishes where the field is requested."""


@dataclass(frozen=True)
class SolutionSpec:
    lam: Partition
    b: Fraction = Fraction(1, 2)
    omega: Fraction = Fraction(1, 2)
    gammas: tuple = (0, 0, 0)

    def __post_init__(self) -> None:
        if Fraction(self.b) == 0:
            raise ParameterError("b must be nonzero")
        if Fraction(self.omega) == 0:
            raise ParameterError("omega must be nonzero")

    @classmethod
    def of(cls, parts: Sequence[int], b=Fraction(1, 2), omega=Fraction(1, 2), gammas=(0, 0, 0)) -> "SolutionSpec":
        return cls(make_partition(parts), Fraction(b), Fraction(omega), tuple(gammas))

    @property
    def a(self) -> Fraction:
        return Fraction(self.omega) * Fraction(self.b)

    @property
    def k0(self) -> Gaussian:
        return k0_of(self.b, self.omega)

    @property
    def n(self) -> int:
        return self.lam.n

    @property
    def m_n(self) -> int:
        return self.lam.m_n

    @property
    def M(self) -> int:  # noqa: N802 - lump count
        return self.lam.lump_count

    @property
    def params(self) -> SigmaParams:
        return SigmaParams(self.b, self.omega, self.gammas)

    def chain_coefficients(self) -> tuple[Fraction, Fraction]:
        """(dr/dy, ds/dy) = (3(a^2 - b^2), 6ab); dr/dx = 1 and ds/dx = 0."""
        a, b = self.a, Fraction(self.b)
        return 3 * (a * a - b * b), 6 * a * b

    def peak_polarity(self) -> int:
        """Sign of v at an isolated lump centre: sign(b^2 - a^2), 0 if degenerate."""
        d = Fraction(self.b) ** 2 - self.a**2
        return (d > 0) - (d < 0)

    def to_json(self) -> dict:
        return {
            "partition": list(self.lam.parts),
            "b": str(self.b),
            "omega": str(self.omega),
            "gammas": [str(g) for g in self.gammas],
        }


def to_rs(x, y, t, spec: SolutionSpec):
    """Moving-frame coordinates: x' = x + (a^2+b^2) t / a, y' = y + t / (3a)."""
    a, b = spec.a, Fraction(spec.b)
    if a == 0:
        raise ParameterError("a = omega * b must be nonzero")
    xp = x + (a * a + b * b) / a * t
    yp = y + t / (3 * a)
    dr_dy, ds_dy = spec.chain_coefficients()
    return xp + dr_dy * yp, ds_dy * yp


def from_rs(r, s, t, spec: SolutionSpec):
    """Inverse of :func:`to_rs`."""
    a, b = spec.a, Fraction(spec.b)
    if a == 0:
        raise ParameterError("a = omega * b must be nonzero")
    dr_dy, ds_dy = spec.chain_coefficients()
    yp = s / ds_dy
    xp = r - dr_dy * yp
    return xp - (a * a + b * b) / a * t, yp - t / (3 * a)


def rs_jacobian(spec: SolutionSpec) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Rows d(r,s)/d(x,y): ((dr/dx, dr/dy), (ds/dx, ds/dy))."""
    dr_dy, ds_dy = spec.chain_coefficients()
    return (Fraction(1), dr_dy), (Fraction(0), ds_dy)


# ---------------------------------------------------------------------------
# Jets: arrays whose leading axis holds (f, f_r, f_s, f_rr, f_rs)

JET = 5


def _jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    out[0] = a[0] * b[0]
    out[1] = a[0] * b[1] + a[1] * b[0]
    out[2] = a[0] * b[2] + a[2] * b[0]
    out[3] = a[0] * b[3] + 2 * a[1] * b[1] + a[3] * b[0]
    out[4] = a[0] * b[4] + a[1] * b[2] + a[2] * b[1] + a[4] * b[0]
    return out


def _sigma_jets(params: SigmaParams, r: np.ndarray, s: np.ndarray, t: float) -> list[np.ndarray]:
    b, w = float(params.bq), float(params.wq)
    g = [complex(Gaussian.coerce(x)) for x in params.gammas]
    ds = params.sigma_ds()
    values = [
        1j * (r + 1j * s + g[0]),
        -s / (2 * b * w) + t / w + 1j * s / (2 * b) + 1j * g[1],
        1j * s / (6 * b * b * w) - 1j * t / (3 * b * w) + 1j * g[2],
    ]
    jets = []
    for j, val in enumerate(values):
        jet = np.zeros((JET,) + r.shape, dtype=complex)
        jet[0] = val
        jet[1] = 1j if j == 0 else 0
        jet[2] = ds[j]
        jets.append(jet)
    return jets


def schur_jets(params: SigmaParams, r: np.ndarray, s: np.ndarray, t: float, top: int) -> list[np.ndarray]:
    """Jets of p_0..p_top at the given points via the Schur recurrence."""
    sig = _sigma_jets(params, r, s, t)
    one = np.zeros((JET,) + r.shape, dtype=complex)
    one[0] = 1
    p = [one]
    for k in range(1, top + 1):
        acc = np.zeros_like(one)
        for j in range(1, min(k, 3) + 1):
            acc += j * _jet_mul(sig[j - 1], p[k - j])
        p.append(acc / k)
    return p


def q_minor_jets(spec: SolutionSpec, r: np.ndarray, s: np.ndarray, t: float, rows: Sequence[tuple[int, ...]] | None = None):
    """Jets of Q(row) for every multi-index in ``rows`` (default: all of them).

    Returns a dict keyed by multi-index.  The minors are built column by
    column: the minor of the first k columns on a row subset S is the
    signed sum over i in S of ``A[i, k] * minor(S - {i})``.
    """
    lam = spec.lam
    m = degree_vector(lam)
    mn = m[-1]
    n = lam.n
    size = 2 * mn + 1
    params = spec.params
    p = schur_jets(params, r, s, t, mn + 1)
    pc = [np.conj(x) for x in p]
    zero = np.zeros_like(p[0])
    k0 = complex(spec.k0)

    def pj(L, k):
        return L[k] if 0 <= k < len(L) else zero

    qcache: dict[tuple[int, int], np.ndarray] = {}

    def qjet(a: int, c: int) -> np.ndarray:
        if a < 0 or c < 0:
            return zero
        key = (a, c)
        if key not in qcache:
            qcache[key] = _jet_mul(pj(p, a - 1) + k0 * pj(p, a), pj(pc, c))
        return qcache[key]

    # P_{l j} = i^l Z_{m_j, m_n, l}
    P = np.zeros((size, n, JET) + r.shape, dtype=complex)
    for l in range(size):
        for col, mj in enumerate(m):
            if l > mj + mn:
                continue
            acc = np.zeros_like(zero)
            for j in range(l + 1):
                acc += (math.comb(l, j) * (-1) ** j) * qjet(mj - l + j, mn - j)
            P[l, col] = (1j**l) * acc
    U = np.array([[float(x) for x in row] for row in u_matrix(mn, spec.b)])
    UP = np.tensordot(U, P, axes=(1, 0))

    wanted = list(rows) if rows is not None else enumerate_multiindices(n, mn)
    minors: dict[tuple[int, ...], np.ndarray] = {(): None}  # type: ignore[dict-item]
    needed = set()
    for idx in wanted:
        for k in range(1, n + 1):
            for sub in itertools.combinations(idx, k):
                needed.add(sub)
    for k in range(1, n + 1):
        for sub in sorted(x for x in needed if len(x) == k):
            if k == 1:
                minors[sub] = UP[sub[0], 0]
                continue
            acc = np.zeros_like(zero)
            for pos, row in enumerate(sub):
                rest = sub[:pos] + sub[pos + 1:]
                term = _jet_mul(UP[row, k - 1], minors[rest])
                acc = acc - term if (pos + k - 1) % 2 else acc + term
            minors[sub] = acc
    return {idx: minors[idx] for idx in wanted}


def tau_jets(spec: SolutionSpec, r, s, t: float) -> np.ndarray:
    """Jet of tau at points as a real array shaped (5, ...)."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    b = float(Fraction(spec.b))
    qs = q_minor_jets(spec, r, s, t)
    total = np.zeros((JET,) + r.shape, dtype=float)
    for idx, q in qs.items():
        weight = (2 * b) ** (-2 * sum(idx))
        total += weight * _jet_mul(q, np.conj(q)).real
    return total


def v_from_jets(spec: SolutionSpec, jet: np.ndarray) -> np.ndarray:
    dr_dy, ds_dy = (float(c) for c in spec.chain_coefficients())
    tau, tr, ts, trr, trs = jet
    tau_x = tr
    tau_y = dr_dy * tr + ds_dy * ts
    tau_xy = dr_dy * trr + ds_dy * trs
    with np.errstate(divide="ignore", invalid="ignore"):
        return -2 * (tau_xy * tau - tau_x * tau_y) / (tau * tau)


# ---------------------------------------------------------------------------
# Exact tau polynomial


@dataclass
class TauPolynomial:
    poly: RSTPoly
    spec: SolutionSpec
    terms: list = field(default_factory=list, repr=False)

    @cached_property
    def derivatives(self) -> dict[str, RSTPoly]:
        r = diff_rst(self.poly, "r")
        s = diff_rst(self.poly, "s")
        return {"r": r, "s": s, "rr": diff_rst(r, "r"), "rs": diff_rst(r, "s")}

    def value(self, r, s, t):
        return evaluate(self.poly, (r, s, t))

    def jets(self, r, s, t) -> np.ndarray:
        return tau_jets(self.spec, r, s, t)

    def degree(self) -> int:
        return self.poly.total_degree()


def build_tau(spec: SolutionSpec) -> TauPolynomial:
    """Exact tau as a real polynomial in (r, s, t) plus the substituted Q(r)."""
    params = spec.params
    bq = to_mpq(spec.b)
    acc = RSTPoly.zero()
    substituted = []
    for term in tau_terms(spec.lam, spec.b, spec.omega, K=3):
        qpoly = substitute_sigma(term.combo, params)
        substituted.append((term.index, qpoly))
        acc = acc + modulus_squared(qpoly).scale(1 / (2 * bq) ** (2 * term.weight))
    acc.assert_real()
    return TauPolynomial(acc, spec, substituted)


def v_exact(tau: TauPolynomial, r, s, t) -> Fraction:
    """v at an exact point from exact polynomial derivatives."""
    d = tau.derivatives
    pt = (r, s, t)
    val = evaluate(tau.poly, pt).re
    if val == 0:
        raise SingularPointError(f"tau vanishes at {pt}")
    tr, ts = evaluate(d["r"], pt).re, evaluate(d["s"], pt).re
    trr, trs = evaluate(d["rr"], pt).re, evaluate(d["rs"], pt).re
    dr_dy, ds_dy = (to_mpq(c) for c in tau.spec.chain_coefficients())
    tau_y = dr_dy * tr + ds_dy * ts
    tau_xy = dr_dy * trr + ds_dy * trs
    out = -2 * (tau_xy * val - tr * tau_y) / (val * val)
    return Fraction(int(out.numerator), int(out.denominator))


def v_field(tau: TauPolynomial, r, s, t, exact: bool = False):
    """Field v at (r, s) and time t; ``exact=True`` needs rational inputs."""
    if exact:
        return v_exact(tau, r, s, t)
    jet = tau.jets(np.asarray(r, float), np.asarray(s, float), float(t))
    if np.any(jet[0] <= 0):
        raise SingularPointError("tau is not positive at the requested point")
    out = v_from_jets(tau.spec, jet)
    return float(out) if np.ndim(out) == 0 else out


def v_at_xy(tau: TauPolynomial, x, y, t) -> float:
    r, s = to_rs(x, y, t, tau.spec)
    return v_field(tau, float(r), float(s), t)


# ---------------------------------------------------------------------------
# Grids


@dataclass
class FieldGrid:
    r: np.ndarray
    s: np.ndarray
    t: float
    values: np.ndarray  # shape (ns, nr): values[i, j] is v at (r[j], s[i])
    tau: np.ndarray
    spec: SolutionSpec | None = None
    singular: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def cell(self) -> float:
        return float(max(self.r[1] - self.r[0], self.s[1] - self.s[0]))

    def rows(self):
        """CSV rows ``(r, s, v)`` in row-major order (s outer, r inner)."""
        for i, sv in enumerate(self.s):
            for j, rv in enumerate(self.r):
                yield rv, sv, self.values[i, j]


def auto_window(spec: SolutionSpec, t: float) -> float:
    """Half-width 4 sqrt(|t|+1) (M+1) / n of the default square window."""
    return 4 * math.sqrt(abs(t) + 1) * (spec.M + 1) / spec.n


def grid_eval(tau: TauPolynomial, t: float, r_range, s_range, nr: int, ns: int, chunk: int = 40000) -> FieldGrid:
    if nr < 2 or ns < 2:
        raise ValueError("grids need at least two nodes per axis")
    start = time.perf_counter()
    rr = np.linspace(float(r_range[0]), float(r_range[1]), nr)
    ss = np.linspace(float(s_range[0]), float(s_range[1]), ns)
    R, S = np.meshgrid(rr, ss)
    flat_r, flat_s = R.ravel(), S.ravel()
    vals = np.empty(flat_r.size)
    taus = np.empty(flat_r.size)
    for lo in range(0, flat_r.size, chunk):
        sl = slice(lo, lo + chunk)
        jet = tau.jets(flat_r[sl], flat_s[sl], float(t))
        taus[sl] = jet[0]
        vals[sl] = v_from_jets(tau.spec, jet)
    singular = [
        {"r": float(flat_r[k]), "s": float(flat_s[k]), "tau": float(taus[k])}
        for k in np.flatnonzero(~(taus > 0) | ~np.isfinite(vals))
    ]
    return FieldGrid(
        rr, ss, float(t), vals.reshape(ns, nr), taus.reshape(ns, nr), tau.spec, singular, time.perf_counter() - start
    )


# ---------------------------------------------------------------------------
# Peak maps


@dataclass
class PeakRecord:
    r: float
    s: float
    height: float
    kind: str = "unclassified"
    group: int = -1
    refined: bool = True

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "height": self.height,
            "kind": self.kind,
            "group": self.group,
            "refined": self.refined,
        }


@dataclass
class PeakMap:
    peaks: list[PeakRecord]
    t: float
    spec: SolutionSpec | None
    provenance: str = "detected"
    notes: dict = field(default_factory=dict)

    def positions(self) -> np.ndarray:
        return np.array([[p.r, p.s] for p in self.peaks], dtype=float).reshape(-1, 2)

    def singles(self) -> "PeakMap":
        return PeakMap([p for p in self.peaks if p.kind == "single"], self.t, self.spec, self.provenance, dict(self.notes))

    def to_json(self) -> dict:
        out = {
            "t": self.t,
            "provenance": self.provenance,
            "peaks": [p.to_json() for p in self.peaks],
        }
        if self.spec is not None:
            out["spec"] = self.spec.to_json()
        if self.notes:
            out["notes"] = self.notes
        return out


@dataclass(frozen=True)
class DetectionSettings:
    """Knobs for :func:`detect_peaks`.

    ``threshold`` is relative to the largest signed height on the grid and
    ``dedup_cells`` is measured in grid cells.  ``merge_fraction`` controls
    the saddle test used to fuse peaks that sit on one ridge: two maxima are
    the same lump when the field along the segment joining them never drops
    below that fraction of the lower height.
    """

    threshold: float = 1e-3
    dedup_cells: float = 2.0
    merge_fraction: float = 0.8
    merge_reach: float = 4.0
    max_move_cells: float = 4.0


def detect_peaks(grid: FieldGrid, tau: TauPolynomial, settings: DetectionSettings = DetectionSettings()) -> PeakMap:
    """Local maxima of the signed field, refined off-grid and deduplicated.

    Lumps are positive bumps of ``polarity * v`` where the polarity is the
    sign of v at an isolated lump centre.  Each grid maximum is polished by a
    Nelder-Mead search on the jet-evaluated field; a search that fails or
    wanders more than ``max_move_cells`` keeps the grid position and is
    flagged ``refined=False``.
    """
    spec = tau.spec
    polarity = spec.peak_polarity() or 1
    signed = polarity * grid.values if spec.peak_polarity() else np.abs(grid.values)
    finite = np.where(np.isfinite(signed), signed, -np.inf)
    top = float(np.max(finite))
    thresh = settings.threshold * top
    footprint = np.ones((3, 3), dtype=bool)
    local = ndimage.maximum_filter(finite, footprint=footprint, mode="nearest")
    cand = np.argwhere((finite == local) & (finite >= thresh) & (finite > 0))
    cell = grid.cell
    t = grid.t

    def objective(x):
        val = v_field(tau, np.array([x[0]]), np.array([x[1]]), t)[0]
        return -(polarity * val if spec.peak_polarity() else abs(val))

    peaks: list[PeakRecord] = []
    for i, j in cand:
        x0 = np.array([grid.r[j], grid.s[i]])
        refined = True
        try:
            res = optimize.minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"xatol": 1e-9, "fatol": 1e-12 * max(top, 1e-300), "initial_simplex": [x0, x0 + [cell / 2, 0], x0 + [0, cell / 2]], "maxiter": 2000},
            )
            x = res.x
            if not res.success or np.hypot(*(x - x0)) > settings.max_move_cells * cell:
                x, refined = x0, False
        except (ArithmeticError, ValueError):
            x, refined = x0, False
        height = float(v_field(tau, np.array([x[0]]), np.array([x[1]]), t)[0])
        peaks.append(PeakRecord(float(x[0]), float(x[1]), height, refined=refined))

    peaks = _dedup(peaks, settings.dedup_cells * cell)
    peaks = _merge_ridges(peaks, tau, t, polarity if spec.peak_polarity() else 0, settings)
    peaks.sort(key=lambda p: (round(p.r, 9), round(p.s, 9)))
    return PeakMap(peaks, t, spec, "detected", {"threshold": thresh, "cell": cell})


def _dedup(peaks: list[PeakRecord], radius: float) -> list[PeakRecord]:
    kept: list[PeakRecord] = []
    for p in sorted(peaks, key=lambda q: -abs(q.height)):
        if all(math.hypot(p.r - q.r, p.s - q.s) > radius for q in kept):
            kept.append(p)
    return kept


def _merge_ridges(peaks: list[PeakRecord], tau: TauPolynomial, t: float, polarity: int, settings: DetectionSettings) -> list[PeakRecord]:
    """Fuse maxima joined by a ridge that stays above ``merge_fraction`` of the lower one."""
    if settings.merge_fraction <= 0 or len(peaks) < 2:
        return peaks
    order = sorted(range(len(peaks)), key=lambda k: -abs(peaks[k].height))
    kept: list[int] = []

    def signed(vals):
        return polarity * vals if polarity else np.abs(vals)

    for k in order:
        p = peaks[k]
        fused = False
        for q_idx in kept:
            q = peaks[q_idx]
            dist = math.hypot(p.r - q.r, p.s - q.s)
            if dist > settings.merge_reach:
                continue
            lam = np.linspace(0, 1, 41)
            rs = p.r + lam * (q.r - p.r)
            ss = p.s + lam * (q.s - p.s)
            along = signed(v_field(tau, rs, ss, t))
            lower = min(signed(np.array([p.height]))[0], signed(np.array([q.height]))[0])
            if np.min(along) >= settings.merge_fraction * lower:
                fused = True
                break
        if not fused:
            kept.append(k)
    return [peaks[k] for k in kept]


def field_from_tau_function(tau_fn, spec: SolutionSpec, r, s, t, h: float = 1e-3) -> np.ndarray:
    """v by central differences of ``ln tau_fn`` (for oracles and comparisons)."""
    dr_dy, ds_dy = (float(c) for c in spec.chain_coefficients())

    def lt(dr, ds):
        return np.log(tau_fn(r + dr, s + ds, t))

    f_rr = (lt(h, 0) - 2 * lt(0, 0) + lt(-h, 0)) / h**2
    f_rs = (lt(h, h) - lt(h, -h) - lt(-h, h) + lt(-h, -h)) / (4 * h * h)
    return -2 * (dr_dy * f_rr + ds_dy * f_rs)
