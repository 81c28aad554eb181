"""Heat polynomials, the leading stationarity condition and peak-pattern checks.

For large |t| the lumps sit near the zeros of the leading combination
``l0 = Q(0) / i^{|0|}``.  ``l0`` depends on both ``z = r + i s`` and its
conjugate, so its zeros are found as solutions of the two real equations
``Re l0 = 0`` and ``Im l0 = 0``.

Heat polynomials ``H_r(rho, nu) = sum_{j + 2k = r} rho^j nu^k / (j! k!)``
describe the rescaled Schur polynomials ``p_n / (i^n |t|^{n/2})`` in the
variable ``rho = (r + i s) / sqrt|t|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np
from gmpy2 import mpq
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from .field_eval import PeakMap, PeakRecord, SolutionSpec, auto_window, q_minor_jets, schur_jets
from .partition_core import classify_special, conjugate
from .polyring import Gaussian, RSTPoly, substitute_sigma
from .schur_engine import q_of_r


# ---------------------------------------------------------------------------
# Heat polynomials


@dataclass(frozen=True)
class HeatPoly:
    order: int
    coeffs: dict  # (j, k) -> mpq, meaning rho^j nu^k

    def evaluate(self, rho, nu):
        return sum(float(c) * rho**j * nu**k for (j, k), c in self.coeffs.items()) if self.coeffs else 0 * rho

    def evaluate_exact(self, rho, nu):
        total = mpq(0)
        for (j, k), c in self.coeffs.items():
            total += c * mpq(rho) ** j * mpq(nu) ** k
        return total

    def diff_rho(self) -> "HeatPoly":
        return HeatPoly(self.order - 1, {(j - 1, k): c * j for (j, k), c in self.coeffs.items() if j})

    def diff_nu(self) -> "HeatPoly":
        return HeatPoly(self.order - 2, {(j, k - 1): c * k for (j, k), c in self.coeffs.items() if k})

    def rho_coefficients(self, nu) -> list:
        """Coefficients in rho (highest power first) after fixing nu."""
        out = [mpq(0)] * (self.order + 1)
        for (j, k), c in self.coeffs.items():
            out[self.order - j] += c * mpq(nu) ** k
        return out


def heat_poly(r: int) -> HeatPoly:
    if r < 0:
        return HeatPoly(r, {})
    coeffs = {}
    for k in range(r // 2 + 1):
        j = r - 2 * k
        coeffs[(j, k)] = mpq(1, math.factorial(j) * math.factorial(k))
    return HeatPoly(r, coeffs)


def nu_of_t(omega, t) -> Fraction:
    """nu = 1/omega for t < 0 and -1/omega for t >= 0."""
    w = Fraction(omega)
    if w == 0:
        raise ValueError("omega must be nonzero")
    return 1 / w if t < 0 else -1 / w


def rescaled_schur(spec: SolutionSpec, n: int, r, s, t: float) -> np.ndarray:
    """p_n(r, s, t) / (i^n |t|^{n/2}) evaluated in floating point."""
    jets = schur_jets(spec.params, np.asarray(r, float), np.asarray(s, float), float(t), n)
    return jets[n][0] / (1j**n * abs(t) ** (n / 2))


# ---------------------------------------------------------------------------
# Leading condition


@dataclass
class LeadingCondition:
    spec: SolutionSpec
    t: float
    poly: RSTPoly | None = None

    @property
    def phase(self) -> complex:
        n = self.spec.n
        return 1j ** (n * (n - 1) // 2)

    def jet(self, r, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(l0, d l0/dr, d l0/ds) at arrays of points, in floating point."""
        n = self.spec.n
        base = tuple(range(n))
        q = q_minor_jets(self.spec, np.asarray(r, float), np.asarray(s, float), float(self.t), rows=[base])[base]
        return q[0] / self.phase, q[1] / self.phase, q[2] / self.phase


def leading_condition(spec: SolutionSpec, t, exact: bool = True) -> LeadingCondition:
    """``Q(0) / i^{|0|}`` substituted into (r, s) at fixed t.

    With ``exact=True`` the polynomial is built symbolically (t must then be
    rational); the float evaluator is available either way.
    """
    cond = LeadingCondition(spec, float(t))
    if exact:
        n = spec.n
        term = q_of_r(spec.lam, tuple(range(n)), spec.b, spec.k0, K=3)
        poly = substitute_sigma(term.combo, spec.params).fix_t(Fraction(t))
        phase = Gaussian(0, 1) ** (n * (n - 1) // 2)
        cond.poly = poly.scale(Gaussian(1) / phase)
    return cond


# ---------------------------------------------------------------------------
# Root finding


@dataclass(frozen=True)
class RootSettings:
    """Newton search knobs.

    Seeds come from three sources: a uniform lattice of side
    ``min(seeds_per_lump * M, lattice_cap)``, the centres of cells where both
    ``Re l0`` and ``Im l0`` change sign on a ``scan_nodes`` grid (plus a finer
    scan of the axis band, where multi-peak members crowd together), and the
    leading-order single-peak template.  Multi-peak members can sit closer
    than any global scan resolves, so up to ``zoom_rounds`` extra passes
    rescan a ``zoom_width * sqrt|t| / n`` neighbourhood of every root in the
    band with ``zoom_nodes`` per side.  The merge radius is
    ``merge_fraction`` of the window half-width.  The search window is
    ``window_fraction`` of the field-grid window: every root seen for the
    example partitions lies within about a fifth of that wider window.
    """

    seeds_per_lump: int = 4
    lattice_cap: int = 60
    scan_nodes: int = 601
    band_nodes: tuple[int, int] = (4001, 61)
    band: float = 1.5
    template_seeds: bool = True
    zoom_rounds: int = 2
    zoom_nodes: int = 161
    zoom_width: float = 1.0
    max_iter: int = 200
    step_cap: float = 0.5
    tol: float = 1e-10
    accept_fraction: float = 1e-7
    merge_fraction: float = 1e-5
    escape_factor: float = 3.0
    window_fraction: float = 0.4
    chunk: int = 20000


def newton_roots(cond: LeadingCondition, seeds: np.ndarray, half: float, settings: RootSettings = RootSettings()) -> np.ndarray:
    """Damped Newton on (Re l0, Im l0) with the analytic Jacobian.

    Seeds that converge or leave ``escape_factor * half`` are retired each
    sweep, so late iterations only touch the slow stragglers.  Near tight
    clusters l0 is huge and cancellation leaves step noise above ``tol``;
    a seed still running at the end is accepted when its last step is below
    ``accept_fraction * half``.
    """
    x = np.array(seeds, dtype=float).reshape(-1, 2)
    active = np.arange(len(x))
    done = np.zeros(len(x), dtype=bool)
    cap = settings.step_cap * math.sqrt(abs(cond.t) + 1)
    with np.errstate(all="ignore"):
        _newton_sweeps(cond, x, active, done, cap, half, settings)
    roots = x[done]
    return _merge_points(roots, settings.merge_fraction * half)


def _newton_sweeps(cond, x, active, done, cap, half, settings) -> None:
    norm = np.full(len(active), np.inf)
    for _ in range(settings.max_iter):
        if active.size == 0:
            break
        pts = x[active]
        f, fr, fs = cond.jet(pts[:, 0], pts[:, 1])
        det = fr.real * fs.imag - fs.real * fr.imag
        dr = (fs.imag * f.real - fs.real * f.imag) / det
        ds = (-fr.imag * f.real + fr.real * f.imag) / det
        step = np.stack([dr, ds], axis=1)
        bad = ~np.all(np.isfinite(step), axis=1)
        norm = np.hypot(step[:, 0], step[:, 1])
        scale = np.minimum(1.0, cap / np.maximum(norm, 1e-300))
        step *= scale[:, None]
        pts = pts - step
        x[active] = pts
        converged = (~bad) & (norm < settings.tol * (1 + np.abs(pts).max(axis=1)))
        escaped = bad | (np.abs(pts).max(axis=1) > settings.escape_factor * half)
        done[active[converged]] = True
        keep = ~(converged | escaped)
        active, norm = active[keep], norm[keep]
    done[active[norm < settings.accept_fraction * half]] = True


def _merge_points(points: np.ndarray, radius: float) -> np.ndarray:
    if len(points) == 0:
        return points.reshape(0, 2)
    order = np.lexsort((points[:, 1], points[:, 0]))
    kept: list[np.ndarray] = []
    tree_pts: list[np.ndarray] = []
    for p in points[order]:
        if tree_pts and np.min(np.hypot(*(np.array(tree_pts) - p).T)) <= radius:
            continue
        tree_pts.append(p)
        kept.append(p)
    return np.array(kept).reshape(-1, 2)


def _l0_values(cond: LeadingCondition, r: np.ndarray, s: np.ndarray, chunk: int) -> np.ndarray:
    out = np.empty(r.size, dtype=complex)
    for lo in range(0, r.size, chunk):
        out[lo:lo + chunk] = cond.jet(r[lo:lo + chunk], s[lo:lo + chunk])[0]
    return out


def sign_change_seeds(cond: LeadingCondition, r_axis: np.ndarray, s_axis: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Centres of grid cells whose corners see both Re l0 and Im l0 change sign."""
    R, S = np.meshgrid(r_axis, s_axis)
    vals = _l0_values(cond, R.ravel(), S.ravel(), chunk).reshape(R.shape)

    def changes(a: np.ndarray) -> np.ndarray:
        sg = np.sign(a)
        corners = np.stack([sg[:-1, :-1], sg[1:, :-1], sg[:-1, 1:], sg[1:, 1:]])
        return (corners.max(axis=0) > 0) & (corners.min(axis=0) < 0)

    cells = np.argwhere(changes(vals.real) & changes(vals.imag))
    r_mid = (r_axis[:-1] + r_axis[1:]) / 2
    s_mid = (s_axis[:-1] + s_axis[1:]) / 2
    return np.stack([r_mid[cells[:, 1]], s_mid[cells[:, 0]]], axis=1)


def _zoom_band_roots(cond: LeadingCondition, spec: SolutionSpec, roots: np.ndarray, half: float, settings: RootSettings) -> np.ndarray:
    t = cond.t
    cross = 1 if t > 0 else 0
    width = settings.band * math.sqrt(abs(t))
    reach = settings.zoom_width * math.sqrt(abs(t)) / spec.n
    for _ in range(settings.zoom_rounds):
        if len(roots) >= spec.M:
            break
        centres = roots[np.abs(roots[:, cross]) <= width]
        if len(centres) == 0:
            break
        seeds = []
        for c in centres:
            r_axis = np.linspace(c[0] - reach, c[0] + reach, settings.zoom_nodes)
            s_axis = np.linspace(c[1] - reach, c[1] + reach, settings.zoom_nodes)
            seeds.append(sign_change_seeds(cond, r_axis, s_axis, settings.chunk))
        fresh = newton_roots(cond, np.concatenate(seeds), half, settings)
        merged = _merge_points(np.concatenate([roots, fresh]), settings.merge_fraction * half)
        if len(merged) == len(roots):
            break
        roots = merged
    return roots


def predict_peaks(spec: SolutionSpec, t: float, settings: RootSettings = RootSettings(), half: float | None = None) -> PeakMap:
    """Zeros of l0 in the (r, s) window, reported as a predicted PeakMap."""
    if t == 0:
        raise ValueError("prediction needs |t| > 0")
    cond = leading_condition(spec, t, exact=False)
    half = settings.window_fraction * auto_window(spec, t) if half is None else half
    side = min(settings.seeds_per_lump * spec.M, settings.lattice_cap)
    axis = np.linspace(-half, half, side)
    R, S = np.meshgrid(axis, axis)
    seeds = [np.stack([R.ravel(), S.ravel()], axis=1)]
    if settings.scan_nodes:
        scan = np.linspace(-half, half, settings.scan_nodes)
        seeds.append(sign_change_seeds(cond, scan, scan, settings.chunk))
    if settings.band_nodes:
        width = settings.band * math.sqrt(abs(t))
        along = np.linspace(-half, half, settings.band_nodes[0])
        across = np.linspace(-width, width, settings.band_nodes[1])
        found = sign_change_seeds(cond, along, across, settings.chunk) if t > 0 else sign_change_seeds(cond, across, along, settings.chunk)
        seeds.append(found)
    if settings.template_seeds:
        rho = leading_schur_roots(spec, t) * math.sqrt(abs(t))
        seeds.append(np.stack([rho.real, rho.imag], axis=1))
    roots = newton_roots(cond, np.concatenate(seeds), half, settings)
    roots = _zoom_band_roots(cond, spec, roots, half, settings)
    if len(roots) > spec.M:
        # Keep the M roots where |l0| is smallest relative to its gradient.
        f, fr, fs = cond.jet(roots[:, 0], roots[:, 1])
        score = np.abs(f) / (np.abs(fr) + np.abs(fs))
        roots = roots[np.argsort(score)[: spec.M]]
    peaks = [PeakRecord(float(r), float(s), float("nan")) for r, s in sorted(roots.tolist())]
    notes = {"roots_found": len(peaks), "expected": spec.M, "window_half_width": half}
    if len(peaks) < spec.M:
        notes["shortfall"] = spec.M - len(peaks)
    return PeakMap(peaks, float(t), spec, "predicted", notes)


# ---------------------------------------------------------------------------
# Group classification


@dataclass(frozen=True)
class GroupSettings:
    """Axis band half-width and largest group spread, both in units of sqrt|t|."""

    band: float = 1.5
    link: float = 3.0  # divided by n
    partial: bool = False


def classify_groups(pm: PeakMap, spec: SolutionSpec, settings: GroupSettings = GroupSettings()) -> PeakMap:
    """Label multi-peak groups (runs of n near the dominant axis) and singles.

    The dominant axis is the r-axis for t > 0 and the s-axis for t < 0.
    Every unassigned peak inside the band seeds a candidate made of itself
    and its n-1 closest unassigned neighbours, where closeness also charges
    a neighbour for its distance from the axis.  Candidates are scored by
    spread plus the largest distance from the axis; the best one becomes a
    group as long as its spread stays within ``link * sqrt|t| / n``, and the
    search repeats until none qualifies or the expected m_n groups are found.
    Scoring against the axis keeps an off-axis single that happens to sit
    between group members from being swallowed into the group.
    With ``partial`` set, runs of n-1 down to 2 peaks are then accepted too,
    so a group that lost members in the root search still leaves the single
    peaks clean; such groups are counted under ``partial_groups``.
    """
    if not pm.peaks:
        raise ValueError("no peaks to classify")
    t = pm.t
    n = spec.n
    root_t = math.sqrt(abs(t))
    pts = pm.positions()
    along, cross = (0, 1) if t > 0 else (1, 0)
    in_band = np.flatnonzero(np.abs(pts[:, cross]) <= settings.band * root_t)
    limit = settings.link * root_t / n
    free = sorted(in_band.tolist(), key=lambda k: pts[k, along])
    multi: list[list[int]] = []
    for size in range(n, 1 if settings.partial else n - 1, -1):
        while len(free) >= size and len(multi) < spec.m_n:
            best, spread_at_best, chosen = math.inf, math.inf, []
            for seed in free:
                others = sorted(
                    (k for k in free if k != seed),
                    key=lambda k: math.dist(pts[k], pts[seed]) + abs(pts[k, cross]),
                )
                members = [seed, *others[: size - 1]]
                spread = diameter(pts[members])
                score = spread + float(np.abs(pts[members, cross]).max())
                if score < best:
                    best, spread_at_best, chosen = score, spread, members
            if spread_at_best > limit:
                break
            multi.append(sorted(chosen))
            free = [k for k in free if k not in chosen]
    multi.sort(key=lambda c: pts[c[0]].tolist())

    peaks = [PeakRecord(p.r, p.s, p.height, "single", -1, p.refined) for p in pm.peaks]
    for gid, members in enumerate(multi):
        for i in members:
            peaks[i].kind = "multi"
            peaks[i].group = gid
    next_id = len(multi)
    for p in peaks:
        if p.kind == "single":
            p.group = next_id
            next_id += 1
    n_single = sum(p.kind == "single" for p in peaks)
    full = sum(len(c) == n for c in multi)
    partial = len(multi) - full
    consistent = full == spec.m_n and partial == 0 and n_single == spec.lam.N
    notes = dict(pm.notes)
    notes.update({"multi_groups": full, "partial_groups": partial, "singles": n_single, "consistent": consistent})
    return PeakMap(peaks, t, spec, pm.provenance, notes)


# ---------------------------------------------------------------------------
# Geometry helpers


def diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, float).reshape(-1, 2)
    b = np.asarray(b, float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        return math.inf
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def match_points(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-total-distance one-to-one matching; returns (rows, cols, distances)."""
    a = np.asarray(a, float).reshape(-1, 2)
    b = np.asarray(b, float).reshape(-1, 2)
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    rows, cols = linear_sum_assignment(cost)
    return rows, cols, cost[rows, cols]


def nearest_spacing(points: np.ndarray) -> float:
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) < 2:
        return 0.0
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(np.median(d[:, 1]))


def lattice_fit(points: np.ndarray, rows: int, cols: int) -> float:
    """RMS residual of the best affine ``rows x cols`` lattice, over the spacing.

    Points are ranked into rows along one axis and into columns along the
    other; both axis orders and both the coordinate frame and the principal
    frame are tried, and the smallest relative residual wins.
    """
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) != rows * cols:
        return math.inf
    spacing = nearest_spacing(pts)
    if spacing == 0:
        return math.inf
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    frames = [np.eye(2), vt.T]
    best = math.inf
    for frame in frames:
        local = centred @ frame
        for nr, nc, major in ((rows, cols, 1), (cols, rows, 1), (rows, cols, 0), (cols, rows, 0)):
            minor_axis = 1 - major
            order = np.argsort(local[:, major], kind="stable")
            idx = np.empty((len(pts), 2))
            for row in range(nr):
                members = order[row * nc:(row + 1) * nc]
                members = members[np.argsort(local[members, minor_axis], kind="stable")]
                for col, k in enumerate(members):
                    idx[k] = (row, col)
            design = np.column_stack([np.ones(len(pts)), idx])
            coef, *_ = np.linalg.lstsq(design, pts, rcond=None)
            resid = pts - design @ coef
            rms = float(np.sqrt((resid**2).sum(axis=1).mean()))
            best = min(best, rms / spacing)
    return best


def triangle_orientation(points: np.ndarray) -> float:
    """Signed r-offset of the midrange from the mean, over the r-extent.

    A triangle whose apex points toward +r has its mass near the base, so
    the mean sits left of the midrange and the result is positive.
    """
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) < 3:
        return 0.0
    r = pts[:, 0]
    extent = r.max() - r.min()
    if extent == 0:
        return 0.0
    return float(((r.max() + r.min()) / 2 - r.mean()) / extent)


def mirror_distance(points: np.ndarray, axis: str) -> float:
    """Hausdorff distance to the mirror image, over the configuration diameter.

    ``axis="s"`` reflects r -> -r (mirror about the s-axis); ``axis="r"``
    reflects s -> -s.
    """
    pts = np.asarray(points, float).reshape(-1, 2)
    flip = pts * (np.array([-1.0, 1.0]) if axis == "s" else np.array([1.0, -1.0]))
    d = diameter(pts)
    return hausdorff(pts, flip) / d if d else math.inf


@dataclass
class PatternReport:
    partition: tuple
    t: float
    checks: list = field(default_factory=list)

    def add(self, name: str, passed: bool, metric: float, **extra) -> None:
        self.checks.append({"name": name, "pass": bool(passed), "metric": float(metric), **extra})

    def to_json(self) -> dict:
        return {"partition": list(self.partition), "t": self.t, "checks": self.checks}

    def passed(self, name: str) -> bool:
        return all(c["pass"] for c in self.checks if c["name"] == name)


@dataclass(frozen=True)
class PatternSettings:
    lattice_tol: float = 0.05
    mirror_tol: float = 0.05
    duality_tol: float = 0.05


def pattern_checks(
    pm: PeakMap,
    spec: SolutionSpec,
    settings: PatternSettings = PatternSettings(),
    partner: PeakMap | None = None,
) -> PatternReport:
    """Shape predicates for the single peaks of a classified map.

    ``partner`` is the single-peak map of the conjugate partition at the
    opposite time; when given, the duality check is added.
    """
    t = pm.t
    singles = pm.singles().positions() if any(p.kind != "unclassified" for p in pm.peaks) else pm.positions()
    tags = classify_special(spec.lam)
    report = PatternReport(spec.lam.parts, t)
    lam = spec.lam.parts
    if "rectangular" in tags:
        metric = lattice_fit(singles, spec.n, lam[0])
        report.add("lattice", metric <= settings.lattice_tol, metric, rows=spec.n, cols=lam[0])
    if tags & {"triangular", "trapezoidal"}:
        metric = triangle_orientation(singles)
        report.add("orientation", metric * math.copysign(1, t) > 0, metric, expected="+r" if t > 0 else "-r")
    if tags & {"odd", "even"} and t > 0:
        metric = mirror_distance(singles, "s")
        report.add("mirror_s_axis", metric <= settings.mirror_tol, metric)
    if "square" in tags and t > 0:
        metric = mirror_distance(singles, "r")
        report.add("mirror_r_axis", metric <= settings.mirror_tol, metric)
    if partner is not None:
        other = partner.singles().positions() if any(p.kind != "unclassified" for p in partner.peaks) else partner.positions()
        d = max(diameter(singles), diameter(other))
        metric = hausdorff(singles, other) / d if d else math.inf
        report.add("duality", metric <= settings.duality_tol, metric, partner=list(conjugate(spec.lam).parts))
        # Staircase shapes flip their triangle with the sign of t, so the
        # partner pattern is also compared after mirroring r -> -r.
        mirrored = hausdorff(singles, other * np.array([-1.0, 1.0])) / d if d else math.inf
        report.add("duality_mirrored", mirrored <= settings.duality_tol, mirrored, informational=True)
    if not report.checks:
        report.add("no_special_shape", True, 0.0, informational=True)
    return report


def scaling_ratio(points_a: np.ndarray, points_b: np.ndarray) -> tuple[float, np.ndarray]:
    """Optimal-matching ratio ||z_b|| / ||z_a|| for each matched pair."""
    rows, cols, _ = match_points(2 * np.asarray(points_a), np.asarray(points_b))
    a = np.asarray(points_a)[rows]
    b = np.asarray(points_b)[cols]
    na = np.hypot(a[:, 0], a[:, 1])
    nb = np.hypot(b[:, 0], b[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = nb / na
    return float(np.median(ratio)), ratio


def compare_maps(detected: PeakMap, predicted: PeakMap) -> dict:
    """One-to-one matching between detected and predicted peaks with summary stats."""
    a, b = detected.positions(), predicted.positions()
    if len(a) == 0 or len(b) == 0:
        return {"pairs": [], "mean": math.inf, "max": math.inf, "diameter": diameter(a), "relative_mean": math.inf}
    rows, cols, dist = match_points(a, b)
    diam = diameter(a)
    return {
        "pairs": [
            {"detected": a[i].tolist(), "predicted": b[j].tolist(), "distance": float(d)}
            for i, j, d in zip(rows, cols, dist)
        ],
        "mean": float(dist.mean()),
        "max": float(dist.max()),
        "diameter": diam,
        "relative_mean": float(dist.mean() / diam) if diam else math.inf,
        "unmatched_detected": int(len(a) - len(rows)),
        "unmatched_predicted": int(len(b) - len(cols)),
    }


def _polymul(a: list, b: list) -> list:
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _polyadd(a: list, b: list, sign: int = 1) -> list:
    # Coefficient lists are highest power first, so align on the right.
    size = max(len(a), len(b))
    a = [mpq(0)] * (size - len(a)) + list(a)
    b = [mpq(0)] * (size - len(b)) + list(b)
    return [x + sign * y for x, y in zip(a, b)]


def leading_schur_roots(spec: SolutionSpec, t: float) -> np.ndarray:
    """Roots in rho of the Jacobi-Trudi determinant ``det H_{lambda_i + j - i}(rho, nu)``.

    At leading order the single peaks sit at ``sqrt|t|`` times these roots,
    so they serve as a diagnostic and as extra Newton seeds.  The
    determinant is expanded exactly over the rationals before numpy finds
    the roots.
    """
    nu = nu_of_t(spec.omega, t)
    lam = spec.lam.parts[::-1]
    n = len(lam)
    entries = [[heat_poly(lam[i] + j - i).rho_coefficients(nu) if lam[i] + j - i >= 0 else [mpq(0)] for j in range(n)] for i in range(n)]
    memo: dict[tuple[int, tuple[int, ...]], list] = {}

    def minor(row: int, cols: tuple[int, ...]) -> list:
        if row == n:
            return [mpq(1)]
        key = (row, cols)
        if key not in memo:
            acc = [mpq(0)]
            for pos, col in enumerate(cols):
                term = _polymul(entries[row][col], minor(row + 1, cols[:pos] + cols[pos + 1:]))
                acc = _polyadd(acc, term, -1 if pos % 2 else 1)
            memo[key] = acc
        return memo[key]

    coeffs = minor(0, tuple(range(n)))
    while coeffs and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if len(coeffs) < 2:
        return np.array([], dtype=complex)
    return np.roots([float(c) for c in coeffs]).astype(complex)


def heat_roots(order: int, nu) -> np.ndarray:
    coeffs = [float(c) for c in heat_poly(order).rho_coefficients(nu)]
    return np.roots(coeffs)

