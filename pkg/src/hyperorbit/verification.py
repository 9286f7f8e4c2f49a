"""Desk-scale evidence for density claims.

Everything in this module is a cross-check written to be independent of the
steering planner's internals: `brute_force_orbit` multiplies generators the
pedestrian way, `coverage` counts grid cells in exact rational arithmetic,
`verify_lemmas` re-verifies the growth/limit/cone bounds at doubled
precision, and `density_experiment` re-measures every steering success with
a fresh word evaluation.  If the planner is wrong, something here goes red.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    MalformedInput,
    SteerNotFound,
)
from .matrices import (
    LowerTriangular,
    grid_scale,
    grid_sub,
    growth_lambda,
    identity_grid,
    mat_apply,
    normalized_inverse_limit,
    tri_inverse,
    tri_mul,
)
from .precision import working_dps
from .scalars import Field, as_mp
from .steering import OrbitWord, evaluate_word, synthesize_word
from .systems import SemigroupSystem, dumps_canonical

ENUM_CAP = 10_000_000  # hard ceiling on enumerated words per brute-force run
PROVENANCE_CAP = 10_000  # keep generating words only below this many words
MISS_SCAN_CAP = 1_000_000  # skip miss sampling on grids larger than this
MISS_SAMPLE = 16
TAU_DEDUP = mpf(10) ** -60  # merge resolution for orbit clouds
CONE_FLOOR = mpf(-100)  # log-magnitude the cone maxima must sink below


def _fmt(x) -> str:
    """Decimal string with enough digits to reproduce the binary value."""
    return mpmath.nstr(mpf(x), mp.dps + 8, strip_zeros=True)


def _coerce_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise MalformedInput(
            f"float {value!r} is not an exact rational; pass a string or Fraction"
        )
    try:
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise MalformedInput(f"not a rational: {value!r}") from exc


def _exact_fraction(x: mpf) -> Fraction:
    """The exact rational value of a finite binary float."""
    sign, man, exp, _ = mpf(x)._mpf_
    if man == 0:
        if x == 0:
            return Fraction(0)
        raise MalformedInput(f"coordinate {x!r} has no rational value")
    fr = Fraction(int(man)) * Fraction(2) ** exp
    return -fr if sign else fr


# ---------------------------------------------------------------------------
# Point clouds


@dataclass(frozen=True)
class PointCloud:
    """A finite sample of an orbit, deduplicated at TAU_DEDUP resolution.

    Points are rectangular coordinate tuples (mpf, or mpc for complex
    systems).  `words` aligns with `points` when the generating run was
    small enough to keep provenance, else it is None.
    """

    field: Field
    dimension: int
    points: tuple
    words: tuple | None = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def real_dimension(self) -> int:
        return self.dimension * (2 if self.field is Field.COMPLEX else 1)

    def realified(self, point) -> tuple:
        if self.field is Field.COMPLEX:
            out = []
            for c in point:
                z = mpmath.mpc(c)
                out.append(z.real)
                out.append(z.imag)
            return tuple(out)
        return tuple(mpf(c) for c in point)


def _realify(point, field: Field) -> tuple:
    if field is Field.COMPLEX:
        out = []
        for c in point:
            z = mpmath.mpc(c)
            out.append(z.real)
            out.append(z.imag)
        return tuple(out)
    return tuple(point)


class _Dedup:
    """Insertion-ordered point set at TAU_DEDUP resolution.

    Keys quantize each real coordinate to a tau-wide cell; a candidate is
    merged when an already-stored point sits within tau (sup norm) in its
    own or any adjacent cell.  Points farther apart than 2*tau are always
    kept distinct, so experiment-scale targets are never conflated.
    """

    def __init__(self, field: Field):
        self.field = field
        self.tau = TAU_DEDUP
        self.cells: dict = {}
        self.points: list = []
        self.words: list = []

    def _key(self, coords) -> tuple:
        return tuple(int(mpmath.floor(c / self.tau)) for c in coords)

    def add(self, point, word) -> None:
        coords = _realify(point, self.field)
        key = self._key(coords)
        for nb in itertools.product(*[(c - 1, c, c + 1) for c in key]):
            idx = self.cells.get(nb)
            if idx is None:
                continue
            other = _realify(self.points[idx], self.field)
            if all(abs(a - b) <= self.tau for a, b in zip(coords, other)):
                return
        self.cells[key] = len(self.points)
        self.points.append(point)
        self.words.append(word)


def brute_force_orbit(
    system: SemigroupSystem,
    p=None,
    word_shape=(1, 10, 10),
    cap: int = ENUM_CAP,
) -> PointCloud:
    """Every point B^{k_1} A^{l_1} ... B^{k_m} A^{l_m} p with the exponents
    ranging over the full boxes 0..k_max, 0..l_max.

    `word_shape` is (m, k_max, l_max).  Raises BudgetExceeded before doing
    any work if the word count ((k_max+1)(l_max+1))^m exceeds `cap`.
    Evaluation streams one stage at a time, deduplicating between stages
    (equal intermediate points generate identical futures).
    """
    try:
        m, k_max, l_max = (int(v) for v in word_shape)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"word_shape must be three integers: {word_shape!r}") from exc
    if m < 1 or k_max < 0 or l_max < 0:
        raise MalformedInput(f"word_shape out of range: {word_shape!r}")
    total = ((k_max + 1) * (l_max + 1)) ** m
    if total > cap:
        raise BudgetExceeded(
            f"{total} words exceed the enumeration cap {cap}",
        )
    if p is None:
        start = system.seed_rect()
    else:
        start = tuple(as_mp(v, system.field) for v in p)
        if len(start) != system.n:
            raise DimensionMismatch(
                f"start point has {len(start)} coordinates, system has {system.n}"
            )
    keep_words = total <= PROVENANCE_CAP
    a_grid = system.a.grid()
    b_diag = system.b.rect_diag()
    n = system.n

    def b_apply(x):
        return tuple(b_diag[i] * x[i] for i in range(n))

    def a_apply(x):
        return tuple(
            mpmath.fsum(a_grid[i][j] * x[j] for j in range(i + 1)) for i in range(n)
        )

    frontier = [(start, ())]
    for _ in range(m):
        dedup = _Dedup(system.field)
        for point, suffix in frontier:
            w = point
            for l in range(l_max + 1):
                v = w
                for k in range(k_max + 1):
                    dedup.add(v, ((k, l),) + suffix if keep_words else None)
                    if k < k_max:
                        v = b_apply(v)
                if l < l_max:
                    w = a_apply(w)
        frontier = list(zip(dedup.points, dedup.words))
    points = tuple(pt for pt, _ in frontier)
    words = tuple(OrbitWord(wd) for _, wd in frontier) if keep_words else None
    return PointCloud(system.field, n, points, words)


# ---------------------------------------------------------------------------
# Coverage


@dataclass(frozen=True)
class CoverageReport:
    """Cell-counting summary of a cloud against a rational grid.

    `box` holds per-axis (lo, hi) interval endpoints over the realified
    coordinates, `cell` the common cell width; all exact rationals.  Cells
    are half-open [lo + i*cell, lo + (i+1)*cell) except the last on each
    axis, which closes at hi.  `misses` samples up to 16 uncovered cell
    centers in lexicographic order.
    """

    box: tuple
    cell: Fraction
    cells_total: int
    cells_hit: int
    fraction: Fraction
    misses: tuple

    def to_jsonable(self) -> dict:
        return {
            "box": [[list(_rat(lo)), list(_rat(hi))] for lo, hi in self.box],
            "cell": list(_rat(self.cell)),
            "cells_total": self.cells_total,
            "cells_hit": self.cells_hit,
            "fraction": list(_rat(self.fraction)),
            "misses": [
                [list(_rat(c)) for c in center] for center in self.misses
            ],
        }


def _rat(fr: Fraction) -> tuple[int, int]:
    return (fr.numerator, fr.denominator)


def coverage(cloud: PointCloud, box, cell) -> CoverageReport:
    """Fraction of grid cells over `box` containing at least one cloud point.

    `box` lists one exact (lo, hi) interval per real axis — complex clouds
    count as R^{2n}, real parts before imaginary parts per coordinate.
    Interval lengths must be integer multiples of `cell`.  Cell membership
    is decided in exact rational arithmetic from the binary value of each
    coordinate, so boundary points land deterministically.
    """
    cellf = _coerce_fraction(cell)
    if cellf <= 0:
        raise MalformedInput(f"cell width must be positive: {cell!r}")
    axes = []
    for lo, hi in box:
        lof, hif = _coerce_fraction(lo), _coerce_fraction(hi)
        if not lof < hif:
            raise MalformedInput(f"empty box axis: [{lo!r}, {hi!r}]")
        axes.append((lof, hif))
    d = cloud.real_dimension
    if len(axes) != d:
        raise DimensionMismatch(
            f"box has {len(axes)} axes but the cloud spans R^{d}"
        )
    counts = []
    for lof, hif in axes:
        per = (hif - lof) / cellf
        if per.denominator != 1:
            raise MalformedInput(
                f"axis [{lof}, {hif}] is not a whole number of cells of width {cellf}"
            )
        counts.append(int(per))
    cells_total = 1
    for c in counts:
        cells_total *= c
    # Coarse binary prefilter: anything out of the box by more than one
    # unit is rejected without exact arithmetic.
    lo_f = [mpf(a.numerator) / a.denominator - 1 for a, _ in axes]
    hi_f = [mpf(b.numerator) / b.denominator + 1 for _, b in axes]
    hit = set()
    for point in cloud.points:
        coords = _realify(point, cloud.field)
        if any(c < lo_f[i] or c > hi_f[i] for i, c in enumerate(coords)):
            continue
        idx = []
        for i, c in enumerate(coords):
            fr = _exact_fraction(c)
            lof, hif = axes[i]
            if fr < lof or fr > hif:
                idx = None
                break
            q = (fr - lof) // cellf
            if q == counts[i]:  # exactly on the closed upper edge
                q -= 1
            idx.append(int(q))
        if idx is not None:
            hit.add(tuple(idx))
    misses = []
    if cells_total <= MISS_SCAN_CAP and len(hit) < cells_total:
        half = Fraction(1, 2)
        for combo in itertools.product(*[range(c) for c in counts]):
            if combo not in hit:
                misses.append(
                    tuple(axes[i][0] + (combo[i] + half) * cellf for i in range(d))
                )
                if len(misses) >= MISS_SAMPLE:
                    break
    return CoverageReport(
        box=tuple(axes),
        cell=cellf,
        cells_total=cells_total,
        cells_hit=len(hit),
        fraction=Fraction(len(hit), cells_total),
        misses=tuple(misses),
    )


# ---------------------------------------------------------------------------
# Lemma audits


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    passed: bool
    details: dict

    def to_jsonable(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


@dataclass(frozen=True)
class LemmaReport:
    kind: str  # "system" or "matrix"
    field: Field
    dimension: int
    depth: int
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind,
            "field": self.field.value,
            "dimension": self.dimension,
            "depth": self.depth,
            "passed": self.passed,
            "checks": [c.to_jsonable() for c in self.checks],
        }


def _cone_decay_check(system: SemigroupSystem, bound: int, cap: int) -> LemmaCheck:
    """Adjacent precedence links: when the faster pair (c, d) stays bounded,
    the slower pair (a, b) must sink.

    For every (m, n) with m, n <= cap and |c^m d^n| <= bound, the admissible
    n satisfies n <= (ln M - m ln|c|) / ln|d|, which forces

        m ln|a| + n ln|b| <= m (ln|a| - ln|b| ln|c|/ln|d|) + ln M ln|b|/ln|d|,

    a line with negative slope.  The check walks the whole cone, confirms
    the bound pointwise, and confirms the per-m cone maximum drops below
    CONE_FLOOR for every m past the crossing index of that line.
    """
    n_dim = system.n
    links = []
    ok = True
    ln_m = mpmath.ln(mpf(bound))
    slack = mpf(10) ** (-(mp.dps // 2))
    for j in range(1, n_dim):
        upper = system.pair(j)  # stays bounded
        lower = system.pair(j + 1)  # must decay
        ln_a, ln_b = lower.a.log_mag, lower.b.log_mag
        ln_c, ln_d = upper.a.log_mag, upper.b.log_mag
        entry = {"link": [j + 1, j]}
        if not (ln_a < 0 < ln_b and ln_c < 0 < ln_d):
            entry.update(passed=False, reason="moduli not contracting/expanding")
            ok = False
            links.append(entry)
            continue
        if not ln_a / ln_b < ln_c / ln_d:
            entry.update(passed=False, reason="precedence order violated")
            ok = False
            links.append(entry)
            continue
        slope = ln_a - ln_b * ln_c / ln_d  # negative under precedence
        offset = ln_m * ln_b / ln_d
        threshold = int(mpmath.floor((CONE_FLOOR - offset) / slope)) + 1
        checked = 0
        max_slack = mpf("-inf")
        tail_max = mpf("-inf")
        violation = None
        tail_violation = None
        for mm in range(cap + 1):
            n_hi = (ln_m - mm * ln_c) / ln_d
            nn_max = min(cap, int(mpmath.floor(n_hi)))
            if nn_max < 0:
                continue
            line = mm * slope + offset
            value = mm * ln_a
            row_max = mpf("-inf")
            for nn in range(nn_max + 1):
                checked += 1
                gap = value - line
                if gap > max_slack:
                    max_slack = gap
                if gap > slack and violation is None:
                    violation = [mm, nn]
                if value > row_max:
                    row_max = value
                value += ln_b
            if mm >= threshold:
                if row_max > tail_max:
                    tail_max = row_max
                if row_max >= CONE_FLOOR and tail_violation is None:
                    tail_violation = mm
        passed = violation is None and tail_violation is None
        entry.update(
            passed=passed,
            pairs_checked=checked,
            threshold_m=threshold,
            max_slack=_fmt(max_slack),
            tail_max=(None if mpmath.isinf(tail_max) else _fmt(tail_max)),
        )
        if violation is not None:
            entry["violation_at"] = violation
        if tail_violation is not None:
            entry["tail_violation_at_m"] = tail_violation
        ok = ok and passed
        links.append(entry)
    return LemmaCheck(
        name="cone-decay",
        passed=ok,
        details={"bound": bound, "cap": cap, "links": links},
    )


def _growth_check(a: LowerTriangular, depth: int) -> LemmaCheck:
    """Certified envelope: |(A^l)_{ij}| <= lambda |A_i|^l and
    |(A^{-l})_{ij}| <= lambda |A_j|^{-l} for 1 <= l <= depth,
    measured at doubled precision against the base-precision lambda."""
    cert = growth_lambda(a)
    lam = cert.lambda_
    n = a.n
    witness = None
    max_ratio = mpf(0)
    with working_dps(mp.dps * 2):
        grid = a.grid()
        inv = tri_inverse(grid)
        moduli = [abs(e.to_rect()) for e in a.diag]
        slack = 1 + mpf(10) ** (-(mp.dps // 4))
        fwd = list(grid)
        bwd = list(inv)
        pow_f = list(moduli)  # |A_i|^l
        pow_b = [1 / m_j for m_j in moduli]  # |A_j|^{-l}
        for l in range(1, depth + 1):
            for i in range(n):
                for j in range(i + 1):
                    r_f = abs(fwd[i][j]) / (lam * pow_f[i])
                    r_b = abs(bwd[i][j]) / (lam * pow_b[j])
                    worst = max(r_f, r_b)
                    if worst > max_ratio:
                        max_ratio = worst
                    if worst > slack and witness is None:
                        witness = [l, i, j, _fmt(worst)]
            if l < depth:
                fwd = tri_mul(fwd, grid)
                bwd = tri_mul(bwd, inv)
                pow_f = [pf * m_i for pf, m_i in zip(pow_f, moduli)]
                pow_b = [pb / m_j for pb, m_j in zip(pow_b, moduli)]
    details = {
        "lambda": _fmt(lam),
        "depth": depth,
        "max_ratio": _fmt(max_ratio),
    }
    if witness is not None:
        details["violation"] = witness
    return LemmaCheck(name="growth-envelope", passed=witness is None, details=details)


def _limit_check(a: LowerTriangular, depth: int) -> LemmaCheck:
    """Normalized inverse powers: ||(A_1 A^{-1})^l - limit|| <= C rate^l for
    l <= depth, and the limit column solved two independent ways agrees to
    DELTA_CMP.  The reference limit is recomputed at doubled precision so
    the geometric bound stays meaningful even when rate^depth is tiny."""
    lim_base = normalized_inverse_limit(a)
    n = a.n
    witness = None
    max_excess = mpf(0)
    col_gap = mpf(0)
    delta_cmp = mpf(10) ** -30
    with working_dps(mp.dps * 2):
        lim = normalized_inverse_limit(a)
        grid = a.grid()
        g = grid_scale(tri_inverse(grid), a.diag[0].to_rect())
        slack = 1 + mpf(10) ** (-(mp.dps // 4))
        p = g
        for l in range(1, depth + 1):
            dist = mpf(0)
            for i in range(n):
                for j in range(n):
                    ref = lim.full_limit[i][j] if j <= i else mpf(0)
                    d_ij = abs(p[i][j] - ref)
                    if d_ij > dist:
                        dist = d_ij
            bound = lim.growth_const * lim.rate**l
            if n == 1:
                ok_l = dist == 0
                ratio = mpf(0)
            else:
                ratio = dist / bound
                ok_l = ratio <= slack
            if ratio > max_excess:
                max_excess = ratio
            if not ok_l and witness is None:
                witness = [l, _fmt(dist), _fmt(bound)]
            if l < depth:
                p = tri_mul(p, g)
        # Independent route to the limit column: invert (F - I) explicitly
        # instead of forward-solving (I - F), and compare at base precision.
        if n > 1:
            f_minus_i = grid_sub(lim.f_block, identity_grid(n - 1))
            alt = mat_apply(tri_inverse(f_minus_i), lim.h_col)
            for v_base, v_alt in zip(lim_base.limit_col, alt):
                gap = abs(v_base - (-v_alt))
                if gap > col_gap:
                    col_gap = gap
    passed = witness is None and col_gap <= delta_cmp
    details = {
        "rate": _fmt(lim_base.rate),
        "growth_const": _fmt(lim_base.growth_const),
        "depth": depth,
        "max_excess": _fmt(max_excess),
        "limit_col_gap": _fmt(col_gap),
    }
    if witness is not None:
        details["violation"] = witness
    return LemmaCheck(name="inverse-limit", passed=passed, details=details)


def verify_lemmas(
    subject,
    depth: int = 50,
    *,
    cone_bound: int = 1000,
    cone_cap: int = 120,
) -> LemmaReport:
    """Audit the quantitative facts steering relies on.

    `subject` is a SemigroupSystem or a bare LowerTriangular.  Three checks
    for a system — cone decay across adjacent precedence links, the growth
    envelope, the normalized-inverse limit — and the latter two for a bare
    matrix.  All verdicts come from recomputation at doubled precision;
    failures carry witnessing indices in `details`.
    """
    if int(depth) < 1:
        raise MalformedInput(f"depth must be >= 1, got {depth!r}")
    depth = int(depth)
    if isinstance(subject, SemigroupSystem):
        checks = (
            _cone_decay_check(subject, cone_bound, cone_cap),
            _growth_check(subject.a, depth),
            _limit_check(subject.a, depth),
        )
        return LemmaReport("system", subject.field, subject.n, depth, checks)
    if isinstance(subject, LowerTriangular):
        checks = (
            _growth_check(subject, depth),
            _limit_check(subject, depth),
        )
        return LemmaReport("matrix", subject.field, subject.n, depth, checks)
    raise MalformedInput(
        f"expected a SemigroupSystem or LowerTriangular, got {type(subject).__name__}"
    )


# ---------------------------------------------------------------------------
# Density experiments


@dataclass(frozen=True)
class DensitySummary:
    """Batch steering outcome: per-target records plus aggregate statistics.

    Failures never raise; each failed target contributes a record with the
    planner's reason.  Every success is re-verified here by an independent
    word evaluation at doubled precision, and `reverify_max_gap` tracks the
    largest disagreement with the stored error (expected ~0).
    """

    total: int
    successes: int
    success_fraction: Fraction
    eps: str
    max_error: str | None
    max_total_exponent: int | None
    max_stage_exponent: int | None
    mean_total_exponent: Fraction | None
    failure_reasons: tuple
    reverified: bool
    reverify_max_gap: str
    records: tuple

    def to_jsonable(self) -> dict:
        return {
            "total": self.total,
            "successes": self.successes,
            "success_fraction": list(_rat(self.success_fraction)),
            "eps": self.eps,
            "max_error": self.max_error,
            "max_total_exponent": self.max_total_exponent,
            "max_stage_exponent": self.max_stage_exponent,
            "mean_total_exponent": (
                None
                if self.mean_total_exponent is None
                else list(_rat(self.mean_total_exponent))
            ),
            "failure_reasons": [list(item) for item in self.failure_reasons],
            "reverified": self.reverified,
            "reverify_max_gap": self.reverify_max_gap,
            "records": [dict(r) for r in self.records],
        }


def density_experiment(
    system: SemigroupSystem,
    p,
    targets,
    eps,
    budget=None,
) -> DensitySummary:
    """Steer toward every target and tally what happened.

    `p` overrides the system seed when given.  Per-target steering failures
    are aggregated into records and reason counts instead of raising, so a
    partial sweep still produces a full report.
    """
    targets = list(targets)
    if not targets:
        raise MalformedInput("density_experiment needs at least one target")
    sys2 = system.with_seed(p) if p is not None else system
    eps_f = mpf(str(eps)) if isinstance(eps, (int, float, str)) else mpf(eps)
    records = []
    reasons: dict[str, int] = {}
    errors = []
    totals = []
    stage_maxes = []
    successes = 0
    reverified = True
    max_gap = mpf(0)
    for index, target in enumerate(targets):
        try:
            res = synthesize_word(sys2, target, eps_f, budget)
        except (SteerNotFound, BudgetExceeded) as exc:
            diag = dict(getattr(exc, "diagnostics", None) or {})
            reason = str(diag.get("reason", type(exc).__name__))
            reasons[reason] = reasons.get(reason, 0) + 1
            rec = {"index": index, "status": "fail", "reason": reason}
            if "stage" in diag:
                rec["stage"] = diag["stage"]
            if "nodes" in diag:
                rec["nodes"] = diag["nodes"]
            records.append(rec)
            continue
        base_prec = mp.prec  # stored errors are rounded to this precision
        with working_dps(mp.dps * 2):
            want = tuple(as_mp(v, sys2.field) for v in target)
            got = evaluate_word(sys2, res.word)
            err2 = max(abs(g - w) for g, w in zip(got, want))
            gap = abs(err2 - res.error)
            ulp = mpmath.ldexp(max(err2, res.error, mpf(10) ** (-mp.dps)), 1 - base_prec)
            ok = gap <= 2 * ulp
        reverified = reverified and ok
        if gap > max_gap:
            max_gap = gap
        successes += 1
        total_exp = res.word.total_exponent
        stage_max = max(max(k, l) for k, l in res.word.stages)
        totals.append(total_exp)
        stage_maxes.append(stage_max)
        errors.append(res.error)
        records.append(
            {
                "index": index,
                "status": "ok",
                "error": _fmt(res.error),
                "total_exponent": total_exp,
                "stages": len(res.word.stages),
                "nodes": res.nodes,
            }
        )
    return DensitySummary(
        total=len(targets),
        successes=successes,
        success_fraction=Fraction(successes, len(targets)),
        eps=_fmt(eps_f),
        max_error=_fmt(max(errors)) if errors else None,
        max_total_exponent=max(totals) if totals else None,
        max_stage_exponent=max(stage_maxes) if stage_maxes else None,
        mean_total_exponent=(
            Fraction(sum(totals), len(totals)) if totals else None
        ),
        failure_reasons=tuple(sorted(reasons.items())),
        reverified=reverified,
        reverify_max_gap=_fmt(max_gap),
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# Cloud IO


def cloud_to_jsonable(cloud: PointCloud) -> dict:
    def coord(c):
        if cloud.field is Field.COMPLEX:
            z = mpmath.mpc(c)
            return [_fmt(z.real), _fmt(z.imag)]
        return _fmt(c)

    return {
        "field": cloud.field.value,
        "dimension": cloud.dimension,
        "points": [[coord(c) for c in point] for point in cloud.points],
        "words": (
            None
            if cloud.words is None
            else [w.to_jsonable() for w in cloud.words]
        ),
    }


def cloud_from_jsonable(obj: dict) -> PointCloud:
    try:
        field = Field(obj["field"])
        dimension = int(obj["dimension"])
        raw_points = obj["points"]
        raw_words = obj.get("words")
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad point-cloud payload: {exc}") from exc

    def coord(c):
        if field is Field.COMPLEX:
            return mpmath.mpc(mpf(c[0]), mpf(c[1]))
        return mpf(c)

    points = tuple(tuple(coord(c) for c in row) for row in raw_points)
    for row in points:
        if len(row) != dimension:
            raise MalformedInput("point arity does not match the cloud dimension")
    words = (
        None
        if raw_words is None
        else tuple(OrbitWord(tuple((int(k), int(l)) for k, l in w)) for w in raw_words)
    )
    return PointCloud(field, dimension, points, words)


def save_cloud_json(path, cloud: PointCloud) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(cloud_to_jsonable(cloud)))


def load_cloud_json(path) -> PointCloud:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"not JSON: {path}") from exc
    return cloud_from_jsonable(obj)


def save_cloud_csv(path, cloud: PointCloud) -> None:
    """One point per row of decimal strings; complex coordinates expand to
    adjacent real/imaginary columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for point in cloud.points:
            writer.writerow([_fmt(c) for c in _realify(point, cloud.field)])


def load_cloud_csv(path, field: Field) -> PointCloud:
    """Inverse of save_cloud_csv.  Words are not stored in CSV, so the
    loaded cloud carries none."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append(row)
    if not rows:
        raise MalformedInput(f"empty point-cloud CSV: {path}")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MalformedInput("ragged point-cloud CSV")
    try:
        grid = [[mpf(v) for v in row] for row in rows]
    except ValueError as exc:
        raise MalformedInput(f"non-numeric CSV cell: {exc}") from exc
    if field is Field.COMPLEX:
        if width % 2:
            raise MalformedInput("complex CSV needs an even column count")
        points = tuple(
            tuple(mpmath.mpc(r[2 * i], r[2 * i + 1]) for i in range(width // 2))
            for r in grid
        )
        return PointCloud(field, width // 2, points)
    points = tuple(tuple(r) for r in grid)
    return PointCloud(field, width, points)
