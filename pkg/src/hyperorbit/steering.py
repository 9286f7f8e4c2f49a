"""Orbit steering: synthesize generator words that hit arbitrary targets.

Given a validated system and a target vector, ``synthesize_word`` produces a
word ``B^{k_1} A^{l_1} ... B^{k_m} A^{l_m}`` whose action on the seed lands
within ``eps`` of the target.  The construction runs backward through the
coordinates: the top stage picks exponents so that the deviation block of
``B^k A^l`` reproduces the ratio between the last and first target entries,
then hands the exactly back-substituted sub-target ``S^{-l} U^{-k} t`` down
to the next stage.  Every stage carries an explicit infinity-norm error
budget; the final word is re-evaluated at doubled precision before it is
returned, and a single refinement pass with a four-times-tighter plan runs
if the verified error is still too large.

``steer_affine`` reuses the same machinery for affine systems through the
one-dimension-higher lift and the projective chart, and cross-checks the
result against a direct affine reading of the same word.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import mpmath
from mpmath import mp, mpf

from .errors import (
    DimensionMismatch,
    PhiDivergence,
    PrecViolation,
    SeedFirstCoordinateZero,
    SteerNotFound,
)
from .matrices import (
    TAU_ZERO,
    LowerTriangular,
    growth_lambda,
    identity_grid,
    o_entry_closed_form,
    signed_accumulate,
    tri_mul,
    tri_pow,
)
from .precision import extra_dps, nstr
from .scalar_steering import SCAN_LIMIT, ScalarSolution, SearchBudget, steer_scalar
from .scalars import FieldElement, as_mp
from .systems import (
    AffineSystem,
    SemigroupSystem,
    lift_affine,
    phi,
    psi,
    translation_column,
)


# ---------------------------------------------------------------------------
# Words


@dataclass(frozen=True)
class OrbitWord:
    """A two-generator word, read left to right as B^{k_i} A^{l_i} factors.

    The rightmost factor acts on a vector first, so evaluation walks the
    stages in reverse.
    """

    stages: tuple[tuple[int, int], ...]

    def __post_init__(self):
        clean = []
        for stage in self.stages:
            k, l = stage
            if not isinstance(k, int) or not isinstance(l, int):
                raise TypeError("word exponents must be integers")
            if k < 0 or l < 0:
                raise ValueError("word exponents must be nonnegative")
            clean.append((k, l))
        object.__setattr__(self, "stages", tuple(clean))

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def total_exponent(self) -> int:
        return sum(k + l for k, l in self.stages)

    def to_jsonable(self) -> list:
        return [[k, l] for k, l in self.stages]


def evaluate_word(system: SemigroupSystem, word: OrbitWord, point=None) -> tuple:
    """Apply a word to a point (the system seed by default)."""
    if point is None:
        x = system.seed_rect()
    else:
        x = tuple(as_mp(v, system.field) for v in point)
        if len(x) != system.n:
            raise DimensionMismatch(
                f"point has {len(x)} coordinates, system has {system.n}"
            )
    for k, l in reversed(word.stages):
        x = system.a.pow_apply(l, x)
        x = system.b.pow_apply(k, x)
    return x


def evaluate_affine_word(system: AffineSystem, word: OrbitWord, point) -> tuple:
    """Apply a word in affine semantics: A-factors act as x -> Ax + v.

    The l-fold composite of x -> Ax + v is x -> A^l (x + w) - w for the
    translation column w = (A - I)^{-1} v, so each stage costs one matrix
    power regardless of its exponent.
    """
    x = tuple(as_mp(v, system.field) for v in point)
    if len(x) != system.n:
        raise DimensionMismatch(
            f"point has {len(x)} coordinates, system has {system.n}"
        )
    w = translation_column(system)
    for k, l in reversed(word.stages):
        if l:
            shifted = tuple(xi + wi for xi, wi in zip(x, w))
            moved = system.a.pow_apply(l, shifted)
            x = tuple(mi - wi for mi, wi in zip(moved, w))
        if k:
            x = system.b.pow_apply(k, x)
    return x


# ---------------------------------------------------------------------------
# Planning records


@dataclass(frozen=True)
class SteeringStage:
    """One planned stage: the chosen exponents and their error accounting.

    ``stage`` counts down from n-1 (outermost factor) to 0 (the seed drive).
    ``target`` is what this stage hands to the stages before it: the exactly
    back-substituted sub-target for stage >= 1, the required first
    coordinate for stage 0.  ``tolerance`` is the certified ceiling on the
    deviation entries this stage's exponents were filtered against: the
    drive corner stays within it of alpha, every other deviation entry
    stays below it outright.
    """

    stage: int
    k: int
    l: int
    alpha: object  # drive ratio t_{s+1} / t_1; None at stage 0
    omega: object  # normalized-inverse limit entry; None at stage 0
    tolerance: mpf  # infinity-norm budget for errors this stage injects
    scalar_error: mpf
    target: tuple
    surrogate: bool
    nodes: int

    def to_jsonable(self) -> dict:
        return {
            "stage": self.stage,
            "k": self.k,
            "l": self.l,
            "alpha": _rect_str(self.alpha) if self.alpha is not None else None,
            "omega": _rect_str(self.omega) if self.omega is not None else None,
            "tolerance": nstr(self.tolerance, 12),
            "scalar_error": nstr(self.scalar_error, 12),
            "surrogate": self.surrogate,
            "nodes": self.nodes,
        }


@dataclass(frozen=True)
class SteeringResult:
    """A verified word together with its planning trace.

    ``error`` is the infinity-norm distance from the achieved point to the
    target, recomputed at doubled working precision.  ``budget_bound`` is
    the a-priori bound the plan certifies: the sum of stage budgets, each
    amplified by the operator norms of the stages applied after it.
    """

    word: OrbitWord
    achieved: tuple
    error: mpf
    eps: mpf
    stages: tuple[SteeringStage, ...]
    nodes: int
    refined: bool
    surrogate: bool
    budget_bound: mpf
    extras: dict = dataclass_field(default_factory=dict)

    def to_jsonable(self) -> dict:
        trace = {
            "nodes": self.nodes,
            "refined": self.refined,
            "surrogate_first_coordinate": self.surrogate,
            "error_budget_bound": nstr(self.budget_bound, 12),
            "stages": [stage.to_jsonable() for stage in self.stages],
        }
        trace.update(self.extras)
        return {
            "word": self.word.to_jsonable(),
            "achieved": [_rect_str(v) for v in self.achieved],
            "error": nstr(self.error, 12),
            "eps": nstr(self.eps, 12),
            "trace": trace,
        }


def _rect_str(value):
    if isinstance(value, mpmath.mpc):
        return [nstr(value.real, 36), nstr(value.imag, 36)]
    return nstr(value, 36)


# ---------------------------------------------------------------------------
# The backward planner


def _leading_block(a: LowerTriangular, s: int) -> LowerTriangular:
    if s == a.n:
        return a
    return LowerTriangular.build(a.field, [list(row) for row in a.elements[:s]])


def _reach_closure(a: LowerTriangular) -> tuple:
    """Boolean reachability of matrix powers: entry (i, u) is True when
    (A^l)_{iu} can be nonzero for some l >= 0.  Structurally zero deviation
    entries need no suppression constraint, which matters a great deal for
    sparse families."""
    n = a.n
    reach = [[i == u or (u < i and not a.elements[i][u].is_zero) for u in range(n)]
             for i in range(n)]
    for _ in range(n):
        changed = False
        for i in range(n):
            for u in range(i):
                if not reach[i][u] and any(
                    reach[i][w] and reach[w][u] for w in range(u + 1, i)
                ):
                    reach[i][u] = True
                    changed = True
        if not changed:
            break
    return tuple(tuple(row) for row in reach)


def _factor_grid(system, k, l):
    """B^k A^l as a plain numeric grid: tri_pow row-scaled by the B powers."""
    a_pow = tri_pow(system.a.grid(), l)
    d = system.b.rect_diag()
    n = system.n
    return tuple(
        tuple(mpmath.power(d[i], k) * a_pow[i][j] for j in range(n))
        for i in range(n)
    )


_SCAN_NODE_SLICE = 250_000


def _stage_steer(pair, drive_target, tol, field, budget, nodes_used, stage,
                 min_n=0, candidate_ok=None, prefer_minimal=False,
                 max_m_cap=None, node_slice=None):
    """Run one scalar drive, preferring minimal exponents when asked.

    A capped exact scan runs first for minimal-exponent stages (small
    exponents keep the amplification passed down to later planning small);
    the convergent strategy takes over with the rest of the slice when the
    scan cannot reach the tolerance.  ``max_m_cap`` prunes the walk where
    the caller knows no deeper first exponent can pass its admissibility
    filter, and ``node_slice`` keeps one attempt from draining the budget
    other attempts still need.
    """
    remaining = budget.max_nodes - nodes_used
    if node_slice is not None:
        remaining = min(remaining, node_slice)
    if remaining <= 0:
        raise SteerNotFound(
            f"node budget exhausted before stage {stage}",
            diagnostics={"stage": stage, "reason": "max_nodes"},
        )
    max_m = budget.max_m if max_m_cap is None else min(budget.max_m, max_m_cap)
    target_el = FieldElement.from_rect(drive_target, field)
    scanned_nodes = 0
    if prefer_minimal and pair.field.value == "real":
        scan_budget = SearchBudget(
            min(max_m, SCAN_LIMIT),
            budget.max_n,
            min(remaining, _SCAN_NODE_SLICE),
        ).clamp()
        try:
            return steer_scalar(
                pair, target_el, tol, budget=scan_budget,
                strategy="scan", min_n=min_n, candidate_ok=candidate_ok,
            )
        except SteerNotFound as exc:
            scanned_nodes = (exc.diagnostics or {}).get("nodes", 0)
            diagnostics = dict(exc.diagnostics or {})
            if max_m <= scan_budget.max_m and diagnostics.get("reason") == "exhausted":
                # the scan walked every admissible first exponent already
                diagnostics.update(
                    {
                        "stage": stage,
                        "scalar_target": _rect_str(drive_target),
                        "scalar_tolerance": nstr(tol, 12),
                    }
                )
                raise SteerNotFound(
                    f"stage {stage}: {exc}", diagnostics=diagnostics
                ) from exc
            remaining -= scanned_nodes
            if remaining <= 0:
                raise SteerNotFound(
                    f"node budget exhausted during stage {stage}",
                    diagnostics={"stage": stage, "reason": "max_nodes",
                                 "nodes": scanned_nodes},
                ) from exc
    stage_budget = SearchBudget(max_m, budget.max_n, remaining).clamp()
    try:
        sol = steer_scalar(
            pair, target_el, tol, budget=stage_budget,
            min_n=min_n, candidate_ok=candidate_ok,
        )
    except SteerNotFound as exc:
        diagnostics = dict(exc.diagnostics or {})
        diagnostics["nodes"] = diagnostics.get("nodes", 0) + scanned_nodes
        diagnostics.update(
            {
                "stage": stage,
                "scalar_target": _rect_str(drive_target),
                "scalar_tolerance": nstr(tol, 12),
            }
        )
        raise SteerNotFound(f"stage {stage}: {exc}", diagnostics=diagnostics) from exc
    if scanned_nodes:
        sol = type(sol)(
            sol.m, sol.n, sol.achieved_error, sol.strategy,
            sol.nodes + scanned_nodes,
        )
    return sol


def _plan(system: SemigroupSystem, target, eps_plan, budget, nodes_used):
    """Choose stage exponents from the top coordinate down.

    Returns (word, stages, nodes_used, certified_bound).  The plan budget
    is a pool handed down stage by stage: each stage first tries half the
    remaining pool, and when no admissible exponents exist at that width it
    retries once with most of the pool before giving up.  A wide slice is
    cheap for the stages below it because their searches pay only
    logarithmically for a tighter tolerance, while the wider drive window
    can shrink the selected exponents by orders of magnitude, and the
    scalar error each stage feeds into the next scales with the pair value
    at those exponents.  Stage errors live in coordinates s+1..n only, so
    each coordinate's defect allowance is deflated by the exact column
    weight of the composed later-stage operator, computed numerically
    rather than through a worst-row bound.  The stage splits its drive
    allowance between the scalar tolerance (the big share), the
    finite-power limit deviation, and spill into the other deviation
    entries, then hands down the exact back-substitution of its sub-target.
    """
    n = system.n
    field = system.field
    lam_a = system.growth().lambda_
    limit = system.inverse_limit()
    log_b = [e.log_mag for e in system.b.elements]
    log_a = [e.log_mag for e in system.a.diag]
    b_rect = system.b.rect_diag()

    stages = []
    word_pairs = []
    after = identity_grid(n)  # composed later-stage factors, exact numbers
    certified = mpf(0)
    t = [as_mp(v, field) for v in target]
    reach = _reach_closure(system.a)

    def column_weight(c):
        return max(abs(after[i][c]) for i in range(n))

    pool = eps_plan

    for s in range(n - 1, 0, -1):
        omega = limit.limit_col[s - 1]
        omega_mag = abs(omega)
        c_lim = limit.growth_const
        rate = limit.rate
        lead = _leading_block(system.a, s)
        lam_s = growth_lambda(lead).lambda_

        # deviation entries (j, m) other than the drive corner are bounded
        # by s lam_A lam_S |B_{s+j}/B_m|^k |A_{s+j}/A_m|^l; an entry whose
        # every path through A-powers is structurally zero never shows up
        # and needs no constraint
        live = []
        cross_present = False
        for i in range(s, n):
            for m in range(s):
                if i == s and m == 0:
                    continue
                if not any(reach[i][u] for u in range(m, s)):
                    continue
                live.append((i, m))
                if i == s:
                    cross_present = True

        def attempt(eps_s, node_slice):
            # allowed defect per coordinate: later stages blow coordinate c
            # up by at most its column weight in the composed operator
            allow = [eps_s / ((n - s) * column_weight(c)) for c in range(s, n)]
            drive_allow = allow[0]

            # a zero leading coordinate cannot anchor the drive ratio; it
            # gets a shim small enough that the substitution itself costs at
            # most a quarter of the stage slice after amplification
            surrogate = t[0] == 0
            shim_cap = eps_s / (4 * max(mpf(1), column_weight(0)))
            exact_shim = surrogate and t[s] != 0
            t0 = shim_cap if surrogate else t[0]
            t_mag = abs(t0)
            t_max = max(max((abs(v) for v in t[:s]), default=mpf(0)), t_mag)
            envelope = s * s * lam_a * lam_s * t_max

            # drive-corner split: the scalar tolerance takes the big share
            # because it is the binding constraint (the limit deviation
            # fades geometrically in l and only moves the floor), and
            # surviving row-1 cross terms carve out their own room
            if cross_present:
                drive_share = drive_allow * 5 / mpf(8)
                dev_share = drive_allow / 8
                cross_room = drive_allow / 4
            else:
                drive_share = drive_allow * 3 / mpf(4)
                dev_share = drive_allow / 4
                cross_room = drive_allow

            spill_terms = []
            spill_ceiling = mpf(0)
            for i, m in live:
                j = i - s + 1
                room = cross_room if j == 1 else allow[j - 1]
                spill_terms.append(
                    (log_b[i] - log_b[m], log_a[i] - log_a[m],
                     mpmath.ln(room / envelope))
                )
                spill_ceiling = max(spill_ceiling, room / (s * t_max))

            # depth guard: the anchor handed down is later divided by the
            # composed column weight, and row i of this stage's factor grows
            # that weight by exp(k(ln|B_i|-ln|B_1|) + l(ln|A_i|-ln|A_1|))
            # relative to the anchor row.  A window of absolute width w is
            # first hit at exponents ~ 1/w, so candidates that would push
            # any downstream tolerance below practical reach are barred up
            # front rather than discovered as an exhausted search one stage
            # later.
            depth_cut = (16 * mpmath.ln(10)
                         + mpmath.ln(eps_s / (8 * column_weight(0) * t_mag)))
            for i in range(1, n):
                if reach[i][0]:
                    spill_terms.append(
                        (log_b[i] - log_b[0], log_a[i] - log_a[0], depth_cut))
            candidate_ok = None
            if spill_terms:
                frozen = tuple(spill_terms)

                def candidate_ok(k, l, _terms=frozen):
                    for lb, la, cut in _terms:
                        if k * lb + l * la > cut:
                            return False
                    return True

            if exact_shim:
                # the shim value is ours to choose, so invert the search:
                # take the smallest admissible exponents whose pair value
                # clears the magnitude threshold, then derive the shim from
                # the exact drive corner so this stage contributes no
                # targeting error at all
                l_g = 0
                if 2 * c_lim > omega_mag:
                    l_g = int(mpmath.ceil(
                        mpmath.ln(2 * c_lim / omega_mag) / mpmath.ln(1 / rate)))
                need = 2 * abs(t[s]) / (shim_cap * omega_mag)
                ln_need = mpmath.ln(need)
                pb = log_b[s] - log_b[0]
                pa = log_a[s] - log_a[0]
                pick = None
                for k in range(SCAN_LIMIT):
                    l = max(int(mpmath.ceil((ln_need - k * pb) / pa)), l_g, 1)
                    if candidate_ok is None or candidate_ok(k, l):
                        pick = (k, l)
                        break
                if pick is None:
                    raise SteerNotFound(
                        f"stage {s}: no admissible shim exponents",
                        diagnostics={"reason": "shim_filter", "stage": s},
                    )
                corner = o_entry_closed_form(system.a, system.b, s, *pick)
                t0_new = t[s] / corner
                sol = ScalarSolution(pick[0], pick[1], mpf(0), "derived", 0)
                return (sol, t[s] / t0_new, surrogate, t0_new, abs(t0_new),
                        eps_s * mpf(5) / 4, drive_share, dev_share,
                        spill_ceiling)

            spent = eps_s * mpf(5) / 4 if surrogate else eps_s
            alpha = t[s] / t0
            if alpha == 0:
                # nothing to reproduce in the drive corner: park the pair
                # value near a small positive level so the column stays quiet
                drive_target = 2 * (drive_share + dev_share) / (
                    3 * (omega_mag + c_lim) * t_mag)
                tol = drive_target / 2
                l_floor = 0
            else:
                drive_target = -alpha / omega
                # the limit deviation term (|alpha|/|omega|) C rate^l fits in
                # its share once l clears this floor, after which the drive
                # corner factor g_l is at most omega_mag + C rate^floor
                dev_need = c_lim * abs(t[s]) / (dev_share * omega_mag)
                l_floor = 0
                if dev_need > 1:
                    l_floor = int(mpmath.ceil(
                        mpmath.ln(dev_need) / mpmath.ln(1 / rate)))
                g_cap = omega_mag + c_lim * mpmath.power(rate, l_floor)
                tol = drive_share / (t_mag * g_cap)

            # admissible exponents track the drive line l = (ln|T| - k L_B)/L_A,
            # along which every filter form is affine in k; terms that tighten
            # with k bound the last first-exponent worth visiting, letting the
            # search stop instead of enumerating rejections to the node cap
            line_b = log_b[s] - log_b[0]
            line_a = log_a[s] - log_a[0]
            ln_drive = mpmath.ln(abs(drive_target))
            k_cap = None
            for lb_i, la_i, cut in spill_terms:
                slope = lb_i - line_b * la_i / line_a
                if slope <= 0:
                    continue
                room = (cut - ln_drive * la_i / line_a
                        + 2 * (abs(la_i) + abs(lb_i)) + 2)
                cap_i = 0 if room < 0 else int(mpmath.floor(room / slope)) + 1
                k_cap = cap_i if k_cap is None else min(k_cap, cap_i)

            sol = _stage_steer(
                system.pair(s + 1), drive_target, tol, field, budget,
                nodes_used, stage=s, min_n=l_floor, candidate_ok=candidate_ok,
                prefer_minimal=True, max_m_cap=k_cap, node_slice=node_slice,
            )
            return (sol, alpha, surrogate, t0, t_mag, spent, drive_share,
                    dev_share, spill_ceiling)

        # a surrogate substitution costs an extra quarter-slice, so its
        # wide retry leaves proportionally more of the pool behind
        wide = pool * (mpf(7) / 10 if t[0] == 0 else mpf(7) / 8)
        outcome = None
        for eps_s, node_slice in ((pool / 2, _SCAN_NODE_SLICE * 2), (wide, None)):
            try:
                outcome = attempt(eps_s, node_slice)
                break
            except SteerNotFound as exc:
                nodes_used += (exc.diagnostics or {}).get("nodes", 0)
                if (exc.diagnostics or {}).get("reason") == "max_nodes":
                    raise
                stage_fail = exc
        if outcome is None:
            raise stage_fail
        (sol, alpha, surrogate, t0, t_mag, spent, drive_share, dev_share,
         spill_ceiling) = outcome
        nodes_used += sol.nodes
        t[0] = t0
        k, l = sol.m, sol.n

        # hand the preserved block down exactly: z = S^{-l} U^{-k} t_{1..s}
        unscaled = tuple(t[m] * mpmath.power(b_rect[m], -k) for m in range(s))
        z = lead.inverse_pow_apply(l, unscaled)

        stage_tol = max((drive_share + dev_share) / t_mag, spill_ceiling)
        stages.append(
            SteeringStage(
                stage=s, k=k, l=l, alpha=alpha, omega=omega,
                tolerance=stage_tol, scalar_error=sol.achieved_error,
                target=tuple(z), surrogate=surrogate, nodes=sol.nodes,
            )
        )
        word_pairs.append((k, l))
        certified += spent
        pool -= spent
        after = tri_mul(after, _factor_grid(system, k, l))
        t = list(z)

    # seed stage: drive (B_1, A_1) itself so the first coordinate of
    # B^k A^l p, which is exactly B_1^k A_1^l p_1, lands on the sub-target;
    # whatever the earlier stages left unspent is all ours
    eps_0 = pool
    p = system.seed_rect()
    p1 = p[0]
    z0 = t[0]
    sum_p = signed_accumulate([abs(v) for v in p])
    allow = [eps_0 / (n * column_weight(c)) for c in range(n)]

    tail_terms = tuple(
        # coordinate j of B^k A^l p is bounded by lam_A |B_j|^k |A_j|^l sum|p|
        (log_b[j], log_a[j], mpmath.ln(allow[j] / (lam_a * sum_p)))
        for j in range(1, n)
    )
    candidate_ok = None
    if tail_terms:

        def candidate_ok(k, l, _terms=tail_terms):
            for lb, la, cut in _terms:
                if k * lb + l * la > cut:
                    return False
            return True

    surrogate0 = z0 == 0
    if surrogate0:
        drive_target = allow[0] / (3 * abs(p1))
        tol = drive_target / 2
    else:
        drive_target = z0 / p1
        tol = allow[0] / (2 * abs(p1))

    sol = _stage_steer(
        system.pair(1), drive_target, tol, field, budget, nodes_used,
        stage=0, candidate_ok=candidate_ok,
    )
    nodes_used += sol.nodes
    stages.append(
        SteeringStage(
            stage=0, k=sol.m, l=sol.n, alpha=None, omega=None,
            tolerance=allow[0] / abs(p1), scalar_error=sol.achieved_error,
            target=(z0,), surrogate=surrogate0, nodes=sol.nodes,
        )
    )
    word_pairs.append((sol.m, sol.n))
    certified += eps_0

    return OrbitWord(tuple(word_pairs)), tuple(stages), nodes_used, certified


def _verified_error(system, word, target):
    """Achieved point at working precision plus the error re-measured at
    doubled precision (the seed re-rectangularizes from its exact form)."""
    achieved = evaluate_word(system, word)
    with extra_dps(mp.dps):
        high = evaluate_word(system, word)
        wanted = [as_mp(v, system.field) for v in target]
        error = mpf(0)
        for got, want in zip(high, wanted):
            gap = abs(got - want)
            if gap > error:
                error = gap
    return achieved, +error


def synthesize_word(system: SemigroupSystem, target, eps, budget=None) -> SteeringResult:
    """Find a word driving the seed to within eps of the target vector.

    The target may have a zero first coordinate; the plan then aims at a
    small positive shim instead (recorded on the result as ``surrogate``)
    and the overall budget is halved to absorb the substitution.  Raises
    SteerNotFound when a stage search exhausts its budget or the verified
    error still exceeds eps after one refinement pass.
    """
    if not system.validation().accepted:
        raise PrecViolation("system failed validation; refusing to steer")
    if system.seed[0].is_zero:
        raise SeedFirstCoordinateZero(
            "the seed must have a nonzero first coordinate"
        )
    eps = mpf(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    y = tuple(as_mp(v, system.field) for v in target)
    if len(y) != system.n:
        raise DimensionMismatch(
            f"target has {len(y)} coordinates, system has {system.n}"
        )
    budget = (budget or SearchBudget()).clamp()

    surrogate_top = y[0] == 0
    eps_eff = eps / 2 if surrogate_top else mpf("0.9") * eps
    nodes = 0
    last_error = None
    for attempt, scale in enumerate((mpf(1), mpf(4))):
        word, stages, nodes, bound = _plan(system, y, eps_eff / scale, budget, nodes)
        achieved, error = _verified_error(system, word, y)
        if error < eps:
            return SteeringResult(
                word=word,
                achieved=achieved,
                error=error,
                eps=eps,
                stages=stages,
                nodes=nodes,
                refined=attempt > 0,
                surrogate=surrogate_top or any(st.surrogate for st in stages),
                budget_bound=bound,
            )
        last_error = error
    raise SteerNotFound(
        f"verified error {nstr(last_error, 8)} exceeds eps after refinement",
        diagnostics={
            "reason": "verified_error",
            "verified_error": nstr(last_error, 12),
            "eps": nstr(eps, 12),
        },
    )


# ---------------------------------------------------------------------------
# Affine steering through the lift


_LIFT_CACHE = "_steering_lift_cache"


def _lifted_system(system: AffineSystem) -> SemigroupSystem:
    cached = getattr(system, _LIFT_CACHE, None)
    if cached is None:
        cached = lift_affine(system)
        setattr(system, _LIFT_CACHE, cached)
    return cached


def steer_affine(system: AffineSystem, point, target, eps, budget=None) -> SteeringResult:
    """Drive an affine orbit point to within eps of the target.

    Plans in the lifted linear system with seed (1, point) and target
    (1, target), then reads the result back through the projective chart.
    The same word is also evaluated directly in affine semantics and the
    two readings are compared; their gap is reported in the trace.
    """
    if not system.validation().accepted:
        raise PrecViolation("affine system failed validation; refusing to steer")
    eps = mpf(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = system.n
    p = tuple(as_mp(v, system.field) for v in point)
    y = tuple(as_mp(v, system.field) for v in target)
    if len(p) != n or len(y) != n:
        raise DimensionMismatch(
            f"point and target must both have {n} coordinates"
        )

    seeded = _lifted_system(system).with_seed(psi(p))
    y_norm = max(abs(v) for v in y)
    eps_lift = min(eps / (2 * (1 + y_norm)), mpf(1) / 4)
    inner = synthesize_word(seeded, psi(y), eps_lift, budget)

    if abs(inner.achieved[0]) <= TAU_ZERO:
        raise PhiDivergence(
            "lifted word landed on the chart boundary; cannot project"
        )
    achieved = phi(inner.achieved)
    with extra_dps(mp.dps):
        high = evaluate_word(seeded, inner.word)
        projected = phi(high)
        wanted = [as_mp(v, system.field) for v in target]
        error = mpf(0)
        for got, want in zip(projected, wanted):
            gap = abs(got - want)
            if gap > error:
                error = gap
        direct = evaluate_affine_word(system, inner.word, point)
        consistency = mpf(0)
        for got, want in zip(direct, projected):
            gap = abs(got - want)
            if gap > consistency:
                consistency = gap
    error = +error
    consistency = +consistency
    if error >= eps:
        raise SteerNotFound(
            f"projected error {nstr(error, 8)} exceeds eps",
            diagnostics={
                "reason": "projected_error",
                "projected_error": nstr(error, 12),
                "eps": nstr(eps, 12),
            },
        )
    extras = {
        "chart_first_coordinate": _rect_str(inner.achieved[0]),
        "affine_consistency_gap": nstr(consistency, 12),
        "lift_eps": nstr(mpf(eps_lift), 12),
    }
    return SteeringResult(
        word=inner.word,
        achieved=achieved,
        error=error,
        eps=eps,
        stages=inner.stages,
        nodes=inner.nodes,
        refined=inner.refined,
        surrogate=inner.surrogate,
        budget_bound=inner.budget_bound,
        extras=extras,
    )
