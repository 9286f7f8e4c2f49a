"""Scalar orbit steering: drive a^m b^n next to a target value.

For a certified pair the products a^m b^n trace a line in log-magnitude
space, m*ln|a| + n*ln|b|, whose residues hit any window infinitely often.
Steering picks nonnegative exponents placing the product within eps of a
target, minimizing m + n (ties: smallest m, then n).

Two interchangeable strategies produce identical answers:

* ``scan`` walks m upward; for each m the admissible n form a short integer
  interval computed from the log window, so work per m is O(1).  Since
  m + n_min(m) is strictly increasing, the walk stops as soon as no later m
  can beat the best sum found.
* ``convergent`` phrases the window hit m*gamma + c near an integer
  (gamma = -ln|a|/ln|b|) and jumps straight between hit times with the
  three-distance renormalization in :mod:`hyperorbit.diophantine`.  It
  reaches exponents in the millions where the scan would grind.

Real pairs filter candidates by sign parity, complex pairs by the actual
rectangular distance (a phase test is implicit in it).  Every returned
solution is re-verified by rectangular evaluation at doubled precision
before it is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import mpmath
from mpmath import mp, mpc, mpf

from .diophantine import frac01, iter_entries
from .errors import SteerNotFound, ZeroModulus
from .pairs import GeneratingPair
from .precision import extra_dps
from .scalars import Field, FieldElement, two_pi

SCAN_LIMIT = 4096  # auto strategy: scan below, convergent jumps above


@dataclass(frozen=True)
class SearchBudget:
    # Exponent caps are sanity rails, not the effective resource guard:
    # the convergent strategy reaches depth d in O(log d) work, and staged
    # multi-coordinate drives legitimately need very deep exponents, so the
    # node cap is what actually meters the search.
    max_m: int = 10**18
    max_n: int = 10**18
    max_nodes: int = 5_000_000

    def clamp(self) -> "SearchBudget":
        if min(self.max_m, self.max_n, self.max_nodes) < 0:
            raise ValueError("budget bounds must be nonnegative")
        return self


@dataclass(frozen=True)
class ScalarSolution:
    m: int
    n: int
    achieved_error: mpf
    strategy: str
    nodes: int


@dataclass
class _Window:
    """One admissible magnitude band: ln|product| in [log_lo, log_hi].

    ``sign`` is the required product sign over R (0 means unconstrained,
    which is the complex case).  ``log_lo`` may be None for a band reaching
    down to zero (only when eps overlaps the origin).
    """

    sign: int
    log_lo: mpf | None
    log_hi: mpf

    def n_bounds(self, m: int, la: mpf, lb: mpf) -> tuple[int, int]:
        hi = int(mpmath.floor((self.log_hi - m * la) / lb))
        if self.log_lo is None:
            return 0, hi
        lo = int(mpmath.ceil((self.log_lo - m * la) / lb))
        return lo, hi


class _Search:
    def __init__(self, pair: GeneratingPair, target: FieldElement, eps, budget,
                 min_m: int, min_n: int, candidate_ok):
        self.pair = pair
        self.eps = mpf(eps)
        self.budget = budget
        self.min_m = min_m
        self.min_n = min_n
        self.candidate_ok = candidate_ok
        self.real = pair.field is Field.REAL
        self.la = pair.a.log_mag
        self.lb = pair.b.log_mag
        self.sa = pair.a.sign
        self.sb = pair.b.sign
        self.pa = pair.a.phase_value() if not self.real else None
        self.pb = pair.b.phase_value() if not self.real else None
        self.t_rect = target.to_rect()
        self.target = target
        self.nodes = 0
        self.best: tuple[int, int, int] | None = None  # (m+n, m, n)
        self.best_err: mpf | None = None
        self.windows = self._windows()

    def _windows(self) -> list[_Window]:
        eps, t = self.eps, self.t_rect
        out: list[_Window] = []
        if self.real:
            for s in (1, -1):
                hi = s * t + eps
                if hi <= 0:
                    continue
                lo = s * t - eps
                out.append(_Window(s, mpmath.ln(lo) if lo > 0 else None, mpmath.ln(hi)))
        else:
            hi = abs(t) + eps
            lo = abs(t) - eps
            out.append(_Window(0, mpmath.ln(lo) if lo > 0 else None, mpmath.ln(hi)))
        return out

    # -- candidate admission ------------------------------------------------

    def _spend(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget.max_nodes:
            raise SteerNotFound(
                "node budget exhausted",
                diagnostics=self._diagnostics("max_nodes"),
            )

    def _distance(self, m: int, n: int) -> mpf:
        lmag = m * self.la + n * self.lb
        if self.real:
            s = (self.sa if m % 2 else 1) * (self.sb if n % 2 else 1)
            return abs(s * mpmath.exp(lmag) - self.t_rect)
        theta = mpmath.fmod(m * self.pa + n * self.pb, two_pi())
        r = mpmath.exp(lmag)
        x = mpc(r * mpmath.cos(theta), r * mpmath.sin(theta))
        return abs(x - self.t_rect)

    def _confirm(self, m: int, n: int) -> mpf | None:
        """Independent rectangular check at doubled precision."""
        with extra_dps(mp.dps):
            a = self.pair.a.to_rect()
            b = self.pair.b.to_rect()
            t = self.target.to_rect()
            err = abs((a**m) * (b**n) - t)
            if err < self.eps:
                return +err
        return None

    def _try(self, m: int, n: int, win: _Window) -> bool:
        if n < self.min_n or n > self.budget.max_n:
            return False
        if self.best is not None and (m + n, m, n) >= self.best:
            return False
        self._spend()
        if self.real:
            s = (self.sa if m % 2 else 1) * (self.sb if n % 2 else 1)
            if s != win.sign:
                return False
        if self.candidate_ok is not None and not self.candidate_ok(m, n):
            return False
        if self._distance(m, n) >= self.eps:
            return False
        err = self._confirm(m, n)
        if err is None:
            return False
        self.best = (m + n, m, n)
        self.best_err = err
        return True

    def _diagnostics(self, reason: str) -> dict:
        return {
            "reason": reason,
            "max_m": self.budget.max_m,
            "max_n": self.budget.max_n,
            "nodes": self.nodes,
            "windows": len(self.windows),
        }

    # -- strategies ----------------------------------------------------------

    def run_scan(self) -> None:
        live = list(self.windows)
        m = self.min_m
        while live and m <= self.budget.max_m:
            still = []
            for win in live:
                self._spend()
                n_lo, n_hi = win.n_bounds(m, self.la, self.lb)
                n_lo = max(n_lo, self.min_n)
                if n_lo > self.budget.max_n:
                    continue  # rises monotonically: window dead for all later m
                if self.best is not None and m + n_lo > self.best[0]:
                    continue  # cannot beat the incumbent at this or any later m
                still.append(win)
                for n in range(max(n_lo, 0), n_hi + 1):
                    self._try(m, n, win)
            live = still
            m += 1

    def run_convergent(self) -> None:
        gamma = -self.la / self.lb
        for win in self.windows:
            if win.log_lo is None:
                # window reaches the origin: fall back to scanning this band
                self._scan_single(win)
                continue
            span = self.budget.max_m - self.min_m
            if span < 0:
                continue
            # Fold an a-sign parity constraint into the rotation problem:
            # with sign(a) < 0 < sign(b) the product sign is (-1)^m, so only
            # one parity class of m can land in this window.  Walking that
            # class directly avoids enumerating arbitrarily long runs of
            # wrong-parity hits.
            parity = None
            if self.real and self.sb > 0:
                if self.sa < 0:
                    want = 0 if win.sign == 1 else 1
                    parity = (want - self.min_m) % 2
                elif win.sign == -1:
                    continue  # positive generators never reach this band
            lo_off = (win.log_lo - self.min_m * self.la) / self.lb
            hi_off = (win.log_hi - self.min_m * self.la) / self.lb
            w = (hi_off - lo_off) / 2
            center = lo_off + w
            # Fast-forward past the stretch of m whose forced n would be
            # negative (or under min_n): those window hits are never
            # admissible and can dominate the enumeration for deep targets.
            floor_n = max(self.min_n, 0)
            start = 0
            if gamma > 0:
                need = (floor_n - w - center) / gamma
                if need > 0:
                    start = int(mpmath.ceil(need))
            elif gamma < 0:
                need = (floor_n - w - center) / gamma
                span = min(span, int(mpmath.floor(need)))
            if parity is not None:
                start += (parity - start) % 2
                stride = 2
            else:
                stride = 1
            if start > span:
                continue
            entries = iter_entries(
                frac01(stride * gamma), frac01(center + start * gamma),
                w, (span - start) // stride)
            for dm in entries:
                self._spend()
                m = self.min_m + start + stride * dm
                n_lo, n_hi = win.n_bounds(m, self.la, self.lb)
                n_lo = max(n_lo, self.min_n)
                if n_lo > self.budget.max_n:
                    break
                if self.best is not None and m + n_lo > self.best[0]:
                    break
                hit = False
                for n in range(max(n_lo, 0), n_hi + 1):
                    hit = self._try(m, n, win) or hit
                if hit:
                    break  # n is forced upward with m, so later sums only grow

    def _scan_single(self, win: _Window) -> None:
        m = self.min_m
        while m <= self.budget.max_m:
            self._spend()
            n_lo, n_hi = win.n_bounds(m, self.la, self.lb)
            n_lo = max(n_lo, self.min_n)
            if n_lo > self.budget.max_n:
                return
            if self.best is not None and m + n_lo > self.best[0]:
                return
            for n in range(max(n_lo, 0), n_hi + 1):
                self._try(m, n, win)
            m += 1


def steer_scalar(
    pair: GeneratingPair,
    target: FieldElement,
    eps,
    budget: SearchBudget | None = None,
    strategy: str = "auto",
    min_m: int = 0,
    min_n: int = 0,
    candidate_ok=None,
) -> ScalarSolution:
    """Find nonnegative (m, n) with |a^m b^n - target| < eps, minimal m + n.

    Raises SteerNotFound when the budget is exhausted; the exception carries
    search diagnostics.  ``min_m``/``min_n``/``candidate_ok`` restrict the
    admissible exponents (used by the matrix-level synthesis to impose
    suppression floors); minimality then holds among the restricted set.
    """
    if budget is None:
        budget = SearchBudget()
    budget.clamp()
    if not pair.is_certified:
        raise SteerNotFound(
            f"pair is {pair.certificate.value}, not certified",
            diagnostics={"reason": "uncertified"},
        )
    if target.is_zero:
        raise ZeroModulus("cannot steer to zero: products never vanish")
    if pair.a.is_zero or pair.b.is_zero:
        raise ZeroModulus("pair members must be nonzero")
    if not mpf(eps) > 0:
        raise ValueError("eps must be positive")

    search = _Search(pair, target, eps, budget, min_m, min_n, candidate_ok)
    if strategy == "auto":
        use = "scan"
        if pair.field is Field.REAL and budget.max_m > SCAN_LIMIT:
            use = "convergent"
    elif strategy in ("scan", "convergent"):
        use = strategy
        if use == "convergent" and pair.field is not Field.REAL:
            raise ValueError("convergent strategy applies to real pairs only")
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    if use == "scan":
        search.run_scan()
    else:
        search.run_convergent()

    if search.best is None:
        raise SteerNotFound(
            "no admissible exponents within budget",
            diagnostics=search._diagnostics("exhausted"),
        )
    _, m, n = search.best
    return ScalarSolution(m, n, search.best_err, use, search.nodes)
