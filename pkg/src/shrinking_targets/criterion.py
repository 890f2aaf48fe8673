"""Evaluate and classify the divergence criterion and the side conditions.

The central series is

    sum_k log(min(phi(q_k), q_{k+1}/q_k)) / phi(q_k)

with a shifted variant whose denominator is ``phi(q_{k+1})``.  Terms are
certified; the classification is the dyadic-block trend of
:func:`phi_funcs.classify_blocks`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .certified import CertifiedReal, clog, cexp, render_decimal
from .cf_core import ConvergentTable, IrrationalSpec
from .errors import PrecisionError, ValidationError
from .phi_funcs import HEURISTIC, PhiSpec, SeriesReport, classify_blocks, dyadic_blocks

TERM_TOL = Fraction(1, 1 << 110)
TIE_REL = Fraction(1, 10**30)
SUM_BITS = 128

SERIES_COLUMNS = ("k", "q_k", "ratio", "phi_qk", "term", "partial_sum")


def render_int(n: int) -> str:
    """Exact decimal for ordinary sizes; scientific with bit length beyond."""
    if n.bit_length() <= 12_000:
        return str(n)
    return f"~{render_decimal(Fraction(n), 12)} (bits={n.bit_length()})"


def certified_min(phi_eval, ratio: Fraction, tol: Fraction = TERM_TOL) -> Tuple[CertifiedReal, CertifiedReal]:
    """Return ``(min(phi, ratio), phi)`` with the comparison certified.

    ``phi_eval(tol)`` encloses phi.  Precision rises until the arguments
    separate or the enclosure is within a relative 1e-30 of ``ratio``, in
    which case both arguments agree to that tolerance and ``ratio`` is used.
    """
    r = CertifiedReal.exact(ratio)
    t = tol
    while True:
        ph = phi_eval(t)
        if ph.certainly_lt(r):
            return ph, ph
        if ph.lo >= r.value:
            return r, ph
        if ph.error_bound <= TIE_REL * ratio:
            return r, ph
        if t < Fraction(1, 1 << 4096):
            raise PrecisionError("min(phi(q_k), q_{k+1}/q_k) undecidable")
        t = t * t


def _series(theta: IrrationalSpec, phi: PhiSpec, K_max: int, shifted: bool, table: Optional[ConvergentTable]) -> SeriesReport:
    if K_max < 1:
        raise ValidationError("K_max must be >= 1")
    table = table or ConvergentTable(theta)
    table.ensure(K_max + 1)
    terms: List[Tuple[int, CertifiedReal]] = []
    sums: List[Tuple[int, CertifiedReal]] = []
    rows = []
    total = CertifiedReal.exact(0)
    lam = []
    for k in range(K_max + 1):
        qk, qk1 = table.q(k), table.q(k + 1)
        ratio = Fraction(qk1, qk)
        m, phi_qk = certified_min(lambda t: phi.eval(qk, t), ratio)
        logm = clog(m, TERM_TOL)
        if shifted:
            phi_next = phi.eval(qk1, TERM_TOL)
            if phi_next.certainly_gt(2 * phi_qk):
                lam.append(k)
            denom = phi_next
        else:
            denom = phi_qk
        t = (logm / denom).rounded(SUM_BITS)
        total = (total + t).rounded(SUM_BITS)
        terms.append((k, t))
        sums.append((k, total))
        rows.append({
            "k": str(k),
            "q_k": render_int(qk),
            "ratio": render_decimal(ratio),
            "phi_qk": phi_qk.render(),
            "term": t.render(),
            "partial_sum": total.render(),
        })
    blocks = dyadic_blocks([(k, float(t.value)) for k, t in terms], offset=1)
    meta = {
        "operation": "shifted_series" if shifted else "main_series",
        "theta": theta.to_config(),
        "phi": phi.to_config(),
        "K_max": K_max,
        "precision": f"terms certified to 2^-110, sums snapped to 2^-{SUM_BITS}",
        "heuristic": HEURISTIC,
        "flags": phi.flags,
    }
    if shifted:
        meta["lambda_count"] = len(lam)
        meta["lambda_indices"] = lam[:200]
    return SeriesReport(terms, sums, classify_blocks([b[2] for b in blocks]), meta, blocks, rows, SERIES_COLUMNS)


def main_series(theta: IrrationalSpec, phi: PhiSpec, K_max: int, table: Optional[ConvergentTable] = None) -> SeriesReport:
    """Terms ``log(min(phi(q_k), q_{k+1}/q_k)) / phi(q_k)`` for ``k = 0..K_max``."""
    return _series(theta, phi, K_max, False, table)


def shifted_series(theta: IrrationalSpec, phi: PhiSpec, K_max: int, table: Optional[ConvergentTable] = None) -> SeriesReport:
    """As :func:`main_series` with denominator ``phi(q_{k+1})``.

    ``metadata['lambda_indices']`` lists the ``k`` with
    ``phi(q_{k+1}) > 2 phi(q_k)``, the only places the two series can differ
    by more than a factor of two.
    """
    return _series(theta, phi, K_max, True, table)


def last_block_increase(report: SeriesReport) -> CertifiedReal:
    """``S_K - S_{floor(K/2)}`` for the report's final ``K``."""
    K = report.partial_sums[-1][0]
    return report.partial_sum_at(K) - report.partial_sum_at(K // 2)


# ---------------------------------------------------------------------------
# Growth conditions on q_k


@dataclass
class ConditionIReport:
    fitted_C: CertifiedReal
    holds_up_to_K: bool
    trend: List[Tuple[int, CertifiedReal]]
    trend_label: str
    K_max: int
    theta: str

    def to_dict(self):
        return {
            "fitted_C": self.fitted_C.render(),
            "holds_up_to_K": self.holds_up_to_K,
            "trend_label": self.trend_label,
            "trend": [{"K": k, "q_K^(1/K)": v.render()} for k, v in self.trend],
            "K_max": self.K_max,
            "theta": self.theta,
        }


BOUNDED_REL_STEP = Fraction(1, 20)


def condition_i_check(theta: IrrationalSpec, K_max: int, table: Optional[ConvergentTable] = None) -> ConditionIReport:
    """Fit ``C = max_{k<=K} q_k^(1/k)`` and label the growth of ``q_k^(1/k)``.

    The label is "bounded" when the value at the last dyadic checkpoint is
    within 5% of the previous checkpoint, else "growing".
    """
    if K_max < 2:
        raise ValidationError("K_max must be >= 2")
    table = table or ConvergentTable(theta)
    best: Optional[CertifiedReal] = None
    roots: Dict[int, CertifiedReal] = {}
    for k in range(1, K_max + 1):
        r = cexp(clog(table.q(k), Fraction(1, 1 << 80)) / k, Fraction(1, 1 << 64))
        roots[k] = r
        if best is None or r.value > best.value:
            best = r
    checkpoints = [1 << j for j in range(1, K_max.bit_length()) if (1 << j) <= K_max]
    if checkpoints[-1] != K_max:
        checkpoints.append(K_max)
    trend = [(K, roots[K]) for K in checkpoints]
    a, b = trend[-2][1].value, trend[-1][1].value
    label = "bounded" if b <= a * (1 + BOUNDED_REL_STEP) else "growing"
    hull_lo = max(r.lo for r in roots.values())
    hull_hi = max(r.hi for r in roots.values())
    fitted = CertifiedReal.from_bounds(hull_lo, hull_hi)
    return ConditionIReport(fitted, True, trend, label, K_max, theta.to_config())


@dataclass
class ConditionIIReport:
    fitted_D: CertifiedReal
    violations: List[int]
    skipped: List[int]
    values: List[Tuple[int, CertifiedReal]]
    D: Optional[Fraction]
    K_max: int
    theta: str

    def to_dict(self):
        return {
            "fitted_D": self.fitted_D.render(),
            "D": None if self.D is None else render_decimal(self.D),
            "violations": self.violations,
            "skipped_log_qk_zero": self.skipped,
            "values": [{"k": k, "ratio_over_log_qk": v.render()} for k, v in self.values],
            "K_max": self.K_max,
            "theta": self.theta,
        }


def condition_ii_check(theta: IrrationalSpec, K_max: int, D: Optional[Fraction] = None,
                       table: Optional[ConvergentTable] = None) -> ConditionIIReport:
    """``(q_{k+1}/q_k) / log q_k`` over ``k <= K_max``; fitted D over ``[K_max/2, K_max]``."""
    if K_max < 3:
        raise ValidationError("K_max must be >= 3")
    table = table or ConvergentTable(theta)
    values, skipped, violations = [], [], []
    for k in range(1, K_max + 1):
        qk = table.q(k)
        if qk <= 1:
            skipped.append(k)
            continue
        v = (CertifiedReal.exact(Fraction(table.q(k + 1), qk)) / clog(qk, Fraction(1, 1 << 80))).rounded(96)
        values.append((k, v))
        if D is not None and v.certainly_gt(Fraction(D)):
            violations.append(k)
    window = [v for k, v in values if k >= (K_max + 1) // 2]
    if not window:
        raise ValidationError("no k in the fitting window has log q_k > 0")
    fitted = CertifiedReal.from_bounds(max(v.lo for v in window), max(v.hi for v in window))
    return ConditionIIReport(fitted, violations, skipped, values, None if D is None else Fraction(D), K_max, theta.to_config())


def prop2_series(theta: IrrationalSpec, K_max: int, table: Optional[ConvergentTable] = None) -> SeriesReport:
    """Terms ``1/log q_k`` for ``k = 2..K_max``."""
    if K_max < 2:
        raise ValidationError("K_max must be >= 2")
    table = table or ConvergentTable(theta)
    terms, sums, rows = [], [], []
    total = CertifiedReal.exact(0)
    for k in range(2, K_max + 1):
        qk = table.q(k)
        t = (1 / clog(qk, TERM_TOL)).rounded(SUM_BITS)
        total = (total + t).rounded(SUM_BITS)
        terms.append((k, t))
        sums.append((k, total))
        rows.append({"k": str(k), "q_k": render_int(qk), "term": t.render(), "partial_sum": total.render()})
    blocks = dyadic_blocks([(k, float(t.value)) for k, t in terms])
    meta = {"operation": "prop2_series", "theta": theta.to_config(), "K_max": K_max, "heuristic": HEURISTIC}
    return SeriesReport(terms, sums, classify_blocks([b[2] for b in blocks]), meta, blocks, rows, ("k", "q_k", "term", "partial_sum"))
