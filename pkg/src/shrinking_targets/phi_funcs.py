"""Monotone increasing positive test functions and the dyadic trend heuristic.

A :class:`PhiSpec` is evaluated on positive integers; the real extension is
``phi(x) = phi(floor(x))``.  Certified evaluation returns a
:class:`CertifiedReal`; ``float_values`` is the vectorised float path used by
the simulation engine and by the Khinchin summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import iv, mp

from .certified import DEFAULT_PREC, CertifiedReal, cpow, refine, render_decimal, with_prec
from .errors import ValidationError

DEFAULT_TOL = Fraction(1, 1 << 100)

DIVERGING = "diverging-trend"
CONVERGING = "converging-trend"
INCONCLUSIVE = "inconclusive"

# Dyadic-block heuristic thresholds.
DIVERGE_RATIO = 0.8
CONVERGE_RATIO = 0.75
CONVERGE_BLOCKS = 5
MIN_CONVERGE_BLOCKS = 3
HEURISTIC = (
    f"diverging-trend if last complete dyadic block >= {DIVERGE_RATIO}x previous; "
    f"converging-trend if each of the last {CONVERGE_BLOCKS} blocks is <= {CONVERGE_RATIO}x its predecessor"
)


class PhiSpec:
    kind: str = ""

    def eval(self, n: int, tol: Fraction = DEFAULT_TOL) -> CertifiedReal:
        raise NotImplementedError

    def float_values(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> str:
        raise NotImplementedError

    @property
    def flags(self) -> List[str]:
        """Interpretation notes carried into reports."""
        return []

    def __str__(self) -> str:
        return self.to_config()


def _fmt_frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f'"{x.numerator}/{x.denominator}"'


@dataclass(frozen=True)
class Constant(PhiSpec):
    c: Fraction
    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        if self.c <= 0:
            raise ValidationError("constant phi must be positive")

    def eval(self, n, tol=DEFAULT_TOL):
        return CertifiedReal.exact(self.c)

    def float_values(self, n):
        return np.full(np.shape(n), float(self.c))

    def to_config(self):
        return f"constant(c={_fmt_frac(self.c)})"


def _logstack_onset(depth: int) -> int:
    """Smallest integer n whose innermost iterated log exceeds 1."""
    with mp.workprec(200):
        x = mp.mpf(1)
        for _ in range(depth):
            x = mp.exp(x)
        return int(mp.floor(x)) + 1


_ONSETS = {d: _logstack_onset(d) for d in (1, 2, 3)}


@dataclass(frozen=True)
class LogStack(PhiSpec):
    """``log n``, ``log n log log n`` or ``log n log log n log log log n``.

    Below the onset index (first ``n`` with innermost log > 1) the value is
    clamped to the value at the onset, which keeps the function monotone.
    """

    depth: int = 1
    kind = "logstack"

    def __post_init__(self):
        if self.depth not in (1, 2, 3):
            raise ValidationError("logstack depth must be 1, 2 or 3")

    @property
    def onset(self) -> int:
        return _ONSETS[self.depth]

    @property
    def flags(self):
        return [f"logstack(depth={self.depth}) clamped to its value at n={self.onset} below the onset"]

    def eval(self, n, tol=DEFAULT_TOL):
        _check_n(n)
        m = max(int(n), self.onset)

        def compute(p):
            def inner():
                x = iv.log(iv.mpf(m))
                out, cur = x, x
                for _ in range(self.depth - 1):
                    cur = iv.log(cur)
                    out = out * cur
                return CertifiedReal.from_iv(out)
            return with_prec(p, inner)

        return refine(compute, Fraction(tol), DEFAULT_PREC)

    def float_values(self, n):
        x = np.maximum(np.asarray(n, dtype=np.float64), float(self.onset))
        out = np.log(x)
        cur = out
        for _ in range(self.depth - 1):
            cur = np.log(cur)
            out = out * cur
        return out

    def to_config(self):
        return f"logstack(depth={self.depth})"


@dataclass(frozen=True)
class Power(PhiSpec):
    eps: Fraction
    kind = "power"

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.eps <= 0:
            raise ValidationError("power exponent must be positive")

    def eval(self, n, tol=DEFAULT_TOL):
        _check_n(n)
        return cpow(int(n), self.eps, tol)

    def float_values(self, n):
        return np.power(np.asarray(n, dtype=np.float64), float(self.eps))

    def to_config(self):
        return f"power(eps={_fmt_frac(self.eps)})"


@dataclass(frozen=True)
class Table(PhiSpec):
    """Explicit values ``phi(1), ..., phi(L)``, extended by ``phi(L)``."""

    values: Tuple[Fraction, ...]
    kind = "table"

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if not vals:
            raise ValidationError("table phi needs at least one value")
        if vals[0] <= 0:
            raise ValidationError("table phi values must be positive")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValidationError("table phi values must be nondecreasing")
        object.__setattr__(self, "values", vals)

    def eval(self, n, tol=DEFAULT_TOL):
        _check_n(n)
        return CertifiedReal.exact(self.values[min(int(n), len(self.values)) - 1])

    def float_values(self, n):
        arr = np.array([float(v) for v in self.values])
        idx = np.clip(np.asarray(n, dtype=np.int64) - 1, 0, len(arr) - 1)
        return arr[idx]

    def to_config(self):
        return "table(values=[" + ", ".join(_fmt_frac(v) for v in self.values) + "])"


@dataclass(frozen=True)
class Shifted(PhiSpec):
    """Pointwise ``max(base(n), floor)``."""

    base: PhiSpec
    floor: Fraction = Fraction(4)
    kind = "shifted"

    def __post_init__(self):
        object.__setattr__(self, "floor", Fraction(self.floor))
        if self.floor <= 0:
            raise ValidationError("shift floor must be positive")

    @property
    def flags(self):
        return self.base.flags

    def eval(self, n, tol=DEFAULT_TOL):
        v = self.base.eval(n, tol)
        if v.lo >= self.floor:
            return v
        if v.hi <= self.floor:
            return CertifiedReal.exact(self.floor)
        # Undecided which side of the floor; the enclosure of the max is still valid.
        return CertifiedReal.from_bounds(self.floor, v.hi)

    def float_values(self, n):
        return np.maximum(self.base.float_values(n), float(self.floor))

    def to_config(self):
        return f"shifted(base={self.base.to_config()}, floor={_fmt_frac(self.floor)})"


def _check_n(n):
    if int(n) < 1:
        raise ValidationError("phi is defined for n >= 1")


def eval_phi(phi: PhiSpec, n: int, tol: Fraction = DEFAULT_TOL) -> CertifiedReal:
    _check_n(n)
    return phi.eval(n, Fraction(tol))


def at_least_four(phi: PhiSpec) -> PhiSpec:
    """Wrap ``phi`` so that ``phi >= 4`` (idempotent)."""
    if isinstance(phi, Shifted) and phi.floor >= 4:
        return phi
    if isinstance(phi, Constant) and phi.c >= 4:
        return phi
    return Shifted(phi, Fraction(4))


def is_bounded_hint(phi: PhiSpec) -> bool:
    """True for specs that are bounded by construction."""
    if isinstance(phi, (Constant, Table)):
        return True
    if isinstance(phi, Shifted):
        return is_bounded_hint(phi.base)
    return False


# ---------------------------------------------------------------------------
# Trend heuristic


def classify_blocks(blocks: Sequence[float]) -> str:
    """Label a series by its complete dyadic-block contributions.

    diverging: the last block is at least 0.8x the previous one.
    converging: across the last five blocks (or all of them, if only three or
    four exist) every block is <= 0.75x its predecessor.
    Anything else is inconclusive.  Never a proof.
    """
    b = [float(x) for x in blocks]
    if len(b) < 2:
        return INCONCLUSIVE
    last, prev = b[-1], b[-2]
    if prev > 0 and last >= DIVERGE_RATIO * prev:
        return DIVERGING
    if len(b) >= MIN_CONVERGE_BLOCKS:
        tail = b[-CONVERGE_BLOCKS:]
        if all(y <= CONVERGE_RATIO * x for x, y in zip(tail, tail[1:])):
            return CONVERGING
    return INCONCLUSIVE


def dyadic_blocks(indexed: Sequence[Tuple[int, float]], offset: int = 0) -> List[Tuple[int, int, float]]:
    """Group ``(i, x_i)`` into complete blocks ``2**j <= i + offset < 2**(j+1)``.

    Returns ``(lo, hi, sum)`` per complete block, with ``lo, hi`` in the
    original index.
    """
    if not indexed:
        return []
    top = max(i for i, _ in indexed) + offset
    sums: Dict[int, float] = {}
    for i, x in indexed:
        t = i + offset
        if t < 1:
            continue
        j = t.bit_length() - 1
        sums[j] = sums.get(j, 0.0) + float(x)
    out = []
    for j in sorted(sums):
        if (1 << (j + 1)) - 1 <= top:
            out.append(((1 << j) - offset, (1 << (j + 1)) - 1 - offset, sums[j]))
    return out


# ---------------------------------------------------------------------------
# Khinchin report


@dataclass
class SeriesReport:
    """Terms, partial sums and a trend label, with provenance metadata.

    ``rows`` holds the tabular view written to CSV; its columns depend on the
    producing operation.
    """

    terms: List[Tuple[int, CertifiedReal]]
    partial_sums: List[Tuple[int, CertifiedReal]]
    classification: str
    metadata: Dict[str, object] = field(default_factory=dict)
    blocks: List[Tuple[int, int, float]] = field(default_factory=list)
    rows: List[Dict[str, str]] = field(default_factory=list)
    columns: Tuple[str, ...] = ()

    def partial_sum_at(self, K: int) -> CertifiedReal:
        for k, s in self.partial_sums:
            if k == K:
                return s
        raise KeyError(K)

    def to_dict(self) -> Dict[str, object]:
        return {
            "classification": self.classification,
            "metadata": self.metadata,
            "blocks": [{"lo": lo, "hi": hi, "sum": render_decimal(Fraction(s), 12)} for lo, hi, s in self.blocks],
            "terms": [{"k": k, "value": t.render()} for k, t in self.terms],
            "partial_sums": [{"K": k, "value": s.render()} for k, s in self.partial_sums],
        }


_KHINCHIN_CHUNK = 1 << 20
# Relative error budget of a float64 block sum (pairwise summation, log
# evaluation, products); generous by several orders of magnitude.
_FLOAT_REL = 2.0 ** -40


def khinchin_divergence_report(phi: PhiSpec, N_max: int) -> SeriesReport:
    """Partial sums of ``sum 1/(n phi(n))`` and their dyadic-block trend.

    Summation is float64 in chunks with a declared relative error budget, so
    the certified bounds here are accounting bounds, not interval arithmetic.
    """
    if N_max < 2:
        raise ValidationError("N_max must be >= 2")
    checkpoints = sorted({max(1, N_max // 4), max(1, N_max // 2), N_max})
    block_sums: Dict[int, float] = {}
    block_counts: Dict[int, int] = {}
    cp_sums: Dict[int, float] = {}
    running = 0.0
    start = 1
    cuts = sorted(set(checkpoints) | {(1 << j) - 1 for j in range(1, N_max.bit_length() + 1) if (1 << j) - 1 <= N_max})
    for cut in cuts:
        # Sum n in [start, cut]; every segment lies inside one dyadic block.
        s = 0.0
        lo = start
        while lo <= cut:
            hi = min(cut, lo + _KHINCHIN_CHUNK - 1)
            n = np.arange(lo, hi + 1, dtype=np.float64)
            s += float(np.sum(1.0 / (n * phi.float_values(n))))
            lo = hi + 1
        j = start.bit_length() - 1
        block_sums[j] = block_sums.get(j, 0.0) + s
        block_counts[j] = block_counts.get(j, 0) + (cut - start + 1)
        running += s
        if cut in checkpoints:
            cp_sums[cut] = running
        start = cut + 1
    complete = [(1 << j, (1 << (j + 1)) - 1, block_sums[j]) for j in sorted(block_sums) if block_counts[j] == (1 << j)]
    terms = [(j, CertifiedReal(Fraction(s), Fraction(s * _FLOAT_REL))) for j, (_, _, s) in enumerate(complete)]
    partial = [(N, CertifiedReal(Fraction(v), Fraction(v * _FLOAT_REL))) for N, v in sorted(cp_sums.items())]
    cls = classify_blocks([s for _, _, s in complete])
    meta = {
        "operation": "khinchin_divergence_report",
        "phi": phi.to_config(),
        "N_max": N_max,
        "flags": phi.flags,
        "heuristic": HEURISTIC,
    }
    rows = [{"j": str(j), "n_lo": str(lo), "n_hi": str(hi), "block_sum": render_decimal(Fraction(s))} for j, (lo, hi, s) in enumerate(complete)]
    return SeriesReport(terms, partial, cls, meta, complete, rows, ("j", "n_lo", "n_hi", "block_sum"))
