"""Continued-fraction engine.

An irrational ``0 < theta < 1`` is described only by the rule producing its
partial quotients ``a_1, a_2, ...`` (``a_0 = 0``).  Everything real-valued is
computed from convergents ``p_m/q_m`` with the classical enclosure
``|theta - p_m/q_m| < 1/(q_m q_{m+1})``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from mpmath import mp

from .certified import CertifiedReal
from .errors import ResourceCapError, ValidationError

DEFAULT_CAP_K = 20_000


# ---------------------------------------------------------------------------
# Partial-quotient rules


class IrrationalSpec:
    """Base class: a deterministic rule ``k -> a_k`` for ``k >= 1``."""

    kind: str = ""

    def quotient(self, k: int) -> int:
        raise NotImplementedError

    def to_config(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_config()


@dataclass(frozen=True)
class ConstantQuotient(IrrationalSpec):
    a: int
    kind = "constant"

    def __post_init__(self):
        if not isinstance(self.a, int) or self.a < 1:
            raise ValidationError(f"constant quotient must be a positive integer, got {self.a!r}")

    def quotient(self, k: int) -> int:
        return self.a

    def to_config(self) -> str:
        return f"constant(a={self.a})"


@dataclass(frozen=True)
class LinearQuotient(IrrationalSpec):
    """``a_k = k``."""

    kind = "linear"

    def quotient(self, k: int) -> int:
        return k

    def to_config(self) -> str:
        return "linear()"


def _prop2_quotient(k: int) -> int:
    if k <= 2:
        return 1
    with mp.workprec(128):
        lk = mp.log(k)
        v = mp.exp(lk * mp.log(lk))
        return max(1, int(mp.nint(v)))


@dataclass(frozen=True)
class PaperProp2(IrrationalSpec):
    """``a_k = round(k ** log(log k))`` for ``k >= 3``; ``a_1 = a_2 = 1``."""

    kind = "prop2"

    def quotient(self, k: int) -> int:
        return _prop2_quotient(k)

    def to_config(self) -> str:
        return "prop2()"


@dataclass(frozen=True)
class ExplicitList(IrrationalSpec):
    """Finite prefix ``a_1..a_L`` followed by another rule (re-indexed from 1)."""

    prefix: Tuple[int, ...]
    tail: IrrationalSpec = field(default_factory=lambda: ConstantQuotient(1))
    kind = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        for a in self.prefix:
            if not isinstance(a, int) or a < 1:
                raise ValidationError(f"explicit prefix entries must be positive integers, got {a!r}")

    def quotient(self, k: int) -> int:
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        return self.tail.quotient(k - len(self.prefix))

    def to_config(self) -> str:
        body = ", ".join(str(a) for a in self.prefix)
        return f"explicit(prefix=[{body}], tail={self.tail.to_config()})"


# Named rules usable from config files.
CUSTOM_RULES: Dict[str, Callable[[int], int]] = {
    "double_exponential": lambda k: 1 << (1 << k),
    "square": lambda k: k * k,
    "power_of_two": lambda k: 1 << k,
}


@dataclass(frozen=True)
class Custom(IrrationalSpec):
    rule: Callable[[int], int]
    name: str = ""
    kind = "custom"

    @classmethod
    def named(cls, name: str) -> "Custom":
        try:
            return cls(CUSTOM_RULES[name], name)
        except KeyError:
            raise ValidationError(f"unknown custom rule {name!r}; known: {sorted(CUSTOM_RULES)}") from None

    def quotient(self, k: int) -> int:
        return self.rule(k)

    def to_config(self) -> str:
        if self.name not in CUSTOM_RULES:
            raise ValidationError("only named custom rules can be serialized")
        return f"custom(rule={self.name})"


GOLDEN = ConstantQuotient(1)


# ---------------------------------------------------------------------------
# Convergent table


def _mul(a: int, q: int) -> int:
    # Powers of two are common in test rules and multiply by shifting.
    if a & (a - 1) == 0:
        return q << (a.bit_length() - 1)
    return a * q


class ConvergentTable:
    """Exact ``(a_k, p_k, q_k)`` rows, extended lazily and append-only.

    Index ``k`` runs from 0 (``a_0 = 0, p_0 = 0, q_0 = 1``).  Rows never change
    once written, so readers may share a table across threads.
    """

    def __init__(self, spec: IrrationalSpec, cap_k: int = DEFAULT_CAP_K):
        self.spec = spec
        self.cap_k = cap_k
        self._a: List[int] = [0]
        self._p: List[int] = [0]
        self._q: List[int] = [1]
        self._p_prev, self._q_prev = 1, 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._q)

    @property
    def depth(self) -> int:
        """Largest index currently in the table."""
        return len(self._q) - 1

    def ensure(self, k: int) -> "ConvergentTable":
        if k <= self.depth:
            return self
        if k > self.cap_k:
            raise ResourceCapError(f"convergent index {k} exceeds cap_k={self.cap_k}")
        with self._lock:
            while self.depth < k:
                self._append()
        return self

    def _append(self):
        j = len(self._q)
        a = self.spec.quotient(j)
        if not isinstance(a, int) or isinstance(a, bool) or a < 1:
            raise ValidationError(f"rule produced invalid partial quotient a_{j} = {a!r}")
        p = _mul(a, self._p[-1]) + (self._p[-2] if j >= 2 else self._p_prev)
        q = _mul(a, self._q[-1]) + (self._q[-2] if j >= 2 else self._q_prev)
        self._a.append(a)
        self._p.append(p)
        self._q.append(q)

    def a(self, k: int) -> int:
        return self.ensure(k)._a[k]

    def p(self, k: int) -> int:
        if k == -1:
            return 1
        return self.ensure(k)._p[k]

    def q(self, k: int) -> int:
        if k == -1:
            return 0
        return self.ensure(k)._q[k]

    def rows(self, k_max: Optional[int] = None) -> List[Tuple[int, int, int, int]]:
        k_max = self.depth if k_max is None else k_max
        self.ensure(k_max)
        return [(k, self._a[k], self._p[k], self._q[k]) for k in range(k_max + 1)]

    def extend_until(self, until: Callable[[int, int], bool]) -> "ConvergentTable":
        k = 0
        while not until(k, self.q(k)):
            k += 1
            if k > self.cap_k:
                raise ResourceCapError(f"predicate not met within cap_k={self.cap_k}")
        return self

    def first_index_at_least(self, bound: int) -> int:
        """Smallest ``k`` with ``q_k >= bound``."""
        k = 0
        while self.q(k) < bound:
            k += 1
        return k

    def index_for(self, scale: int, tol: Fraction) -> int:
        """Smallest ``m`` with ``scale / (q_m q_{m+1}) <= tol``.

        ``scale`` is the largest multiplier applied to theta (so that ``n``
        times the convergent error stays within ``tol``).
        """
        tol = Fraction(tol)
        if tol <= 0:
            raise ValidationError("tol must be positive")
        m = 0
        while Fraction(scale, self.q(m) * self.q(m + 1)) > tol:
            m += 1
        return m

    def check_invariants(self, k_max: int) -> List[str]:
        """Return a list of violated invariants (empty when all hold)."""
        bad = []
        self.ensure(k_max + 1)
        if self._p[0] != 0 or self._q[0] != 1:
            bad.append("p_0 = 0, q_0 = 1")
        for k in range(1, k_max + 1):
            q0, q1, q2 = self._q[k - 1], self._q[k], self._q[k + 1]
            p0, p1, p2 = self._p[k - 1], self._p[k], self._p[k + 1]
            a = self._a[k + 1]
            if q2 != a * q1 + q0 or p2 != a * p1 + p0:
                bad.append(f"recurrence at k={k}")
            if q2 < 2 * q0:
                bad.append(f"q_{{k+1}} >= 2 q_{{k-1}} at k={k}")
            if abs(p1 * q2 - p2 * q1) != 1:
                bad.append(f"determinant at k={k}")
            if q2 <= q1:
                bad.append(f"strict increase at k={k + 1}")
        return bad


def extend_table(spec: IrrationalSpec, until: Callable[[int, int], bool], cap_k: int = DEFAULT_CAP_K) -> ConvergentTable:
    """Build a table containing every row up to the first ``k`` meeting ``until(k, q_k)``."""
    return ConvergentTable(spec, cap_k=cap_k).extend_until(until)


# ---------------------------------------------------------------------------
# Certified evaluation


def theta_approx(table: ConvergentTable, m: int) -> CertifiedReal:
    if m < 0 or m + 1 > table.cap_k:
        raise IndexError(f"table cannot hold rows through m+1 = {m + 1} (cap_k {table.cap_k})")
    return CertifiedReal(Fraction(table.p(m), table.q(m)), Fraction(1, table.q(m) * table.q(m + 1)))


def _dist_frac(x: Fraction) -> Fraction:
    f = x - (x.numerator // x.denominator)
    return min(f, 1 - f)


def dist_to_integer(n: int, table: ConvergentTable, tol: Fraction) -> CertifiedReal:
    """Certified ``||n theta||`` with error bound ``<= tol``."""
    return dist_to_target(n, Fraction(0), table, tol)


def dist_to_target(n: int, s: Fraction, table: ConvergentTable, tol: Fraction) -> CertifiedReal:
    """Certified ``||n theta - s||`` with error bound ``<= tol``."""
    if n < 0:
        raise ValidationError("n must be nonnegative")
    s = Fraction(s)
    if n == 0:
        return CertifiedReal.exact(_dist_frac(-s))
    m = table.index_for(n, tol)
    pm, qm = table.p(m), table.q(m)
    center = Fraction((n * pm) % qm, qm) - s
    return CertifiedReal(_dist_frac(center), Fraction(n, qm * table.q(m + 1)))


def frac_position(n: int, table: ConvergentTable, m: int) -> Fraction:
    """``{n p_m / q_m}``, the approximate orbit point used by set constructions."""
    qm = table.q(m)
    return Fraction((n * table.p(m)) % qm, qm)


# ---------------------------------------------------------------------------
# Ostrowski numeration


def ostrowski_digits(n: int, table: ConvergentTable) -> List[Tuple[int, int]]:
    """Greedy ``n = sum c_k q_k``; returns nonzero digits, highest index first.

    Each step takes the largest ``k`` with ``q_k`` not exceeding the
    remainder, so when ``a_1 = 1`` units are carried by ``q_1`` (digit bounded
    by ``a_2``) rather than ``q_0``.
    """
    if n < 0:
        raise ValidationError("n must be nonnegative")
    k = 0
    while table.q(k + 1) <= n:
        k += 1
    out = []
    rem = n
    while rem > 0:
        while table.q(k) > rem:
            k -= 1
        c, rem = divmod(rem, table.q(k))
        out.append((k, c))
        k -= 1
    return out


def ostrowski_admissible(digits: Sequence[Tuple[int, int]], table: ConvergentTable) -> bool:
    d = dict(digits)
    for k, c in d.items():
        if c < 0 or c > table.a(k + 1):
            return False
        if c == table.a(k + 1) and k >= 1 and d.get(k - 1, 0) != 0:
            return False
    return True


def dist_to_integer_ostrowski(n: int, table: ConvergentTable, tol: Fraction) -> CertifiedReal:
    """``||n theta||`` assembled from Ostrowski digits and ``q_k theta - p_k``.

    Alternate route to :func:`dist_to_integer`; only the small signed
    quantities ``q_k theta - p_k`` are approximated.
    """
    if n == 0:
        return CertifiedReal.exact(0)
    digits = ostrowski_digits(n, table)
    m = table.index_for(n, tol)
    theta = theta_approx(table, m)
    total = CertifiedReal.exact(0)
    for k, c in digits:
        total = total + c * (table.q(k) * theta - table.p(k))
    x = total.value
    v = _dist_frac(x)
    # sum c_k q_k = n, so the accumulated error is at most n/(q_m q_{m+1}).
    return CertifiedReal(v, Fraction(n, table.q(m) * table.q(m + 1)))
