"""Exact finite arc unions on the circle and the sets built from the orbit.

Sets are finite unions of half-open arcs ``[l, r)`` with ``Fraction``
endpoints.  Orbit points ``n theta`` are replaced by ``{n p_m / q_m}`` for a
convergent fine enough that every endpoint ordering is provably the same as
for the true ``theta``; what remains is a translation error, carried as a
bound on the measure of the symmetric difference between the computed set and
the true one (:attr:`CircleIntervalSet.perturbation`).

Endpoints are stored as ``gmpy2.mpq`` (exact, and several times faster than
``Fraction`` for the large unions built here); they compare and hash equal
to the corresponding ``Fraction``.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from gmpy2 import mpq

from .certified import CertifiedReal, clog, cpow, decide_less, render_rational
from .cf_core import ConvergentTable, IrrationalSpec, dist_to_integer, frac_position
from .errors import InternalConsistencyError, PrecisionError, ResourceCapError, ValidationError
from .phi_funcs import PhiSpec, at_least_four, classify_blocks, dyadic_blocks

DEFAULT_CAP_ARCS = 10**6
RADIUS_BITS = 96
PHI_TOL = Fraction(1, 1 << 100)
# Largest convergent denominator (in bits) tried before giving up on
# separating endpoints.
MAX_APPROX_BITS = 8192
PERTURBATION_BITS = 64


def Q(x) -> mpq:
    return x if isinstance(x, type(_ZERO)) else mpq(x)


_ZERO = mpq(0)
_ONE = mpq(1)


def to_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(int(x.numerator), int(x.denominator))


def exact_sum(xs: Iterable) -> Fraction:
    """Pairwise sum; far cheaper than a left fold when denominators differ."""
    xs = [Q(x) for x in xs]
    if not xs:
        return Fraction(0)
    while len(xs) > 1:
        nxt = [xs[i] + xs[i + 1] for i in range(0, len(xs) - 1, 2)]
        if len(xs) % 2:
            nxt.append(xs[-1])
        xs = nxt
    return to_fraction(xs[0])


def _key(x) -> mpq:
    return Q(x)


# ---------------------------------------------------------------------------
# Arc sets


@dataclass(frozen=True)
class CircleIntervalSet:
    """Sorted, pairwise disjoint, non-touching half-open arcs in ``[0, 1)``.

    ``perturbation`` bounds the measure of the symmetric difference between
    this set and the set it stands for (zero for purely exact input).
    """

    arcs: Tuple[Tuple[mpq, mpq], ...] = ()
    perturbation: Fraction = Fraction(0)
    meta: Dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "perturbation", to_fraction(Q(self.perturbation)))

    @classmethod
    def empty(cls) -> "CircleIntervalSet":
        return cls(())

    @classmethod
    def full(cls) -> "CircleIntervalSet":
        return cls(((_ZERO, _ONE),))

    @classmethod
    def from_arcs(cls, arcs: Iterable[Tuple[Fraction, Fraction]], perturbation: Fraction = Fraction(0),
                  meta: Optional[Dict] = None) -> "CircleIntervalSet":
        """Normalize arbitrary arcs ``[l, r)`` (``r - l`` may wrap past 1)."""
        pieces = []
        for l, r in arcs:
            l, r = Q(l), Q(r)
            length = r - l
            if length < 0:
                raise ValidationError(f"arc [{l}, {r}) has negative length")
            if length == 0:
                continue
            if length >= 1:
                return cls(((_ZERO, _ONE),), perturbation, meta or {})
            l0 = l - math.floor(l)
            r0 = l0 + length
            if r0 <= 1:
                pieces.append((l0, r0))
            else:
                pieces.append((l0, _ONE))
                pieces.append((_ZERO, r0 - 1))
        return cls(_merge(pieces), perturbation, meta or {})

    @classmethod
    def ball(cls, center: Fraction, radius: Fraction) -> "CircleIntervalSet":
        return cls.from_arcs([(center - radius, center + radius)])

    # -- queries ------------------------------------------------------------
    def __len__(self) -> int:
        return len(self.arcs)

    @property
    def measure(self) -> Fraction:
        return exact_sum(r - l for l, r in self.arcs)

    @property
    def certified_measure(self) -> CertifiedReal:
        return CertifiedReal(self.measure, self.perturbation)

    def contains(self, x) -> bool:
        x = Q(x)
        x -= math.floor(x)
        lefts = self._lefts()
        i = bisect.bisect_right(lefts, _key(x)) - 1
        return i >= 0 and x < self.arcs[i][1]

    def _lefts(self):
        cache = self.meta.get("_lefts")
        if cache is None or len(cache) != len(self.arcs):
            cache = [_key(l) for l, _ in self.arcs]
            self.meta["_lefts"] = cache
        return cache

    # -- algebra --------------------------------------------------------------
    def union(self, other: "CircleIntervalSet") -> "CircleIntervalSet":
        return CircleIntervalSet(_merge(list(self.arcs) + list(other.arcs)), self.perturbation + other.perturbation)

    def intersection(self, other: "CircleIntervalSet") -> "CircleIntervalSet":
        a, b = self.arcs, other.arcs
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] <= b[j][1]:
                i += 1
            else:
                j += 1
        return CircleIntervalSet(tuple(out), self.perturbation + other.perturbation)

    __or__ = union
    __and__ = intersection

    def complement(self) -> "CircleIntervalSet":
        out = []
        prev = _ZERO
        for l, r in self.arcs:
            if l > prev:
                out.append((prev, l))
            prev = r
        if prev < 1:
            out.append((prev, _ONE))
        return CircleIntervalSet(tuple(out), self.perturbation)

    # -- export -------------------------------------------------------------
    def csv_rows(self) -> List[Tuple[str, str]]:
        return [(render_rational(l), render_rational(r)) for l, r in self.arcs]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("left", "right"))
        w.writerows(self.csv_rows())


def _merge(pieces: List[Tuple[mpq, mpq]]) -> Tuple[Tuple[mpq, mpq], ...]:
    pieces.sort(key=lambda p: _key(p[0]))
    out: List[List[Fraction]] = []
    for l, r in pieces:
        if out and l <= out[-1][1]:
            if r > out[-1][1]:
                out[-1][1] = r
        else:
            out.append([l, r])
    return tuple((l, r) for l, r in out)


# ---------------------------------------------------------------------------
# Orbit balls with a certified convergent approximation


@dataclass(frozen=True)
class Ball:
    n: int
    radius: mpq
    radius_error: mpq = _ZERO


def _radius(x: CertifiedReal) -> Tuple[mpq, mpq]:
    """Rational radius and an upper bound on its error, both dyadic."""
    if x.is_exact:
        return Q(x.value), _ZERO
    r = x.rounded(RADIUS_BITS)
    scale = 1 << (RADIUS_BITS + 32)
    err = -((-r.error_bound.numerator * scale) // r.error_bound.denominator)
    return Q(r.value), mpq(err, scale)


def _position(n: int, p: int, q: int) -> mpq:
    return mpq((n * p) % q, q)


def _balls_to_set(balls: Sequence[Ball], table: ConvergentTable, what: str) -> CircleIntervalSet:
    """Union of ``B(n theta, radius)`` with orderings certified stable."""
    if not balls:
        return CircleIntervalSet.empty()
    N = max(b.n for b in balls)
    r_min = min(b.radius for b in balls)
    # The policy's r_min/100 keeps orderings decidable; the second term keeps
    # the accumulated translation error negligible next to any audit margin.
    tol = min(Q(r_min) / 128, mpq(1, (1 << PERTURBATION_BITS) * 4 * len(balls)))
    m = table.index_for(N, to_fraction(tol))
    while True:
        pm, qm = table.p(m), table.q(m)
        qq = qm * table.q(m + 1)
        if qq.bit_length() > 2 * MAX_APPROX_BITS:
            raise PrecisionError(f"{what}: endpoints not separable with convergents up to 2^{MAX_APPROX_BITS}")
        ends = []
        arcs = []
        for b in balls:
            c = _position(b.n, pm, qm)
            e = mpq(b.n, qq) + b.radius_error
            lo, hi = c - b.radius, c + b.radius
            arcs.append((lo, hi))
            ends.append((lo - math.floor(lo), e))
            ends.append((hi - math.floor(hi), e))
        if _orderings_stable(ends):
            meta = {"m": m, "q_m": qm, "balls": len(balls), "center_error_max": Fraction(N, qq)}
            return CircleIntervalSet.from_arcs(arcs, _perturbation(balls, qq), meta)
        m = table.index_for(N, Fraction(N, qq) / (1 << 32))


def _perturbation(balls: Sequence[Ball], qq: int) -> Fraction:
    """``sum 2 (n/(q_m q_{m+1}) + radius error)``: each ball moves by at most that much."""
    centers = Fraction(2 * sum(b.n for b in balls), qq)
    return centers + 2 * exact_sum(b.radius_error for b in balls)


def _orderings_stable(ends: List[Tuple[mpq, mpq]]) -> bool:
    """True when no two cyclically adjacent endpoints can swap order."""
    if len(ends) < 2:
        return True
    ends.sort(key=lambda t: _key(t[0]))
    for i in range(len(ends)):
        x, ex = ends[i]
        y, ey = ends[(i + 1) % len(ends)]
        gap_f = float(y) - float(x)
        if i == len(ends) - 1:
            gap_f += 1.0
        slack = float(ex + ey)
        if gap_f > 2 * slack + 1e-12:
            continue
        gap = y - x + (1 if i == len(ends) - 1 else 0)
        if gap <= ex + ey:
            return False
    return True


# ---------------------------------------------------------------------------
# E_k


def _check_cap(count: int, cap_arcs: int, what: str) -> None:
    if count > cap_arcs:
        raise ResourceCapError(f"{what} needs {count} balls, above the cap of {cap_arcs}")


def _phi_radius(phi: PhiSpec, n: int) -> Ball:
    return Ball(n, *_radius(1 / (phi.eval(n, PHI_TOL) * n)))


def build_Ek(theta: IrrationalSpec, phi: PhiSpec, k: int, table: Optional[ConvergentTable] = None,
             cap_arcs: int = DEFAULT_CAP_ARCS) -> CircleIntervalSet:
    """Union of ``B(n theta, 1/(n phi(n)))`` over ``q_k < n <= q_{k+1}`` (phi floored at 4)."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    table = table or ConvergentTable(theta)
    phi4 = at_least_four(phi)
    qk, qk1 = table.q(k), table.q(k + 1)
    _check_cap(qk1 - qk, cap_arcs, f"E_{k}")
    balls = [_phi_radius(phi4, n) for n in range(qk + 1, qk1 + 1)]
    out = _balls_to_set(balls, table, f"E_{k}")
    out.meta.update(k=k, n_range=(qk + 1, qk1))
    return out


# ---------------------------------------------------------------------------
# G_k


def q_star(phi4: PhiSpec, qk: int, qk1: int) -> int:
    """``max{n >= q_k : n phi(n) < q_{k+1}}``, or ``q_k`` when that set is empty."""

    def below(n: int) -> bool:
        return decide_less(lambda t: phi4.eval(n, t) * n, qk1)

    if not below(qk):
        return qk
    lo, hi = qk, qk1  # below(lo) holds; below(hi) fails since phi >= 4
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if below(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class GkStructure:
    k: int
    q_k: int
    q_next: int
    q_prev: int
    q_star: int
    b_next: int
    a_next: int
    phi_next: CertifiedReal
    phi_k: CertifiedReal
    layers: List[Tuple[int, CircleIntervalSet]]
    radii: List[Fraction]
    radius_enclosures: List[CertifiedReal]
    union: CircleIntervalSet
    table: ConvergentTable = field(repr=False)

    @property
    def measure(self) -> CertifiedReal:
        return self.union.certified_measure

    def layer_n_range(self, i: int) -> Tuple[int, int]:
        return self.q_next - (i + 1) * self.q_k + 1, self.q_next - i * self.q_k

    def layer_closed_form(self, i: int) -> CertifiedReal:
        return CertifiedReal.exact(self.q_k) * self.radius_enclosures[i] * 2

    def closed_form(self) -> CertifiedReal:
        """``q_k/(4 phi(q_{k+1})) * sum_i 1/(q_{k+1} - i q_k)``: ``q_k`` arcs of length ``2 rho_i`` per layer."""
        return self.stated_closed_form() * 2

    def stated_closed_form(self) -> CertifiedReal:
        """The same sum with ``8`` in place of ``4``, i.e. one radius per ball instead of two."""
        s = CertifiedReal.exact(exact_sum(Fraction(1, self.q_next - i * self.q_k) for i in range(self.b_next)))
        return CertifiedReal.exact(Fraction(self.q_k, 8)) * s / self.phi_next

    def contains_certified(self, s: Fraction) -> Optional[bool]:
        """Membership of ``s`` decided from certified distances to true orbit points.

        Returns None if ``s`` sits within the approximation error of a ball
        boundary.
        """
        m = self.union.meta["m"]
        qq = self.table.q(m) * self.table.q(m + 1)
        s = Q(s)
        s -= math.floor(s)
        centers = self._centers()
        keys = [c[0] for c in centers]
        j = bisect.bisect_left(keys, _key(s))
        undecided = False
        for t in (j - 2, j - 1, j, j + 1):
            _, c, n, i = centers[t % len(centers)]
            d = abs(c - s)
            d = min(d, 1 - d)
            err = mpq(n, qq)
            rho = self.radius_enclosures[i]
            if d + err < Q(rho.lo):
                return True
            if not d - err >= Q(rho.hi):
                undecided = True
        return None if undecided else False

    def _centers(self):
        cache = getattr(self, "_center_cache", None)
        if cache is None:
            m = self.union.meta["m"]
            pm, qm = self.table.p(m), self.table.q(m)
            cache = []
            for i in range(self.b_next):
                lo, hi = self.layer_n_range(i)
                for n in range(lo, hi + 1):
                    c = _position(n, pm, qm)
                    cache.append((_key(c), c, n, i))
            cache.sort(key=lambda t: t[0])
            self._center_cache = cache
        return cache

    def to_dict(self):
        return {
            "k": self.k,
            "q_k": self.q_k,
            "q_k_plus_1": self.q_next,
            "q_star": self.q_star,
            "b_k_plus_1": self.b_next,
            "a_k_plus_1": self.a_next,
            "phi_q_k_plus_1": self.phi_next.render(),
            "layers": [
                {"i": i, "balls": self.q_k, "radius": render_rational(r), "measure": layer.certified_measure.render()}
                for (i, layer), r in zip(self.layers, self.radii)
            ],
            "measure": self.measure.render(),
            "closed_form": self.closed_form().render(),
        }


def build_Gk(theta: IrrationalSpec, phi: PhiSpec, k: int, table: Optional[ConvergentTable] = None,
             cap_arcs: int = DEFAULT_CAP_ARCS) -> GkStructure:
    """Layers ``G_{k,i}``, ``0 <= i < b_{k+1}``, each ``q_k`` balls of equal radius."""
    if k < 1:
        raise ValidationError("G_k is built for k >= 1 (k = 0 is degenerate when a_1 = 1)")
    table = table or ConvergentTable(theta)
    phi4 = at_least_four(phi)
    qk, qk1, qkm = table.q(k), table.q(k + 1), table.q(k - 1)
    qs = q_star(phi4, qk, qk1)
    if not qk <= qs < qk1:
        raise InternalConsistencyError(f"q*_{k} = {qs} outside [q_k, q_(k+1))")
    b = -((qs - qk1) // qk)
    a = table.a(k + 1)
    if not 1 <= b <= a:
        raise InternalConsistencyError(f"b_(k+1) = {b} outside [1, a_(k+1) = {a}]")
    _check_cap(b * qk, cap_arcs, f"G_{k}")
    phi_next = phi4.eval(qk1, PHI_TOL)
    enclosures, radii, balls_by_layer = [], [], []
    all_balls = []
    for i in range(b):
        enc = 1 / (phi_next * (8 * (qk1 - i * qk)))
        r, e = _radius(enc)
        enclosures.append(enc)
        radii.append(r)
        layer = [Ball(n, r, e) for n in range(qk1 - (i + 1) * qk + 1, qk1 - i * qk + 1)]
        balls_by_layer.append(layer)
        all_balls.extend(layer)
    union = _balls_to_set(all_balls, table, f"G_{k}")
    m = union.meta["m"]
    pm, qm = table.p(m), table.q(m)
    qq = qm * table.q(m + 1)
    layers = []
    for i, layer in enumerate(balls_by_layer):
        pert = _perturbation(layer, qq)
        arcs = []
        for bl in layer:
            c = _position(bl.n, pm, qm)
            arcs.append((c - bl.radius, c + bl.radius))
        layers.append((i, CircleIntervalSet.from_arcs(arcs, pert, {"m": m})))
    expected = exact_sum(2 * qk * r for r in radii)
    if union.measure != expected:
        raise InternalConsistencyError(f"G_{k}: balls overlap (union {union.measure} < sum {expected})")
    union.meta.update(k=k)
    return GkStructure(k, qk, qk1, qkm, qs, b, a, phi_next, phi4.eval(qk, PHI_TOL), layers, radii, enclosures, union, table)


# ---------------------------------------------------------------------------
# Audits


@dataclass
class AuditRow:
    inequality_id: str
    k: int
    lhs: CertifiedReal
    relation: str
    rhs: CertifiedReal
    holds: bool

    def to_dict(self):
        return {
            "id": self.inequality_id,
            "k": self.k,
            "lhs": self.lhs.render(),
            "relation": self.relation,
            "rhs": self.rhs.render(),
            "holds": self.holds,
        }


def _holds(lhs: CertifiedReal, rel: str, rhs: CertifiedReal) -> bool:
    if rel == "<=":
        return lhs.hi <= rhs.lo
    if rel == "<":
        return lhs.hi < rhs.lo
    if rel == ">=":
        return lhs.lo >= rhs.hi
    if rel == ">":
        return lhs.lo > rhs.hi
    if rel == "==":
        return lhs.overlaps(rhs)
    raise ValueError(rel)


def _row(rid: str, k: int, lhs, rel: str, rhs) -> AuditRow:
    lhs = lhs if isinstance(lhs, CertifiedReal) else CertifiedReal.exact(lhs)
    rhs = rhs if isinstance(rhs, CertifiedReal) else CertifiedReal.exact(rhs)
    return AuditRow(rid, k, lhs, rel, rhs, _holds(lhs, rel, rhs))


def audit_k(theta: IrrationalSpec, phi: PhiSpec, k: int, table: Optional[ConvergentTable] = None,
            cap_arcs: int = DEFAULT_CAP_ARCS, G: Optional[GkStructure] = None) -> List[AuditRow]:
    """All construction inequalities at one ``k``, each under its own hypothesis."""
    table = table or ConvergentTable(theta)
    phi4 = at_least_four(phi)
    qk, qk1, qkm = table.q(k), table.q(k + 1), table.q(k - 1)
    rows: List[AuditRow] = []
    E = build_Ek(theta, phi4, k, table, cap_arcs).certified_measure
    phik = phi4.eval(qk, PHI_TOL)
    rhs1 = clog(Fraction(qk1, qk)) * 2 / phik
    rows.append(_row("lll1", k, E, "<=", rhs1))
    if decide_less(lambda t: phi4.eval(qk, t) * qk, qk1):
        rhs2 = 3 / phik + clog(phik) * 2 / phik
        rows.append(_row("lll2", k, E, "<=", rhs2))
    G = G or build_Gk(theta, phi4, k, table, cap_arcs)
    mu = G.measure
    inv = 1 / (G.phi_next * 8)
    rows.append(_row("q_star_range_low", k, qk, "<=", G.q_star))
    rows.append(_row("q_star_range_high", k, G.q_star, "<", qk1))
    rows.append(_row("b_range_low", k, 1, "<=", G.b_next))
    rows.append(_row("b_range_high", k, G.b_next, "<=", G.a_next))
    rows.append(_row("ineq0", k, mu, ">=", inv * clog(Fraction(qk1 + qk, qk + G.q_star))))
    rows.append(_row("ineq0_mid", k, mu, ">=", inv * clog(Fraction(qk1 + qk, qk1 - (G.b_next - 1) * qk))))
    if G.q_star == qk:
        rows.append(_row("b_equals_a", k, G.b_next, "==", G.a_next))
        rows.append(_row("ineq2", k, mu, ">=", inv * clog(Fraction(qk1 + qk, qk + qkm))))
    if decide_less(lambda t: phi4.eval(qk, t) * qk, qk1):
        phis = phi4.eval(G.q_star, PHI_TOL)
        rows.append(_row("ineq1", k, mu, ">=", clog(phis) / (G.phi_next * 16)))
    for i, layer in G.layers:
        rows.append(_row("closed_form_Gki", k, layer.certified_measure, "==", G.layer_closed_form(i)))
    rows.append(_row("closed_form_Gk", k, mu, "==", G.closed_form()))
    # The stated constant 8 counts each ball once by its radius; built / stated is exactly 2.
    built = exact_sum(2 * qk * r for r in G.radii)
    stated = exact_sum(qk * r for r in G.radii)
    rows.append(_row("stated_closed_form_ratio", k, built / stated, "==", 2))
    rows.append(_row("disjoint", k, G.union.measure, "==", exact_sum(2 * qk * r for r in G.radii)))
    r_max = G.radius_enclosures[-1]
    rows.append(_row("radius_le_quarter", k, r_max, "<=", Fraction(1, 4 * qk1)))
    half_gap = dist_to_integer(qk, table, Fraction(1, 1 << 128)) / 2
    rows.append(_row("radius_lt_half_gap", k, r_max, "<", half_gap))
    # Ball-level containment in F_k: radius of layer i against 1/(n phi(n)) at
    # the largest n of the layer (1/(n phi(n)) is decreasing), and n > q_{k-1}.
    for i in range(G.b_next):
        lo, hi = G.layer_n_range(i)
        rows.append(_row("containment_radius", k, G.radius_enclosures[i], "<=", 1 / (phi4.eval(hi, PHI_TOL) * hi)))
    rows.append(_row("containment_range", k, qkm, "<", G.layer_n_range(G.b_next - 1)[0]))
    return rows


def audit_inequalities(theta: IrrationalSpec, phi: PhiSpec, k_range: Iterable[int],
                       table: Optional[ConvergentTable] = None, cap_arcs: int = DEFAULT_CAP_ARCS) -> List[AuditRow]:
    table = table or ConvergentTable(theta)
    out = []
    for k in k_range:
        out.extend(audit_k(theta, phi, k, table, cap_arcs))
    return out


# ---------------------------------------------------------------------------
# Quasi-independence


@dataclass
class QuasiRow:
    ell: int
    k: int
    lhs: CertifiedReal
    rhs: CertifiedReal
    holds: bool

    def to_dict(self):
        return {"ell": self.ell, "k": self.k, "lhs": self.lhs.render(), "rhs": self.rhs.render(), "holds": self.holds}


def quasi_rhs(mu_k: CertifiedReal, mu_l: CertifiedReal, k: int, ell: int) -> CertifiedReal:
    """``mu(G_k) mu(G_l) + 6 / 2**((k - l)/2) * mu(G_k)``."""
    slack = 6 / cpow(2, Fraction(k - ell, 2))
    return (mu_k * mu_l + slack * mu_k).rounded(128)


def quasi_independence(theta: IrrationalSpec, phi: PhiSpec, pairs: Iterable[Tuple[int, int]],
                       table: Optional[ConvergentTable] = None, cap_arcs: int = DEFAULT_CAP_ARCS,
                       cache: Optional[Dict[int, GkStructure]] = None) -> List[QuasiRow]:
    table = table or ConvergentTable(theta)
    cache = {} if cache is None else cache

    def G(j):
        if j not in cache:
            cache[j] = build_Gk(theta, phi, j, table, cap_arcs)
        return cache[j]

    rows = []
    for ell, k in pairs:
        if not ell < k:
            raise ValidationError(f"pair ({ell}, {k}) needs ell < k")
        inter = G(k).union & G(ell).union
        lhs = inter.certified_measure
        rhs = quasi_rhs(G(k).measure, G(ell).measure, k, ell)
        rows.append(QuasiRow(ell, k, lhs, rhs, _holds(lhs, "<", rhs)))
    return rows


# ---------------------------------------------------------------------------
# Denjoy-Koksma counting


class KoksmaCount(NamedTuple):
    count: int
    bound_low: Fraction
    bound_high: Fraction
    holds: bool


def _orbit_segment(table: ConvergentTable, qk: int, x: mpq, tol: Fraction):
    """Sorted ``{x + n p_m/q_m}``, ``0 <= n < q_k``, and the largest position error."""
    m = table.index_for(max(qk, 1), tol)
    pm, qm = table.p(m), table.q(m)
    qq = qm * table.q(m + 1)
    pos = []
    for n in range(qk):
        p = x + _position(n, pm, qm)
        pos.append(p - math.floor(p))
    pos.sort()
    return pos, mpq(max(qk - 1, 0), qq), qq


def denjoy_koksma_batch(theta: IrrationalSpec, arcs: Sequence[Tuple[Fraction, Fraction]], k: int,
                        x: Fraction = Fraction(0), table: Optional[ConvergentTable] = None) -> List[KoksmaCount]:
    """:func:`denjoy_koksma_count` for many arcs sharing one orbit segment."""
    table = table or ConvergentTable(theta)
    qk = table.q(k)
    x = Q(x)
    sets = []
    for l, r in arcs:
        l, r = Q(l), Q(r)
        if not 0 <= r - l <= 1:
            raise ValidationError("arc length must be in [0, 1]")
        sets.append((r - l, CircleIntervalSet.from_arcs([(l, r)])))
    tol = Fraction(1, 1 << 64)
    while True:
        pos, e_max, qq = _orbit_segment(table, qk, x, tol)
        if not any(_near_endpoint(pos, I, e_max, x) for _, I in sets):
            break
        if qq.bit_length() > 2 * MAX_APPROX_BITS:
            raise PrecisionError("an orbit point is too close to an arc endpoint")
        tol = tol * tol
    out = []
    for length, I in sets:
        count = sum(bisect.bisect_left(pos, r) - bisect.bisect_left(pos, l) for l, r in I.arcs)
        expected = to_fraction(qk * length)
        out.append(KoksmaCount(count, expected - 2, expected + 2, abs(count - expected) < 2))
    return out


def _near_endpoint(pos: List[mpq], I: CircleIntervalSet, e: mpq, x: mpq) -> bool:
    """Some inexact orbit point lies within ``e`` of an endpoint of ``I``.

    The point for ``n = 0`` is ``x`` itself, exact, and never ambiguous.
    """
    if e == 0:
        return False
    for arc in I.arcs:
        for a in arc:
            for c in (a - e, a - e + 1, a - e - 1):
                i = bisect.bisect_left(pos, c)
                while i < len(pos) and pos[i] <= c + 2 * e:
                    if pos[i] != x - math.floor(x):
                        return True
                    i += 1
    return False


def denjoy_koksma_count(theta: IrrationalSpec, arc: Tuple[Fraction, Fraction], k: int, x: Fraction = Fraction(0),
                        table: Optional[ConvergentTable] = None) -> KoksmaCount:
    """Count ``0 <= n < q_k`` with ``{x + n theta}`` in the half-open arc ``[l, r)``.

    ``r`` may exceed 1 (wrapping) and ``r - l = 1`` is the full circle.  The
    result carries ``q_k mu(I) -+ 2`` and whether the count lies strictly
    between them.
    """
    return denjoy_koksma_batch(theta, [arc], k, x, table)[0]


# ---------------------------------------------------------------------------
# Partial sums of mu(G_k)


@dataclass
class GkSumTrend:
    measures: List[Tuple[int, CertifiedReal]]
    partial_sums: List[Tuple[int, CertifiedReal]]
    classification: str

    def to_dict(self):
        return {
            "classification": self.classification,
            "rows": [{"k": k, "mu_Gk": m.render(), "partial_sum": s.render()}
                     for (k, m), (_, s) in zip(self.measures, self.partial_sums)],
        }


def gk_sum_trend(theta: IrrationalSpec, phi: PhiSpec, k_max: int, table: Optional[ConvergentTable] = None,
                 cap_arcs: int = DEFAULT_CAP_ARCS) -> GkSumTrend:
    """Partial sums of ``mu(G_k)``, ``1 <= k <= k_max``, with the dyadic-block trend."""
    table = table or ConvergentTable(theta)
    measures, sums = [], []
    total = CertifiedReal.exact(0)
    for k in range(1, k_max + 1):
        mu = build_Gk(theta, phi, k, table, cap_arcs).measure
        total = total + mu
        measures.append((k, mu))
        sums.append((k, total))
    blocks = dyadic_blocks([(k, float(m.value)) for k, m in measures])
    return GkSumTrend(measures, sums, classify_blocks([b[2] for b in blocks]))
