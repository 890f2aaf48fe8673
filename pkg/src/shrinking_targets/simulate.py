"""Seeded Monte Carlo over targets ``s``.

Targets are dyadic rationals ``S / 2**64`` drawn from numpy's Philox
counter-based generator.  The orbit ``n theta`` is tracked in 64-bit fixed
point: with ``P`` the nearest integer to ``theta * 2**64``, the wrapped
product ``n P - S`` (mod ``2**64``) is exact in ``uint64``, and the residual
``n (theta - P/2**64)`` is added back in float64 from a convergent good to
``2**-110``.  Every reported minimum carries an explicit bound;
hit decisions whose float margin is inside that bound are re-done in exact
rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certified import CertifiedReal, render_decimal
from .cf_core import ConvergentTable, ExplicitList, ConstantQuotient, IrrationalSpec, dist_to_target
from .errors import ConstructionError, PrecisionError, ResourceCapError, ValidationError
from .phi_funcs import Constant, PhiSpec

PRNG_NAME = "numpy.random.Philox (Philox4x64-10)"
TWO64 = 1 << 64
# Relative error budget for the float64 part of n*phi(n)*D/2**64: the
# uint64->float conversion, phi evaluation and two products, each a few ulp.
FLOAT_REL = 2.0 ** -40
# A running minimum whose certified bound exceeds this fraction of its value
# is reported as a precision failure.
MAX_REL_BOUND = 1e-3
CHUNK = 1 << 20


def sample_targets(seed: int, M: int) -> np.ndarray:
    """``M`` numerators ``S`` of targets ``s = S / 2**64`` (uint64)."""
    if M < 0:
        raise ValidationError("M must be nonnegative")
    gen = np.random.Generator(np.random.Philox(seed))
    return gen.integers(0, TWO64, size=M, dtype=np.uint64, endpoint=False)


class FixedPointOrbit:
    """``n theta mod 1`` as ``n P mod 2**64`` plus the residual ``n eps``, ``eps = theta - P/2**64``.

    ``P`` rounds ``2**64 p_m/q_m`` for a convergent with ``|theta - p_m/q_m| <= 2**-110``;
    ``eps_f`` is ``eps`` as a float and ``delta`` bounds ``|eps - eps_f|``.
    """

    def __init__(self, theta: IrrationalSpec, table: Optional[ConvergentTable] = None):
        self.theta = theta
        self.table = table or ConvergentTable(theta)
        m = self.table.index_for(1, Fraction(1, 1 << 110))
        self.m = m
        pm, qm = self.table.p(m), self.table.q(m)
        P = round(Fraction(pm << 64, qm))
        self.P = P % (1 << 64)
        eps = Fraction(pm, qm) - Fraction(P, 1 << 64)
        self.eps_f = float(eps)
        self.delta = abs(eps - Fraction(self.eps_f)) + Fraction(1, qm * self.table.q(m + 1))

    def positions(self, lo: int, hi: int) -> np.ndarray:
        n = np.arange(lo, hi + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            return n * np.uint64(self.P)

    def distances(self, X: np.ndarray, nf: np.ndarray, S: np.uint64) -> np.ndarray:
        """Float ``||n theta - S/2**64||`` for positions ``X = positions(...)`` and ``nf = n``."""
        with np.errstate(over="ignore"):
            t = (X - S).view(np.int64).astype(np.float64) / float(TWO64) + nf * self.eps_f
        a = np.abs(t)
        return np.where(a > 0.5, 1.0 - a, a)

    def abs_error(self, nf):
        """Bound on ``|distances - exact|`` beyond the relative float rounding."""
        return nf * (float(self.delta) + abs(self.eps_f) * 2.0 ** -50) + 2.0 ** -100


@dataclass
class SimulationResult:
    seed: int
    theta: str
    phi: str
    M: int
    checkpoints: List[int]
    targets: List[int]
    minima: List[List[float]]
    minima_bounds: List[List[float]]
    argmins: List[List[int]]
    hits: List[List[int]]
    quantiles: List[Dict[str, float]]
    prng: str = PRNG_NAME
    exact_fallbacks: int = 0

    def median_series(self) -> List[float]:
        return [q["median"] for q in self.quantiles]

    def to_dict(self):
        return {
            "seed": self.seed,
            "prng": self.prng,
            "theta": self.theta,
            "phi": self.phi,
            "M": self.M,
            "checkpoints": self.checkpoints,
            "exact_fallbacks": self.exact_fallbacks,
            "quantiles": [
                {"N": N, **{k: _fmt(v) for k, v in q.items()}} for N, q in zip(self.checkpoints, self.quantiles)
            ],
            "samples": [
                {
                    "s": f"{S}/2^64",
                    "R_N": [f"{_fmt(v)}±{_fmt(b, 3)}" for v, b in zip(mins, bnds)],
                    "argmin_n": args,
                    "hits": h,
                }
                for S, mins, bnds, args, h in zip(self.targets, self.minima, self.minima_bounds, self.argmins, self.hits)
            ],
        }

    def quantile_rows(self):
        return [{"N": str(N), **{k: _fmt(v) for k, v in q.items()}} for N, q in zip(self.checkpoints, self.quantiles)]


QUANTILE_KEYS = ("min", "q25", "median", "q75", "max")


def _fmt(x: float, sig: int = 12) -> str:
    return format(float(x), f".{sig}g")


def _quantiles(values: np.ndarray) -> Dict[str, float]:
    if values.size == 0:
        return {k: float("nan") for k in QUANTILE_KEYS}
    qs = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(QUANTILE_KEYS, (float(x) for x in qs)))


def _exact_R_less_than_one(n: int, S: int, phi: PhiSpec, table: ConvergentTable) -> bool:
    """Decide ``n phi(n) ||n theta - S/2**64|| < 1`` in certified arithmetic."""
    s = Fraction(S, TWO64)
    tol = Fraction(1, 1 << 96)
    while True:
        d = dist_to_target(n, s, table, tol)
        f = phi.eval(n, tol)
        r = d * f * n
        if r.certainly_lt(1):
            return True
        if r.lo >= 1:
            return False
        if tol < Fraction(1, 1 << 2048):
            raise PrecisionError(f"hit decision at n={n} undecidable")
        tol = tol * tol


def _scan(theta: IrrationalSpec, phi: PhiSpec, targets: np.ndarray, checkpoints: Sequence[int],
          table: Optional[ConvergentTable] = None, track_minima: bool = True):
    """Core loop shared by the liminf experiment and the Minkowski count."""
    cps = [int(c) for c in checkpoints]
    if any(c < 1 for c in cps) or any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValidationError("checkpoints must be positive and strictly increasing")
    orbit = FixedPointOrbit(theta, table)
    N = cps[-1]
    M = len(targets)
    minima = np.full((M, len(cps)), np.inf)
    argmins = np.zeros((M, len(cps)), dtype=np.int64)
    bounds = np.zeros((M, len(cps)))
    hits = np.zeros((M, len(cps)), dtype=np.int64)
    fallbacks = 0
    # Segment boundaries: checkpoints, further split into CHUNK-sized pieces.
    segs = []
    lo = 1
    for j, c in enumerate(cps):
        while lo <= c:
            hi = min(c, lo + CHUNK - 1)
            segs.append((lo, hi, j if hi == c else None))
            lo = hi + 1
    cur_min = np.full(M, np.inf)
    cur_arg = np.zeros(M, dtype=np.int64)
    cur_hits = np.zeros(M, dtype=np.int64)
    for lo, hi, j in segs:
        X = orbit.positions(lo, hi)
        nf = np.arange(lo, hi + 1, dtype=np.float64)
        phin = phi.float_values(nf)
        w = nf * phin
        # Absolute slack per n: n phi(n) times the position error; rounding is in FLOAT_REL.
        theta_err = w * orbit.abs_error(nf)
        for i in range(M):
            v = orbit.distances(X, nf, targets[i]) * w
            if track_minima:
                a = int(np.argmin(v))
                if v[a] < cur_min[i]:
                    cur_min[i] = v[a]
                    cur_arg[i] = lo + a
            err = theta_err + v * FLOAT_REL
            sure = v < 1.0 - err
            amb = np.nonzero(np.abs(v - 1.0) <= err)[0]
            h = int(np.count_nonzero(sure))
            for idx in amb:
                fallbacks += 1
                if _exact_R_less_than_one(lo + int(idx), int(targets[i]), phi, orbit.table):
                    h += 1
            cur_hits[i] += h
        if j is not None:
            cN = cps[j]
            phiN = float(phi.float_values(np.array([float(cN)]))[0])
            theta_bound = float(cN * phiN * orbit.abs_error(float(cN)))
            for i in range(M):
                b = (theta_bound + 2 * cur_min[i] * FLOAT_REL) * (1 + 1e-9)
                if track_minima and cur_min[i] > 0 and b > MAX_REL_BOUND * cur_min[i]:
                    raise PrecisionError(
                        f"running minimum at N={cN} has bound {b:.3g} > {MAX_REL_BOUND} x value {cur_min[i]:.3g}"
                    )
                minima[i, j] = cur_min[i]
                argmins[i, j] = cur_arg[i]
                bounds[i, j] = b
                hits[i, j] = cur_hits[i]
    return minima, bounds, argmins, hits, fallbacks


def run_liminf_experiment(theta: IrrationalSpec, phi: PhiSpec, M: int, checkpoints: Sequence[int], seed: int,
                          targets: Optional[Sequence[int]] = None, table: Optional[ConvergentTable] = None) -> SimulationResult:
    """Running minima ``R_N(s) = min_{n<=N} n phi(n) ||n theta - s||`` and hit counts.

    ``targets`` overrides the random draw with explicit numerators ``S``
    (``s = S/2**64``); ``s = 0`` is allowed and yields the homogeneous case.
    """
    if M < 1 and targets is None:
        raise ValidationError("M must be >= 1")
    T = np.asarray(targets, dtype=np.uint64) if targets is not None else sample_targets(seed, M)
    minima, bounds, argmins, hits, fb = _scan(theta, phi, T, checkpoints, table)
    quant = [_quantiles(minima[:, j]) for j in range(len(checkpoints))]
    return SimulationResult(
        seed=seed,
        theta=theta.to_config(),
        phi=phi.to_config(),
        M=len(T),
        checkpoints=[int(c) for c in checkpoints],
        targets=[int(x) for x in T],
        minima=minima.tolist(),
        minima_bounds=bounds.tolist(),
        argmins=argmins.tolist(),
        hits=hits.tolist(),
        quantiles=quant,
        exact_fallbacks=fb,
    )


@dataclass
class MinkowskiResult:
    seed: int
    theta: str
    M: int
    checkpoints: List[int]
    targets: List[int]
    counts: List[List[int]]
    prng: str = PRNG_NAME

    def to_dict(self):
        return {
            "seed": self.seed,
            "prng": self.prng,
            "theta": self.theta,
            "M": self.M,
            "checkpoints": self.checkpoints,
            "samples": [{"s": f"{S}/2^64", "counts": c} for S, c in zip(self.targets, self.counts)],
        }


def minkowski_check(theta: IrrationalSpec, M: int, N_max: int, seed: int,
                    table: Optional[ConvergentTable] = None) -> MinkowskiResult:
    """Counts of ``n <= N`` with ``||n theta - s|| < 1/(4n)`` at dyadic ``N``."""
    if N_max < 1:
        raise ValidationError("N_max must be >= 1")
    cps = [1 << j for j in range(N_max.bit_length()) if (1 << j) <= N_max]
    if cps[-1] != N_max:
        cps.append(N_max)
    T = sample_targets(seed, M)
    if M == 0:
        return MinkowskiResult(seed, theta.to_config(), 0, cps, [], [])
    _, _, _, hits, _ = _scan(theta, Constant(Fraction(4)), T, cps, table, track_minima=False)
    return MinkowskiResult(seed, theta.to_config(), M, cps, [int(x) for x in T], hits.tolist())


# ---------------------------------------------------------------------------
# Greedy construction of a theta with phi(q_k) > k^2


def _phi_exceeds(phi: PhiSpec, n: int, target: int) -> bool:
    tol = Fraction(1, 1 << 64)
    while True:
        v = phi.eval(n, tol)
        if v.lo > target:
            return True
        if v.hi <= target:
            return False
        if v.is_exact:
            return v.value > target
        if tol < Fraction(1, 1 << 4096):
            raise PrecisionError(f"phi({n}) vs {target} undecidable")
        tol = tol * tol


def theta_builder_remark_i(phi: PhiSpec, K: int, max_quotient_bits: int = 1 << 16,
                           tail: Optional[IrrationalSpec] = None) -> ExplicitList:
    """Partial quotients ``a_1..a_K`` chosen greedily so that ``phi(q_k) > k**2``.

    At each step the smallest ``a_{k+1} >= 1`` with ``phi(q_{k+1}) > (k+1)**2``
    is found by doubling then bisection.  Quotients past ``K`` follow ``tail``
    (default all ones).
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    q_prev, q = 0, 1
    prefix: List[int] = []
    for k in range(K):
        target = (k + 1) ** 2

        def ok(a: int) -> bool:
            return _phi_exceeds(phi, a * q + q_prev, target)

        # Gallop on the bit length, pin it down by bisection, then bisect the value.
        if ok(1):
            prefix.append(1)
            q_prev, q = q, q + q_prev
            continue
        lo_bits, hi_bits = 0, 1
        while not ok(1 << hi_bits):
            lo_bits, hi_bits = hi_bits, 2 * hi_bits
            if hi_bits > max_quotient_bits:
                raise ConstructionError(
                    f"no quotient below 2^{max_quotient_bits} makes phi(q_{k + 1}) > {target}; phi may be bounded"
                )
        while hi_bits - lo_bits > 1:
            mid = (lo_bits + hi_bits) // 2
            if ok(1 << mid):
                hi_bits = mid
            else:
                lo_bits = mid
        lo, hi = 1 << lo_bits, 1 << hi_bits
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        prefix.append(hi)
        q_prev, q = q, hi * q + q_prev
    spec = ExplicitList(tuple(prefix), tail or ConstantQuotient(1))
    verify_remark_i(spec, phi, K)
    return spec


def verify_remark_i(theta: IrrationalSpec, phi: PhiSpec, K: int) -> None:
    table = ConvergentTable(theta)
    for k in range(1, K + 1):
        if not _phi_exceeds(phi, table.q(k), k * k):
            raise ConstructionError(f"post-check failed: phi(q_{k}) <= {k * k}")


# ---------------------------------------------------------------------------
# Borel-Cantelli membership statistic


def wilson_interval(hits: int, M: int, confidence: float = 0.95) -> Tuple[float, float]:
    if M == 0:
        return (0.0, 1.0)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = hits / M
    denom = 1 + z * z / M
    centre = (p + z * z / (2 * M)) / denom
    half = z * math.sqrt(p * (1 - p) / M + z * z / (4 * M * M)) / denom
    return (centre - half, centre + half)


@dataclass
class BorelCantelliRow:
    k: int
    measure: CertifiedReal
    hits: int
    frequency: float
    wilson: Tuple[float, float]
    within: bool
    median_cumulative: float
    disagreements: int = 0
    undecided: int = 0

    def to_dict(self):
        return {
            "k": self.k,
            "mu_Gk": self.measure.render(),
            "hits": self.hits,
            "frequency": _fmt(self.frequency),
            "wilson95": [_fmt(self.wilson[0]), _fmt(self.wilson[1])],
            "within": self.within,
            "median_cumulative_hits": _fmt(self.median_cumulative),
            "certified_disagreements": self.disagreements,
            "certified_undecided": self.undecided,
        }


@dataclass
class BorelCantelliResult:
    seed: int
    theta: str
    phi: str
    M: int
    rows: List[BorelCantelliRow]
    prng: str = PRNG_NAME

    @property
    def fraction_within(self) -> float:
        return sum(r.within for r in self.rows) / len(self.rows) if self.rows else 1.0

    def to_dict(self):
        return {
            "seed": self.seed,
            "prng": self.prng,
            "theta": self.theta,
            "phi": self.phi,
            "M": self.M,
            "fraction_within": _fmt(self.fraction_within),
            "rows": [r.to_dict() for r in self.rows],
        }


def borel_cantelli_statistic(theta: IrrationalSpec, phi: PhiSpec, k_range: Sequence[int], M: int, seed: int,
                             cap_arcs: Optional[int] = None) -> BorelCantelliResult:
    """Empirical frequency of ``s in G_k`` per ``k`` against the exact ``mu(G_k)``."""
    from .measure_lab import DEFAULT_CAP_ARCS, build_Gk

    if M == 0:
        return BorelCantelliResult(seed, theta.to_config(), phi.to_config(), 0, [])
    T = sample_targets(seed, M)
    s_vals = [Fraction(int(S), TWO64) for S in T]
    cumulative = np.zeros(M, dtype=np.int64)
    rows = []
    for k in k_range:
        G = build_Gk(theta, phi, k, cap_arcs=cap_arcs or DEFAULT_CAP_ARCS)
        member = np.fromiter((G.union.contains(s) for s in s_vals), dtype=bool, count=M)
        # Cross-check against membership decided from the exact centers and radii.
        disagree = undecided = 0
        for s, got in zip(s_vals, member):
            sure = G.contains_certified(s)
            if sure is None:
                undecided += 1
            elif sure != bool(got):
                disagree += 1
        cumulative += member
        h = int(member.sum())
        lo, hi = wilson_interval(h, M)
        mu = G.measure
        within = lo <= float(mu.value) <= hi
        rows.append(BorelCantelliRow(k, mu, h, h / M, (lo, hi), within, float(np.median(cumulative)),
                                    disagree, undecided))
    return BorelCantelliResult(seed, theta.to_config(), phi.to_config(), M, rows)
