"""Independent reference computations used as test oracles.

Nothing here imports the package under test: theta comes from closed forms
or a backward continued-fraction evaluation in mpmath, convergents from a
plain loop, and measures from an endpoint sweep or a brute-force grid.
"""

from fractions import Fraction

import mpmath
import numpy as np


def golden_theta(dps=60):
    with mpmath.workdps(dps):
        return (mpmath.sqrt(5) - 1) / 2


def theta_from_quotients(quotients, dps=80):
    """``[0; a_1, a_2, ...]`` evaluated backwards at ``dps`` digits."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(0)
        for a in reversed(quotients):
            x = 1 / (a + x)
        return x


def recurrence(quotients):
    """Plain ``(p_k, q_k)`` for ``k = 0..len(quotients)``."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    ps, qs = [p], [q]
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        ps.append(p)
        qs.append(q)
    return ps, qs


def dist_nearest_int(x):
    f = x - mpmath.floor(x)
    return min(f, 1 - f)


def sweep_measure(arcs):
    """Measure of a union of half-open arcs ``[l, r)`` (``r - l < 1``) by an event sweep."""
    events = []
    for l, r in arcs:
        l, r = Fraction(l), Fraction(r)
        if r <= l:
            continue
        shift = l.__floor__()
        l, r = l - shift, r - shift
        if r <= 1:
            events += [(l, 1), (r, -1)]
        else:
            events += [(l, 1), (Fraction(1), -1), (Fraction(0), 1), (r - 1, -1)]
    events.sort()
    depth, last, total = 0, Fraction(0), Fraction(0)
    for x, d in events:
        if depth > 0:
            total += x - last
        depth += d
        last = x
    return total


def grid_measure(arcs, step_exp=9, chunk=10**8):
    """Fraction of grid points ``j * 10**-step_exp`` covered by half-open arcs.

    ``arcs`` are float pairs ``(center, radius)``; the grid is swept in chunks
    of boolean masks filled by slice assignment.
    """
    n = 10**step_exp
    hits = 0
    spans = []
    for c, r in arcs:
        lo, hi = c - r, c + r
        for a, b in ((lo, hi), (lo + 1, hi + 1), (lo - 1, hi - 1)):
            ia = max(0, int(np.ceil(a * n)))
            ib = min(n, int(np.ceil(b * n)))
            if ia < ib:
                spans.append((ia, ib))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        mask = np.zeros(stop - start, dtype=bool)
        for ia, ib in spans:
            a, b = max(ia, start), min(ib, stop)
            if a < b:
                mask[a - start:b - start] = True
        hits += int(np.count_nonzero(mask))
    return hits / n
