"""Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals and on [a, inf).

Globally adaptive bisection: the interval with the largest error estimate
is split until the summed estimate drops below ``tol``. Error estimates
follow the QUADPACK QK15 heuristic. The Kronrod rule is open, so interval
endpoints are never evaluated; the semi-infinite routine relies on that
at ``t = 1``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivisionByZero, MaxSubdivisions, NonConvergent, PoleOnInterval

DEFAULT_TOL = 1e-10
DEFAULT_LIMIT = 4096

_EPS = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny

# Kronrod abscissae in (0, 1], descending; Gauss points are the odd entries
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
])
_WGK_CENTER = 0.209482141084727828012999174891714
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
])
_WG_CENTER = 0.417959183673469387755102040816327

# nodes on [-1, 1]: -x..., 0, +x...
_NODES = np.concatenate([-_XGK, [0.0], _XGK[::-1]])
_WK = np.concatenate([_WGK, [_WGK_CENTER], _WGK[::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[[1, 3, 5]] = _WG
_WG_FULL[7] = _WG_CENTER
_WG_FULL[[9, 11, 13]] = _WG[::-1]


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    subdivisions: int


def _gk15(f, a: float, b: float):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    try:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            fx = np.asarray(f(center + half * _NODES), dtype=float)
    except DivisionByZero as exc:
        raise PoleOnInterval(f"pole hit inside [{a}, {b}]") from exc
    if not np.all(np.isfinite(fx)):
        raise PoleOnInterval(f"non-finite integrand value inside [{a}, {b}]")
    resk = float(np.dot(_WK, fx))
    resg = float(np.dot(_WG_FULL, fx))
    mean = 0.5 * resk
    resabs = float(np.dot(_WK, np.abs(fx))) * abs(half)
    resasc = float(np.dot(_WK, np.abs(fx - mean))) * abs(half)
    value = resk * half
    err = abs((resk - resg) * half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    floor = 50.0 * _EPS * resabs
    if resabs > _UFLOW / (50.0 * _EPS):
        err = max(floor, err)
    return value, err, floor


class _Exhausted(Exception):
    def __init__(self, value, error, subdivisions, worst):
        self.value = value
        self.error = error
        self.subdivisions = subdivisions
        self.worst = worst


def _adaptive(f, a: float, b: float, tol: float, limit: int, rel_tol: float = 0.0) -> QuadResult:
    value, err, floor = _gk15(f, a, b)
    run_value = value
    # heap entries: (-err, a, b, value, err, floor)
    heap = [(-err, a, b, value, err, floor)]
    done = []  # intervals too narrow to split further
    n = 1
    run_err, run_floor = err, floor
    while True:
        if run_err <= max(tol, rel_tol * abs(run_value), 2.0 * run_floor) * (1.0 + 1e-9):
            live = heap + done
            total = math.fsum(item[3] for item in live)
            total_err = math.fsum(item[4] for item in live)
            total_floor = math.fsum(item[5] for item in live)
            run_value, run_err, run_floor = total, total_err, total_floor
            if total_err <= max(tol, rel_tol * abs(total), 2.0 * total_floor):
                return QuadResult(total, total_err, n)
        if not heap or n >= limit:
            live = heap + done
            worst = max(live, key=lambda item: item[4])
            raise _Exhausted(
                math.fsum(i[3] for i in live), math.fsum(i[4] for i in live), n, (worst[1], worst[2])
            )
        item = heapq.heappop(heap)
        _, lo, hi, v0, e0, fl0 = item
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi) or (hi - lo) <= 1000.0 * _EPS * max(abs(lo), abs(hi)):
            done.append(item)
            continue
        run_value -= v0
        run_err -= e0
        run_floor -= fl0
        for x0, x1 in ((lo, mid), (mid, hi)):
            v, e, fl = _gk15(f, x0, x1)
            heapq.heappush(heap, (-e, x0, x1, v, e, fl))
            run_value += v
            run_err += e
            run_floor += fl
        n += 1


def _check_poles(f, a: float, b: float):
    poles_in = getattr(f, "poles_in", None)
    if poles_in is None:
        return
    poles = poles_in(a, b)
    if poles:
        raise PoleOnInterval(f"integrand has a pole at p={poles[0]:.17g} in [{a}, {b}]")


def integrate_finite(
    f: Callable, a: float, b: float, tol: float = DEFAULT_TOL, limit: int = DEFAULT_LIMIT,
    rel_tol: float = 0.0,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]``.

    Stops once the error estimate is below ``max(tol, rel_tol * |value|)``.

    ``f`` must accept a numpy array. If it exposes ``poles_in(a, b)`` (as
    :class:`~divlim.expr.BoundIntegrand` does) poles are rejected up front.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if b < a:
        raise ValueError(f"need a <= b, got [{a}, {b}]")
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    _check_poles(f, a, b)
    try:
        return _adaptive(f, a, b, tol, limit, rel_tol)
    except _Exhausted as exc:
        raise MaxSubdivisions(
            f"error estimate {exc.error:.3e} above tol {tol:.1e} after "
            f"{exc.subdivisions} subdivisions; worst interval {exc.worst}"
        ) from None


def integrate_semi_infinite(
    f: Callable, a: float = 0.0, tol: float = DEFAULT_TOL, limit: int = DEFAULT_LIMIT,
    rel_tol: float = 0.0,
) -> QuadResult:
    """Integrate ``f`` over ``[a, inf)`` via ``p = a + t/(1-t)``, ``t`` in ``[0, 1)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_poles(f, a, math.inf)

    def mapped(t):
        s = 1.0 - t
        with np.errstate(divide="ignore", invalid="ignore"):
            return f(a + t / s) / (s * s)

    try:
        return _adaptive(mapped, 0.0, 1.0, tol, limit, rel_tol)
    except _Exhausted as exc:
        lo, hi = exc.worst
        if hi == 1.0 or hi > 1.0 - 1e-6:
            raise NonConvergent(
                f"integrand tail does not decay fast enough: error {exc.error:.3e} "
                f"concentrated near p = inf"
            ) from None
        raise MaxSubdivisions(
            f"error estimate {exc.error:.3e} above tol {tol:.1e} after "
            f"{exc.subdivisions} subdivisions"
        ) from None
