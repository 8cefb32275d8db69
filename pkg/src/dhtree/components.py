"""Monotone component curves: pipe losses, valve characteristics, inverses.

Every hydraulic element maps a flow ``q`` to a differential pressure drop and
is strictly increasing in ``q``.  The shipped forms are power laws

    f(q) = k * q * |q|**(alpha - 1)

with ``alpha = 2`` the Darcy-Weisbach quadratic law.  Negative flows use the
odd extension, so all curves are defined on the whole real line.

Curves compose: pipes in series add pressures at equal flow, branches in
parallel add flows at equal pressure.  Power laws of equal exponent close
under both operations, which gives an exact equivalent-resistance reduction;
anything else falls back to bracketed bisection.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import (
    BracketExpansionFailed,
    ClosedValve,
    InvalidParameter,
    MaxIterations,
    NonFiniteInput,
)

INVERSION_TOLERANCE = 1e-12
MAX_BISECTION_ITERATIONS = 200
MAX_BRACKET_DOUBLINGS = 200
# Regularization floor for d/dq of k*q|q| at q = 0 (Newton oracle only).
SLOPE_FLOOR = 1e-8


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NonFiniteInput(f"non-finite input {v!r}")


def bisect(
    h: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = INVERSION_TOLERANCE,
    max_iter: int = MAX_BISECTION_ITERATIONS,
) -> float:
    """Root of an increasing function ``h`` on ``[lo, hi]``.

    Requires ``h(lo) <= 0 <= h(hi)``; the bracket is not re-checked.  Stops
    when the bracket is narrower than ``tol`` or when the midpoint can no
    longer be represented between the endpoints.
    """
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        v = h(mid)
        if v == 0.0:
            return mid
        if v < 0.0:
            lo = mid
        else:
            hi = mid
    if hi - lo <= tol:
        return 0.5 * (lo + hi)
    raise MaxIterations(
        f"bisection did not reach width {tol:g} in {max_iter} iterations "
        f"(bracket [{lo!r}, {hi!r}])"
    )


def expand_bracket(
    c: Callable[[float], float],
    target: float,
    max_doublings: int = MAX_BRACKET_DOUBLINGS,
) -> tuple[float, float]:
    """Bracket ``target`` for an increasing ``c``, starting at ``|q| = 1``."""
    lo, hi = -1.0, 1.0
    n = 0
    while c(hi) < target:
        lo, hi = hi, 2.0 * hi
        n += 1
        if n > max_doublings:
            raise BracketExpansionFailed(
                f"curve stays below {target!r} up to q = {hi!r}; "
                "is it bounded above?"
            )
    while c(lo) > target:
        lo, hi = 2.0 * lo, lo
        n += 1
        if n > max_doublings:
            raise BracketExpansionFailed(
                f"curve stays above {target!r} down to q = {lo!r}; "
                "is it bounded below?"
            )
    return lo, hi


def curve_inverse_numeric(
    c: "MonotoneCurve | Callable[[float], float]",
    p: float,
    tol: float = INVERSION_TOLERANCE,
    max_doublings: int = MAX_BRACKET_DOUBLINGS,
    max_iter: int = MAX_BISECTION_ITERATIONS,
) -> float:
    """Invert a strictly increasing, unbounded curve at ``p``.

    Geometric bracket expansion followed by bisection; ``tol`` is the final
    bracket width on the flow variable.
    """
    _check_finite(p)
    f = c.eval if isinstance(c, MonotoneCurve) else c
    lo, hi = expand_bracket(f, p, max_doublings)
    return bisect(lambda q: f(q) - p, lo, hi, tol, max_iter)


class MonotoneCurve:
    """Strictly increasing scalar map ``q -> p`` with an inverse.

    Subclasses implement :meth:`eval`; :meth:`inverse` defaults to numeric
    inversion and :meth:`slope` to a central difference.
    """

    tol: float = INVERSION_TOLERANCE

    def eval(self, q: float) -> float:
        raise NotImplementedError

    def inverse(self, p: float) -> float:
        return curve_inverse_numeric(self, p, self.tol)

    def slope(self, q: float) -> float:
        h = 1e-7 * max(1.0, abs(q))
        return max((self.eval(q + h) - self.eval(q - h)) / (2.0 * h), SLOPE_FLOOR)

    def __call__(self, q: float) -> float:
        return self.eval(q)


class FunctionCurve(MonotoneCurve):
    """Wrap a user-supplied increasing function (numeric inverse)."""

    def __init__(self, func: Callable[[float], float], tol: float = INVERSION_TOLERANCE):
        self.func = func
        self.tol = tol

    def eval(self, q: float) -> float:
        return self.func(q)

    def __repr__(self) -> str:
        return f"FunctionCurve({self.func!r})"


class PowerLawCurve(MonotoneCurve):
    """``k * q * |q|**(exponent - 1)`` with analytic inverse."""

    __slots__ = ("k", "exponent")

    def __init__(self, k: float, exponent: float = 2.0):
        if not (math.isfinite(k) and k > 0):
            raise InvalidParameter(f"power-law coefficient must be finite and > 0, got {k!r}")
        if not (math.isfinite(exponent) and exponent >= 1.0):
            raise InvalidParameter(f"exponent must be >= 1, got {exponent!r}")
        self.k = float(k)
        self.exponent = float(exponent)

    def eval(self, q: float) -> float:
        if self.exponent == 2.0:
            return self.k * q * abs(q)
        return self.k * math.copysign(abs(q) ** self.exponent, q)

    def inverse(self, p: float) -> float:
        if self.exponent == 2.0:
            return math.copysign(math.sqrt(abs(p) / self.k), p)
        return math.copysign((abs(p) / self.k) ** (1.0 / self.exponent), p)

    def slope(self, q: float) -> float:
        if self.exponent == 2.0:
            d = 2.0 * self.k * abs(q)
        else:
            d = self.exponent * self.k * abs(q) ** (self.exponent - 1.0)
        return max(d, SLOPE_FLOOR)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PowerLawCurve)
            and self.k == other.k
            and self.exponent == other.exponent
        )

    def __hash__(self) -> int:
        return hash((self.k, self.exponent))

    def __repr__(self) -> str:
        return f"PowerLawCurve(k={self.k!r}, exponent={self.exponent!r})"


def _pick_cheap(parts: Sequence[MonotoneCurve]) -> MonotoneCurve:
    for c in parts:
        if isinstance(c, PowerLawCurve):
            return c
    return parts[0]


class SeriesCurve(MonotoneCurve):
    """Elements carrying the same flow; pressures add.

    ``inverse`` solves ``sum_i f_i(q) = p`` by bisection on ``[0, f_j^-1(p)]``
    for any single part ``j`` (each part alone takes at most the whole drop).
    Parts must pass through the origin.

    When one part is a :class:`ParallelCurve`, whose ``eval`` is itself a
    bisection, the equation is rewritten as ``q = P^-1(p - sum_rest f_i(q))``
    so only the cheap inverse of ``P`` is needed.  Nested trees then cost one
    bisection per level instead of two.
    """

    def __init__(self, parts: Sequence[MonotoneCurve], tol: float = INVERSION_TOLERANCE,
                 max_iter: int = MAX_BISECTION_ITERATIONS):
        self.parts = tuple(parts)
        self.tol = tol
        self.max_iter = max_iter

    def eval(self, q: float) -> float:
        return math.fsum(c.eval(q) for c in self.parts)

    def inverse(self, p: float) -> float:
        if p == 0.0:
            return 0.0
        bound = _pick_cheap(self.parts).inverse(p)
        lo, hi = (0.0, bound) if bound > 0 else (bound, 0.0)
        par = next((c for c in self.parts if isinstance(c, ParallelCurve)), None)
        if par is None:
            return bisect(lambda q: self.eval(q) - p, lo, hi, self.tol, self.max_iter)
        rest = [c for c in self.parts if c is not par]

        def h(q: float) -> float:
            return q - par.inverse(p - math.fsum(c.eval(q) for c in rest))

        return bisect(h, lo, hi, self.tol, self.max_iter)

    def slope(self, q: float) -> float:
        return sum(c.slope(q) for c in self.parts)

    def __repr__(self) -> str:
        return f"SeriesCurve({list(self.parts)!r})"


class ParallelCurve(MonotoneCurve):
    """Branches at the same pressure; flows add.

    ``eval`` solves ``sum_i f_i^-1(p) = q`` for ``p`` on ``[0, f_j(q)]``.
    """

    def __init__(self, parts: Sequence[MonotoneCurve], tol: float = INVERSION_TOLERANCE,
                 max_iter: int = MAX_BISECTION_ITERATIONS):
        self.parts = tuple(parts)
        self.tol = tol
        self.max_iter = max_iter

    def inverse(self, p: float) -> float:
        return math.fsum(c.inverse(p) for c in self.parts)

    def eval(self, q: float) -> float:
        if q == 0.0:
            return 0.0
        bound = _pick_cheap(self.parts).eval(q)
        lo, hi = (0.0, bound) if bound > 0 else (bound, 0.0)
        return bisect(lambda p: self.inverse(p) - q, lo, hi, self.tol, self.max_iter)

    def slope(self, q: float) -> float:
        p = self.eval(q)
        return 1.0 / sum(1.0 / c.slope(c.inverse(p)) for c in self.parts)

    def __repr__(self) -> str:
        return f"ParallelCurve({list(self.parts)!r})"


def _flatten(parts: Iterable[MonotoneCurve], kind: type) -> list[MonotoneCurve]:
    out: list[MonotoneCurve] = []
    for c in parts:
        if isinstance(c, kind):
            out.extend(c.parts)
        else:
            out.append(c)
    return out


def series(parts: Iterable[MonotoneCurve], reduce: bool = True,
           tol: float = INVERSION_TOLERANCE,
           max_iter: int = MAX_BISECTION_ITERATIONS) -> MonotoneCurve:
    """Series composition; equal-exponent power laws merge by adding ``k``."""
    flat = _flatten(parts, SeriesCurve)
    if not flat:
        raise ValueError("series() needs at least one part")
    if reduce:
        sums: dict[float, list[float]] = defaultdict(list)
        rest: list[MonotoneCurve] = []
        for c in flat:
            if isinstance(c, PowerLawCurve):
                sums[c.exponent].append(c.k)
            else:
                rest.append(c)
        flat = [PowerLawCurve(math.fsum(ks), a) for a, ks in sums.items()] + rest
    if len(flat) == 1:
        return flat[0]
    return SeriesCurve(flat, tol, max_iter)


def _parallel_k(ks: Sequence[float], exponent: float) -> float:
    if exponent == 2.0:
        s = math.fsum(1.0 / math.sqrt(k) for k in ks)
        return 1.0 / (s * s)
    s = math.fsum(k ** (-1.0 / exponent) for k in ks)
    return s ** (-exponent)


def parallel(parts: Iterable[MonotoneCurve], reduce: bool = True,
             tol: float = INVERSION_TOLERANCE,
             max_iter: int = MAX_BISECTION_ITERATIONS) -> MonotoneCurve:
    """Parallel composition; equal-exponent power laws merge exactly."""
    flat = _flatten(parts, ParallelCurve)
    if not flat:
        raise ValueError("parallel() needs at least one part")
    if reduce:
        groups: dict[float, list[float]] = defaultdict(list)
        rest: list[MonotoneCurve] = []
        for c in flat:
            if isinstance(c, PowerLawCurve):
                groups[c.exponent].append(c.k)
            else:
                rest.append(c)
        flat = [PowerLawCurve(_parallel_k(ks, a), a) for a, ks in groups.items()] + rest
    if len(flat) == 1:
        return flat[0]
    return ParallelCurve(flat, tol, max_iter)


# -- pipe and valve parameters ----------------------------------------------

@dataclass(frozen=True)
class PipeCurveParams:
    """Supply and return loss coefficients of one network edge.

    The two layers carry the same flow, so the edge behaves as a single
    curve with ``k = k_supply + k_return``.
    """

    k_supply: float
    k_return: float
    exponent: float = 2.0

    def __post_init__(self):
        for name in ("k_supply", "k_return"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameter(f"{name} must be finite and >= 0, got {v!r}")
        if not self.k > 0:
            raise InvalidParameter("k_supply + k_return must be > 0")
        if not (math.isfinite(self.exponent) and self.exponent >= 1.0):
            raise InvalidParameter(f"exponent must be >= 1, got {self.exponent!r}")

    @property
    def k(self) -> float:
        return self.k_supply + self.k_return

    def curve(self) -> PowerLawCurve:
        return PowerLawCurve(self.k, self.exponent)


@dataclass(frozen=True)
class ValveCurveParams:
    """Valve with characteristic ``k_valve * u**-2 * q * |q|**(exponent-1)``."""

    k_valve: float
    exponent: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.k_valve) and self.k_valve > 0):
            raise InvalidParameter(f"k_valve must be finite and > 0, got {self.k_valve!r}")
        if not (math.isfinite(self.exponent) and self.exponent >= 1.0):
            raise InvalidParameter(f"exponent must be >= 1, got {self.exponent!r}")

    def curve(self, u: float) -> PowerLawCurve:
        """The valve's flow-pressure curve at fixed opening ``u``."""
        check_opening(u)
        return PowerLawCurve(self.k_valve / (u * u), self.exponent)


def check_opening(u: float) -> None:
    if not math.isfinite(u):
        raise NonFiniteInput(f"non-finite valve opening {u!r}")
    if u <= 0:
        raise ClosedValve(f"valve opening must be > 0, got {u!r}")
    if u > 1:
        warnings.warn(f"valve opening {u!r} is above the normal range (0, 1]",
                      RuntimeWarning, stacklevel=3)


def pipe_eval(params: PipeCurveParams, q: float) -> float:
    """Combined supply+return pressure drop at flow ``q``."""
    _check_finite(q)
    return params.curve().eval(q)


def valve_eval(params: ValveCurveParams, q: float, u: float) -> float:
    """Differential pressure across a valve at flow ``q`` and opening ``u``."""
    _check_finite(q)
    check_opening(u)
    k = params.k_valve / (u * u)
    if params.exponent == 2.0:
        return k * q * abs(q)
    return k * math.copysign(abs(q) ** params.exponent, q)


def valve_inverse(params: ValveCurveParams, p: float, u: float) -> float:
    """Flow through a valve at differential pressure ``p`` and opening ``u``."""
    _check_finite(p)
    check_opening(u)
    if params.exponent == 2.0:
        return u * math.copysign(math.sqrt(abs(p) / params.k_valve), p)
    return math.copysign((abs(p) * u * u / params.k_valve) ** (1.0 / params.exponent), p)
