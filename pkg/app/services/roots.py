"""Section characteristic roots, stream roots and pinch indicators.

A section with net upward flows d and vapor V has c roots of

    sum_i alpha_i d_i / (alpha_i - gamma) = V

Components with zero net flow pin a root at their own volatility. The remaining
roots are bracketed between the poles of the reduced equation:

- between consecutive negative flows the function falls from +inf to -inf,
- between consecutive positive flows it rises from -inf to +inf,
- between the last negative and the first positive flow it is convex with a
  minimum, giving two roots or none,
- with positive flows only the pinch root sits below the first positive pole,
- with negative flows only it sits above the last negative pole.
"""

from __future__ import annotations

import bisect
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from scipy.optimize import brentq

from app.config import Settings
from app.model.errors import (
    BracketFailure,
    EmptyStream,
    NonpositiveV,
    RootOutOfInterval,
    SignPatternViolation,
)
from app.model.results import RootSet, StreamRoots
from app.model.spec import StreamSpec
from app.services.core import liquid_composition, sign_pattern_ok

log = logging.getLogger(__name__)

_DEFAULTS = Settings()
_RTOL = 4 * sys.float_info.epsilon
_MAX_DOUBLINGS = 200


@dataclass(frozen=True, slots=True)
class Roots:
    """Plain-tuple root set used on hot paths; see RootSet for the public model."""

    values: tuple[float, ...]
    intervals: tuple[int, ...]
    pinned: tuple[bool, ...]
    pinch: int  # 1-based position
    tie: bool = False

    def to_model(self) -> RootSet:
        return RootSet(
            roots=self.values,
            intervals=self.intervals,
            pinned=self.pinned,
            pinch_index=self.pinch,
            tie=self.tie,
        )


def characteristic(d: Sequence[float], alphas: Sequence[float], gamma: float) -> float:
    """Left-hand side of the section equation at gamma (zero flows skipped)."""
    return sum(a * x / (a - gamma) for a, x in zip(alphas, d) if x != 0.0)


def characteristic_slope(d: Sequence[float], alphas: Sequence[float], gamma: float) -> float:
    return sum(a * x / (a - gamma) ** 2 for a, x in zip(alphas, d) if x != 0.0)


def interval_of(value: float, alphas: Sequence[float]) -> int:
    """i such that alpha_{i-1} < value < alpha_i, with alpha_0 = 0 and c+1 above alpha_c."""
    return bisect.bisect_left(alphas, value) + 1


def structural_interval(d: Sequence[float]) -> int:
    """Pinch interval dictated by the sign pattern alone (1-based, up to c+1)."""
    pos = [i for i, x in enumerate(d) if x > 0]
    if pos:
        return pos[0] + 1
    neg = [i for i, x in enumerate(d) if x < 0]
    if not neg:
        raise BracketFailure("section carries no net flow")
    return neg[-1] + 2


def _bracket(
    g: Callable[[float], float],
    slope: Callable[[float], float],
    lo: float,
    hi: float,
    settings: Settings,
    *,
    offset_lo: bool = True,
    offset_hi: bool = True,
) -> float:
    width = hi - lo
    eps = settings.bracket_offset_rel * width
    a = lo + eps if offset_lo else lo
    b = hi - eps if offset_hi else hi
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if (ga > 0) == (gb > 0):
        raise BracketFailure(f"no sign change on ({lo:.12g}, {hi:.12g})")
    root = brentq(g, a, b, xtol=settings.root_xtol_rel * width, rtol=_RTOL, maxiter=500)
    # one safeguarded Newton step tightens the residual next to steep poles
    s = slope(root)
    if s != 0.0:
        polished = root - g(root) / s
        if a < polished < b and abs(g(polished)) < abs(g(root)):
            root = polished
    return float(root)


def solve_roots(
    d: Sequence[float],
    vapor: float,
    alphas: Sequence[float],
    settings: Settings | None = None,
    delta: float | None = None,
) -> Roots:
    """All c characteristic roots of one section, ascending."""
    settings = settings or _DEFAULTS
    if vapor <= 0:
        raise NonpositiveV(f"section vapor must be positive, got {vapor:.6g}")
    c = len(alphas)
    neg = [i for i in range(c) if d[i] < 0]
    pos = [i for i in range(c) if d[i] > 0]
    if not neg and not pos:
        raise BracketFailure("section carries no net flow")
    if not sign_pattern_ok(d):
        raise SignPatternViolation(f"inadmissible net-flow pattern {tuple(d)}")

    terms = [(a, a * x) for a, x in zip(alphas, d) if x != 0.0]

    def g(t: float) -> float:
        return sum(ad / (a - t) for a, ad in terms) - vapor

    def slope(t: float) -> float:
        return sum(ad / (a - t) ** 2 for a, ad in terms)

    tie_tol = 1e-12 * max(vapor, 1.0)
    solved: list[float] = []
    pinch_value: float | None = None
    pinch_interval = 0
    tie = False

    for p, q in zip(neg, neg[1:]):
        solved.append(_bracket(g, slope, alphas[p], alphas[q], settings))
    for p, q in zip(pos, pos[1:]):
        solved.append(_bracket(g, slope, alphas[p], alphas[q], settings))

    if neg and pos:
        h, l = neg[-1], pos[0]
        lo, hi = alphas[h], alphas[l]
        eps = settings.bracket_offset_rel * (hi - lo)
        t_min = float(brentq(slope, lo + eps, hi - eps, xtol=1e-15 * (hi - lo), rtol=_RTOL))
        g_min = g(t_min)
        if g_min > tie_tol:
            raise BracketFailure(
                f"paired roots vanish on ({lo:.6g}, {hi:.6g}): minimum exceeds V by {g_min:.6g}"
            )
        if g_min >= -tie_tol:
            lower = upper = t_min
        else:
            lower = _bracket(g, slope, lo, t_min, settings, offset_hi=False)
            upper = _bracket(g, slope, t_min, hi, settings, offset_lo=False)
        if not (alphas[h] < lower < (alphas[h + 1])) or not (alphas[l - 1] <= upper < alphas[l]):
            raise RootOutOfInterval(
                f"paired roots ({lower:.9g}, {upper:.9g}) outside their pinch intervals"
            )
        solved.append(lower)
        pinch_value, pinch_interval = upper, l + 1
    elif pos:
        l = pos[0]
        lo = alphas[l - 1] if l > 0 else 0.0
        g_lo = g(lo)
        if abs(g_lo) <= tie_tol and l > 0:
            pinch_value, tie = lo, True
        elif g_lo > 0:
            raise RootOutOfInterval(
                f"pinch root lies below {lo:.9g}: equation value there exceeds V"
            )
        else:
            pinch_value = _bracket(g, slope, lo, alphas[l], settings, offset_lo=False)
        pinch_interval = l + 1
    else:
        h = neg[-1]
        if h == c - 1:
            lo = alphas[h]
            span = delta or 10.0 * (alphas[-1] + sum(abs(ad) for _, ad in terms) / vapor)
            hi = lo + span
            for _ in range(_MAX_DOUBLINGS):
                if g(hi) < 0:
                    break
                span *= 2.0
                hi = lo + span
            else:
                raise BracketFailure("could not bracket the root above the lightest component")
            pinch_value = _bracket(g, slope, lo, hi, settings, offset_hi=False)
        else:
            hi = alphas[h + 1]
            g_hi = g(hi)
            if abs(g_hi) <= tie_tol:
                pinch_value, tie = hi, True
            elif g_hi > 0:
                raise RootOutOfInterval(
                    f"pinch root lies above {hi:.9g}: equation value there exceeds V"
                )
            else:
                pinch_value = _bracket(g, slope, alphas[h], hi, settings, offset_hi=False)
        pinch_interval = h + 2

    # (value, pinned, interval, is_pinch); pinned first so ties keep a stable order
    entries = [(alphas[i], True, i + 1, False) for i in range(c) if d[i] == 0.0]
    entries += [(v, False, interval_of(v, alphas), False) for v in solved]
    entries.append((pinch_value, False, pinch_interval, True))
    entries.sort(key=lambda e: e[0])

    return Roots(
        values=tuple(e[0] for e in entries),
        intervals=tuple(e[2] for e in entries),
        pinned=tuple(e[1] for e in entries),
        pinch=next(k for k, e in enumerate(entries) if e[3]) + 1,
        tie=tie,
    )


def solve_characteristic(
    d: Sequence[float],
    vapor: float,
    alphas: Sequence[float],
    settings: Settings | None = None,
    delta: float | None = None,
) -> RootSet:
    """Public entry point: the section's c roots with their intervals and pinch position."""
    return solve_roots(d, vapor, alphas, settings, delta).to_model()


def indicators(pinch_interval: int, c: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """One-hot mu over the c+1 intervals and its running sum K."""
    mu = tuple(1 if i == pinch_interval else 0 for i in range(1, c + 2))
    k_ind: list[int] = []
    running = 0
    for m in mu:
        running += m
        k_ind.append(running)
    return mu, tuple(k_ind)


def classify_and_indicators(
    root_set: RootSet, c: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """mu_i = 1 iff the pinch root lies in (alpha_{i-1}, alpha_i); K is the prefix sum."""
    return indicators(root_set.intervals[root_set.pinch_index - 1], c)


def solve_stream_roots(
    stream: StreamSpec,
    alphas: Sequence[float],
    form: str = "liquid",
    settings: Settings | None = None,
) -> StreamRoots:
    """Roots of a feed or sidedraw equation, keyed by the interval j of (alpha_j, alpha_{j+1}).

    The liquid form sum alpha x/(alpha - rho) = 0 uses the stream liquid (or the liquid in
    equilibrium with a saturated vapor). The full form sum alpha f/(alpha - rho) = V_stream
    has the same interior roots plus one nonpositive extra root when the stream carries vapor.
    """
    settings = settings or _DEFAULTS
    if not any(f != 0.0 for f in stream.flows):
        raise EmptyStream(f"{stream.name} carries no flow")
    composition = liquid_composition(stream, alphas)

    if form == "liquid":
        weights = list(composition)
        rhs = 0.0
    elif form == "full":
        weights = [abs(f) for f in stream.flows]
        rhs = abs(stream.vapor_total)
    else:
        raise ValueError(f"unknown stream-root form {form!r}")

    terms = [(a, a * w) for a, w in zip(alphas, weights) if w > 0.0]

    def g(t: float) -> float:
        return sum(aw / (a - t) for a, aw in terms) - rhs

    def slope(t: float) -> float:
        return sum(aw / (a - t) ** 2 for a, aw in terms)

    rho: dict[int, float] = {}
    for (a_lo, _), (a_hi, _) in zip(terms, terms[1:]):
        value = _bracket(g, slope, a_lo, a_hi, settings)
        rho[interval_of(value, alphas) - 1] = value

    extra: float | None = None
    if form == "full" and rhs > 0.0:
        if g(0.0) <= 1e-12 * rhs:
            extra = 0.0
        else:
            lo = -1.0
            while g(lo) > 0:
                lo *= 2.0
            extra = _bracket(g, slope, lo, 0.0, settings, offset_lo=False, offset_hi=False)

    return StreamRoots(
        stream=stream.name,
        rho=rho,
        source_form="full" if form == "full" else "liquid",
        extra_root=extra,
        composition=composition,
    )


def composition_side(composition: Sequence[float], alphas: Sequence[float], gamma: float) -> float:
    """Stream liquid-form function at a section root; its sign places the stream against gamma."""
    return sum(a * x / (a - gamma) for a, x in zip(alphas, composition) if x > 0.0)
