"""Angular-momentum algebra and Zeeman structure of the 87Rb F=2 -> F'=3 line.

Only sigma+ and sigma- components exist because the bias field points along
the waveguides, i.e. along the light's propagation axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .constants import RB87, PhysicalConstants

__all__ = [
    "TransitionComponent",
    "wigner_3j",
    "wigner_3j_squared",
    "transition_strengths",
    "relative_strength",
    "decay_branching",
    "zeeman_shift",
    "sigma_plus_fraction",
    "GROUND_SUBLEVELS",
    "EXCITED_SUBLEVELS",
]

F_GROUND = 2
F_EXCITED = 3
GROUND_SUBLEVELS = tuple(range(-F_GROUND, F_GROUND + 1))
EXCITED_SUBLEVELS = tuple(range(-F_EXCITED, F_EXCITED + 1))


def _twice(x, name: str) -> int:
    """Return 2*x as an int, refusing anything that is not a half-integer."""
    try:
        doubled = 2 * Fraction(x)
    except (TypeError, ValueError):
        raise ValueError(f"{name}={x!r} is not a number") from None
    if doubled.denominator != 1:
        raise ValueError(f"{name}={x!r} is not a half-integer")
    return int(doubled)


def _check_args(j1, j2, j3, m1, m2, m3) -> tuple[int, ...]:
    js = [_twice(j, f"j{i}") for i, j in enumerate((j1, j2, j3), 1)]
    ms = [_twice(m, f"m{i}") for i, m in enumerate((m1, m2, m3), 1)]
    for i, (tj, tm) in enumerate(zip(js, ms), 1):
        if tj < 0:
            raise ValueError(f"j{i} must be non-negative")
        if (tj - tm) % 2:
            raise ValueError(f"j{i} and m{i} must differ by an integer")
    return (*js, *ms)


@lru_cache(maxsize=4096)
def _racah(tj1, tj2, tj3, tm1, tm2, tm3) -> tuple[int, Fraction]:
    """Sign and exact square of the 3-j symbol, all arguments doubled."""
    if tm1 + tm2 + tm3 != 0 or abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0, Fraction(0)
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0, Fraction(0)
    f = math.factorial
    # half-sums become plain integers below
    a = (tj1 + tj2 - tj3) // 2
    b = (tj1 - tj2 + tj3) // 2
    c = (-tj1 + tj2 + tj3) // 2
    big = (tj1 + tj2 + tj3) // 2 + 1
    delta = Fraction(f(a) * f(b) * f(c), f(big))
    prod = 1
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        prod *= f((tj + tm) // 2) * f((tj - tm) // 2)

    t1 = (tj3 - tj2 + tm1) // 2
    t2 = (tj3 - tj1 - tm2) // 2
    t3 = a
    t4 = (tj1 - tm1) // 2
    t5 = (tj2 + tm2) // 2
    kmin = max(0, -t1, -t2)
    kmax = min(t3, t4, t5)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = f(k) * f(t1 + k) * f(t2 + k) * f(t3 - k) * f(t4 - k) * f(t5 - k)
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0, Fraction(0)
    phase = (tj1 - tj2 - tm3) // 2
    sign = (-1) ** phase * (1 if total > 0 else -1)
    return sign, delta * prod * total * total


def wigner_3j_squared(j1, j2, j3, m1, m2, m3) -> Fraction:
    """Exact square of the Wigner 3-j symbol as a Fraction."""
    return _racah(*_check_args(j1, j2, j3, m1, m2, m3))[1]


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol from the Racah factorial sum.

    Arguments may be ints, Fractions or floats that are exact half-integers.
    Symbols forbidden by the selection rules (m-sum, triangle, |m| > j)
    return 0.0.

    >>> round(wigner_3j(1, 1, 0, 1, -1, 0), 12)
    0.57735026919
    """
    sign, sq = _racah(*_check_args(j1, j2, j3, m1, m2, m3))
    if sign == 0:
        return 0.0
    return sign * math.sqrt(sq)


@dataclass(frozen=True)
class TransitionComponent:
    """One Zeeman line |F=2, mF> -> |F'=3, mF + q>."""

    mF: int
    q: int
    rel_strength: float
    zeeman_shift_per_field: float  # Hz/T
    isat: float  # pW/um^2

    @property
    def mF_prime(self) -> int:
        return self.mF + self.q

    def shift(self, b_field: float) -> float:
        return self.zeeman_shift_per_field * b_field


def _line_strength_sq(mF: int, q: int) -> Fraction:
    mp = mF + q
    if abs(mp) > F_EXCITED:
        return Fraction(0)
    return wigner_3j_squared(F_EXCITED, 1, F_GROUND, -mp, q, mF)


@lru_cache(maxsize=None)
def relative_strength(mF: int, q: int) -> Fraction:
    """Exact line strength relative to the stretched mF=+-2 -> mF'=+-3 line."""
    if q not in (1, -1):
        raise ValueError("q must be +1 or -1")
    if abs(mF) > F_GROUND:
        raise ValueError(f"|mF| must be <= {F_GROUND}")
    return _line_strength_sq(mF, q) / _line_strength_sq(F_GROUND, 1)


@lru_cache(maxsize=None)
def decay_branching(mF_prime: int, mF: int) -> Fraction:
    """Probability that |F'=3, mF'> decays to |F=2, mF> (closed cycle)."""
    q = mF_prime - mF
    if abs(q) > 1 or abs(mF) > F_GROUND or abs(mF_prime) > F_EXCITED:
        return Fraction(0)
    return (2 * F_EXCITED + 1) * wigner_3j_squared(F_GROUND, 1, F_EXCITED, mF, q, -mF_prime)


def zeeman_shift(mF: int, q: int, b_field: float, constants: PhysicalConstants = RB87) -> float:
    """Frequency shift (Hz) of the sigma^q line from ground sublevel mF.

    Follows from g_F = 1/2 and g_F' = 2/3: (mF + 4q)/6 * mu_B B / h.
    sigma+ (q=+1) means photon angular momentum parallel to B.
    """
    if abs(mF) > F_GROUND:
        raise ValueError(f"|mF| must be <= {F_GROUND}, got {mF}")
    if q not in (1, -1):
        raise ValueError("q must be +1 or -1")
    if b_field < 0:
        raise ValueError("b_field must be non-negative")
    return (mF + 4 * q) / 6 * constants.mu_b_over_h * b_field


def transition_strengths(constants: PhysicalConstants = RB87) -> list[TransitionComponent]:
    """All ten sigma+- components, ordered by q (+1 first) then mF."""
    out = []
    for q in (1, -1):
        for mF in GROUND_SUBLEVELS:
            rel = float(relative_strength(mF, q))
            out.append(
                TransitionComponent(
                    mF=mF,
                    q=q,
                    rel_strength=rel,
                    zeeman_shift_per_field=(mF + 4 * q) / 6 * constants.mu_b_over_h,
                    isat=constants.isat_cycling / rel,
                )
            )
    return out


def sigma_plus_fraction(xi_plus_fraction: float, parallel_to_field: bool = True) -> float:
    """Map the xi+ helicity power fraction to the sigma+ power fraction.

    Positive helicity carries angular momentum along the propagation
    direction, so it is sigma+ when the light travels along B and sigma-
    when it travels against B.
    """
    if not 0.0 <= xi_plus_fraction <= 1.0:
        raise ValueError("helicity fraction must lie in [0, 1]")
    return xi_plus_fraction if parallel_to_field else 1.0 - xi_plus_fraction
