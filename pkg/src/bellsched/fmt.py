"""Exact rational <-> display-string helpers shared across the package.

All published figures in this problem (objective values, utility weights,
thresholds) are short decimals, so rationals are rendered as exact decimal
strings whenever the denominator divides a power of ten, and as ``p/q``
otherwise. Parsing accepts both forms plus plain ints/floats.
"""

from __future__ import annotations

from fractions import Fraction


def to_fraction(value: object) -> Fraction:
    """Coerce ints, decimal strings, ``p/q`` strings, and floats to Fraction.

    Floats go through ``str()`` first so that e.g. 0.1 becomes 1/10 rather
    than the binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def decimal_str(value: Fraction | int) -> str:
    """Render a rational exactly: decimal if terminating, else ``p/q``."""
    fr = Fraction(value)
    if fr.denominator == 1:
        return str(fr.numerator)
    den = fr.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{fr.numerator}/{fr.denominator}"
    digits = max(twos, fives)
    scaled = fr.numerator * 10**digits // fr.denominator
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = text[:-digits], text[-digits:]
    return f"{sign}{whole}.{frac}"


def parse_rational(text: str) -> Fraction:
    """Inverse of :func:`decimal_str` (also accepts any Fraction literal)."""
    return Fraction(text.strip())


def minutes_to_label(minutes: int) -> str:
    """Render minutes-since-midnight as a clock label like ``8:40 AM``."""
    if not 0 <= minutes < 1440:
        raise ValueError(f"minutes out of range: {minutes}")
    hour24, minute = divmod(minutes, 60)
    suffix = "AM" if hour24 < 12 else "PM"
    hour = hour24 % 12 or 12
    return f"{hour}:{minute:02d} {suffix}"


def fmt_students(count: int) -> str:
    return f"{count:,} students"


def fmt_load(peak_load: int) -> str:
    """Peak load in both display units, e.g. ``25.65 (2,565 students)``."""
    return f"{decimal_str(Fraction(peak_load, 100))} ({fmt_students(peak_load)})"


def fmt_deviation(avg_deviation: Fraction) -> str:
    """Average schedule change in minutes, e.g. ``8.5 minutes``."""
    return f"{decimal_str(avg_deviation)} minutes"
