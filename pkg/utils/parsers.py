from fractions import Fraction
from typing import Any

import mpmath


def to_fraction(value: Any) -> Fraction:
    """'1/3', '0.25', '2', int or Fraction -> Fraction. Floats are taken at face value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    s = str(value).strip()
    if s == "":
        raise ValueError("empty rational")
    return Fraction(s)


def to_exponent(value: Any) -> Fraction | mpmath.mpf:
    """Exponent argument: exact when it parses as a rational, else an mpf."""
    try:
        return to_fraction(value)
    except (ValueError, ZeroDivisionError):
        return mpmath.mpf(str(value))


def format_rational(value: Fraction) -> str:
    """Fraction -> 'num/den' (always with a denominator, e.g. '1/1')."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def format_real(value: Any, digits: int = 30) -> str:
    """mpf/float -> decimal string with `digits` significant digits."""
    return mpmath.nstr(mpmath.mpf(value), digits)


def format_number(value: Any, digits: int = 30) -> str:
    """Exact values print as 'num/den', reals at the given precision."""
    if value is None:
        return ""
    if isinstance(value, (Fraction, int)):
        return format_rational(Fraction(value))
    return format_real(value, digits)
