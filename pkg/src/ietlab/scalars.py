"""Scalar arithmetic modes.

Lengths and heights are either exact rationals (:class:`fractions.Fraction`)
or multi-precision binary floats (:class:`gmpy2.mpfr`).  Every float-mode
operation must run inside :func:`working_precision`, otherwise gmpy2 rounds
to its global 53-bit context.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpfr

DEFAULT_PRECISION = 256

Scalar = "Fraction | mpfr"


def working_precision(bits: int | None):
    """Context manager fixing the gmpy2 mantissa size; no-op for exact mode."""
    if bits is None:
        return contextlib.nullcontext()
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def precision_of(values: Iterable) -> int | None:
    """Mantissa bits of a homogeneous vector, ``None`` when exact.

    Raises ``TypeError`` on mixed exact/float input.
    """
    kinds = set()
    bits = 0
    for v in values:
        if isinstance(v, (Fraction, int)):
            kinds.add("exact")
        elif isinstance(v, type(mpfr(0))):
            kinds.add("float")
            bits = max(bits, v.precision)
        else:
            raise TypeError(f"unsupported scalar type {type(v).__name__}")
    if len(kinds) > 1:
        raise TypeError("mixed exact and float scalars in one vector")
    return bits if kinds == {"float"} else None


def to_float_mode(values: Sequence, bits: int = DEFAULT_PRECISION) -> tuple:
    with working_precision(bits):
        return tuple(mpfr(v) if not isinstance(v, Fraction)
                     else mpfr(v.numerator) / v.denominator for v in values)


def coerce_vector(values: Sequence, precision: int | None = None) -> tuple:
    """Normalise a vector to one arithmetic mode.

    ints and Fractions stay exact unless ``precision`` is given; Python
    floats, strings with a decimal point and mpfr values go to float mode.
    """
    vals = list(values)
    if precision is None and all(isinstance(v, (int, Fraction)) for v in vals):
        return tuple(Fraction(v) for v in vals)
    bits = precision or DEFAULT_PRECISION
    return to_float_mode(vals, bits)


_NAMED = {"phi": lambda: (1 + gmpy2.sqrt(mpfr(5))) / 2}


def _parse_float_token(tok: str, bits: int):
    with working_precision(bits):
        if tok in _NAMED:
            return _NAMED[tok]()
        return mpfr(tok)


def parse_vector(text: str, precision: int = DEFAULT_PRECISION) -> tuple:
    """Parse ``"1/3,2/3"`` or ``"0.25,0.75"`` into a homogeneous vector.

    A token containing ``/`` forces exact mode for the whole vector, as do
    all-integer vectors.  Decimal tokens (and the name ``phi``) give float
    mode at ``precision`` bits; mixing those with ``/`` tokens is an error.
    """
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if not tokens:
        raise ValueError("empty vector")
    if any("/" in t for t in tokens) or all(_is_int(t) for t in tokens):
        try:
            return tuple(Fraction(t) for t in tokens)
        except ValueError as exc:
            raise ValueError(f"bad rational vector {text!r}: {exc}") from None
    try:
        return tuple(_parse_float_token(t, precision) for t in tokens)
    except ValueError:
        raise ValueError(f"bad float vector {text!r}") from None


def parse_scalar(text: str, precision: int = DEFAULT_PRECISION):
    (value,) = parse_vector(text, precision)
    return value


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def format_scalar(x) -> str:
    """Text form that round-trips through :func:`parse_vector`."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return _mpfr_text(x)


def _mpfr_text(x) -> str:
    digits = int(x.precision * 0.30103) + 3
    mant, exp, _ = x.digits(10, digits)
    if mant == "0":
        return "0.0"
    sign = "-" if mant.startswith("-") else ""
    return f"{sign}0.{mant.lstrip('-')}e{exp}"


def to_float(x) -> float:
    return float(x)


def random_dirichlet(rng, d: int, bits: int = DEFAULT_PRECISION) -> tuple:
    """Uniform point of the open simplex with ``bits`` random bits per coordinate.

    Normalised exponentials, each built from a full-width uniform variate so
    the sample does not carry only 53 bits of randomness.
    """
    with working_precision(bits + 32):
        exps = []
        for _ in range(d):
            u = _uniform_bits(rng, bits + 32)
            exps.append(-gmpy2.log(u))
        total = sum(exps)
        out = [e / total for e in exps]
    with working_precision(bits):
        return tuple(mpfr(v) for v in out)


def _uniform_bits(rng, bits: int):
    words = (bits + 63) // 64
    n = 0
    for w in rng.integers(0, 2**63, size=words, dtype="int64").tolist():
        n = (n << 63) | int(w)
    total_bits = 63 * words
    return (mpfr(n) + mpfr(0.5)) / mpfr(2) ** total_bits


def random_fraction(rng, bits: int = 53) -> Fraction:
    """Uniform dyadic rational in [0, 1) with ``bits`` bits."""
    n = 0
    left = bits
    while left > 0:
        take = min(left, 62)
        n = (n << take) | int(rng.integers(0, 2**take))
        left -= take
    return Fraction(n, 2**bits)
