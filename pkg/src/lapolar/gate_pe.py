"""Bit-level processing-element models and their word-level array twins.

The bit-level functions (``full_addsub_bit`` ... ``merged_pe``) model the
datapaths gate by gate on Python ints and are meant for exhaustive checks.
The ``*_array`` functions at the bottom compute the same words with numpy
and are what the architecture simulator runs; the test suite pins the two
together over every input pair for q <= 8.

Arithmetic contract
-------------------
LLR words are q-bit two's complement.  Every PE output saturates
symmetrically to ``[-(2^(q-1) - 1), 2^(q-1) - 1]``, so the most negative code
never leaves a PE and always has a sign-magnitude image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RangeError

Q_MIN, Q_MAX = 2, 24


def _check_q(q: int) -> None:
    if not Q_MIN <= q <= Q_MAX:
        raise RangeError(f"word length q must be in [{Q_MIN}, {Q_MAX}], got {q}")


def sat_limit(q: int) -> int:
    return (1 << (q - 1)) - 1


@dataclass(frozen=True)
class FixedPoint:
    """q-bit two's-complement word with ``f`` fraction bits."""

    raw: int
    q: int
    f: int = 0

    def __post_init__(self) -> None:
        _check_q(self.q)
        if not 0 <= self.f < self.q:
            raise RangeError(f"fraction bits f must be in [0, {self.q - 1}]")
        lo, hi = -(1 << (self.q - 1)), (1 << (self.q - 1)) - 1
        if not lo <= self.raw <= hi:
            raise RangeError(f"raw {self.raw} outside q={self.q} range")

    @classmethod
    def from_float(cls, value: float, q: int, f: int = 0) -> "FixedPoint":
        return cls(int(quantize(np.array([value]), q, f)[0]), q, f)

    @property
    def value(self) -> float:
        return self.raw / (1 << self.f)

    def bits(self) -> list[int]:
        """LSB-first two's-complement bits."""
        return to_bits(self.raw, self.q)

    def __int__(self) -> int:
        return self.raw


@dataclass(frozen=True)
class SignMagnitude:
    sign: int
    magnitude: int
    q: int

    def __post_init__(self) -> None:
        if self.sign not in (0, 1) or not 0 <= self.magnitude <= sat_limit(self.q):
            raise RangeError("invalid sign-magnitude word")


@dataclass(frozen=True)
class MergedPeOutputs:
    out1: FixedPoint  # min-sum (Type II) result
    out2: FixedPoint  # Type I candidate for u = 0
    out3: FixedPoint  # Type I candidate for u = 1


def quantize(llr: np.ndarray, q: int, f: int) -> np.ndarray:
    """Round real LLRs to q-bit raw integers (half away from zero, then saturate)."""
    _check_q(q)
    scaled = np.asarray(llr, dtype=float) * (1 << f)
    raw = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    lim = sat_limit(q)
    return np.clip(raw, -lim, lim).astype(np.int64)


def saturate(raw, q: int):
    lim = sat_limit(q)
    return np.clip(raw, -lim, lim)


# --- bit helpers -----------------------------------------------------------

def to_bits(value: int, width: int) -> list[int]:
    """LSB-first two's-complement bits of ``value`` in ``width`` bits."""
    return [(value >> i) & 1 for i in range(width)]


def from_bits(bits: list[int]) -> int:
    """Signed integer of LSB-first two's-complement ``bits``."""
    value = sum(b << i for i, b in enumerate(bits))
    if bits[-1]:
        value -= 1 << len(bits)
    return value


def _word_saturate(bits: list[int], q: int) -> int:
    # word-level symmetric saturation of an exact (q+1)-bit result
    return int(saturate(from_bits(bits), q))


# --- 1-bit adder-subtractor --------------------------------------------------

def full_addsub_bit(X: int, Y: int, Cin: int, Bin: int) -> tuple[int, int, int, int]:
    """Shared-gate 1-bit full adder-subtractor.

    Returns ``(S, Cout, D, Bout)`` for ``X + Y + Cin`` and ``X - Y - Bin``.
    ``X ^ Y`` is formed once and reused by both halves.
    """
    p = X ^ Y
    S = p ^ Cin
    Cout = (X & Y) | (p & Cin)
    D = p ^ Bin
    Bout = ((1 - X) & Y) | ((1 - p) & Bin)
    return S, Cout, D, Bout


def half_addsub_bit(X: int, Y: int) -> tuple[int, int, int, int]:
    p = X ^ Y
    return p, X & Y, p, (1 - X) & Y


def _ripple_addsub(xb: list[int], yb: list[int]) -> tuple[list[int], list[int]]:
    s0, carry, d0, borrow = half_addsub_bit(xb[0], yb[0])
    sums, diffs = [s0], [d0]
    for x, y in zip(xb[1:], yb[1:]):
        s, carry, d, borrow = full_addsub_bit(x, y, carry, borrow)
        sums.append(s)
        diffs.append(d)
    return sums, diffs


def addsub_word(X: FixedPoint, Y: FixedPoint) -> tuple[FixedPoint, FixedPoint]:
    """``(X + Y, X - Y)`` from one ripple of adder-subtractor cells, saturated.

    Operands are sign-extended by one bit so the ripple result is exact before
    the word-level saturation.
    """
    if X.q != Y.q:
        raise ConfigError("operand widths differ")
    q = X.q
    sums, diffs = _ripple_addsub(to_bits(X.raw, q + 1), to_bits(Y.raw, q + 1))
    return FixedPoint(_word_saturate(sums, q), q, X.f), FixedPoint(_word_saturate(diffs, q), q, X.f)


# --- format converters -----------------------------------------------------

def ttos(x: FixedPoint) -> SignMagnitude:
    """Two's complement to sign-magnitude.

    Conditional negation (invert, then add the sign at the LSB through a
    half-adder chain) on a sign-extended word; the magnitude of the most
    negative code saturates to ``2^(q-1) - 1``.
    """
    q = x.q
    bits = to_bits(x.raw, q + 1)
    sign = bits[-1]
    carry = sign
    mag = []
    for b in bits[:q]:
        t = b ^ sign
        mag.append(t ^ carry)
        carry = t & carry
    if mag[q - 1]:
        mag = [1] * (q - 1) + [0]
    return SignMagnitude(sign, sum(b << i for i, b in enumerate(mag[: q - 1])), q)


def stot(s: SignMagnitude, f: int = 0) -> FixedPoint:
    """Sign-magnitude back to q-bit two's complement; negative zero becomes zero."""
    q = s.q
    bits = to_bits(s.magnitude, q)
    carry = s.sign
    out = []
    for b in bits:
        t = b ^ s.sign
        out.append(t ^ carry)
        carry = t & carry
    return FixedPoint(from_bits(out), q, f)


# --- processing elements ---------------------------------------------------

def type1_pe(a: FixedPoint, b: FixedPoint) -> tuple[FixedPoint, FixedPoint]:
    """Look-ahead g-update: both candidates ``(b + a, b - a)``.

    ``a`` is the operand whose sign the decided bit flips, ``b`` the additive
    one; candidate ``k`` is the output for decided bit ``k``.
    """
    return addsub_word(b, a)


def _magnitude_less(ma: int, mb: int, width: int) -> int:
    # comparator realised as a borrow-ripple subtractor: final borrow of ma - mb
    borrow = 0
    for x, y in zip(to_bits(ma, width), to_bits(mb, width)):
        _, _, _, borrow = full_addsub_bit(x, y, 0, borrow)
    return borrow


def type2_pe(a: FixedPoint, b: FixedPoint) -> FixedPoint:
    """Min-sum f-update ``sgn(a) sgn(b) min(|a|, |b|)`` through TtoS / compare / StoT."""
    if a.q != b.q:
        raise ConfigError("operand widths differ")
    q = a.q
    sa, sb = ttos(a), ttos(b)
    a_smaller = _magnitude_less(sa.magnitude, sb.magnitude, q - 1)
    mag = sa.magnitude if a_smaller else sb.magnitude
    return stot(SignMagnitude(sa.sign ^ sb.sign, mag, q), a.f)


def merged_pe(a: FixedPoint, b: FixedPoint) -> MergedPeOutputs:
    """Merged Type I / Type II element sharing one adder-subtractor.

    The exact ``b + a`` and ``b - a`` words drive both the Type I outputs and
    the magnitude comparison: ``|a| <= |b|`` exactly when ``(b + a)(b - a) >= 0``,
    i.e. when the two sign bits agree.  Operand roles follow :func:`type1_pe`.
    """
    if a.q != b.q:
        raise ConfigError("operand widths differ")
    q = a.q
    sums, diffs = _ripple_addsub(to_bits(b.raw, q + 1), to_bits(a.raw, q + 1))
    a_not_larger = 1 - (sums[-1] ^ diffs[-1])
    sa, sb = ttos(a), ttos(b)
    mag = sa.magnitude if a_not_larger else sb.magnitude
    out1 = stot(SignMagnitude(sa.sign ^ sb.sign, mag, q), a.f)
    out2 = FixedPoint(_word_saturate(sums, q), q, a.f)
    out3 = FixedPoint(_word_saturate(diffs, q), q, a.f)
    return MergedPeOutputs(out1, out2, out3)


# --- XOR-equivalent bookkeeping ---------------------------------------------

# Unshared full adder + full subtractor, and half adder + half subtractor,
# in XOR-equivalent gates.
CONVENTIONAL_FULL_PAIR = 7
CONVENTIONAL_HALF_PAIR = 2


def xor_cost(element: str, q: int | None = None) -> int:
    """XOR-equivalent gate count of a datapath element.

    ``element`` is one of ``full_addsub``, ``half_addsub``, ``addsub_word``,
    ``type1``, ``type2``, ``merged``.  Word-level elements need ``q``.
    The Type II figure is the remainder that makes a separate Type I + Type II
    pair cost ``11q - 3``, the tree-decoder PE cost; the merged PE then saves
    ``2q - 3`` and lands on ``9q``.
    """
    if element == "full_addsub":
        return 4
    if element == "half_addsub":
        return 1
    if q is None or q < 2:
        raise RangeError(f"{element} needs q >= 2")
    if element in ("addsub_word", "type1"):
        return (q - 1) * xor_cost("full_addsub") + xor_cost("half_addsub")
    if element == "type2":
        return 7 * q
    if element == "merged":
        return xor_cost("type1", q) + xor_cost("type2", q) - merged_saving(q)
    raise ConfigError(f"unknown element {element!r}")


def merged_saving(q: int) -> int:
    return 2 * q - 3


def savings_fraction(kind: str) -> float:
    """Fraction of XOR-equivalents saved by the shared 1-bit cells."""
    if kind == "full":
        return 1 - xor_cost("full_addsub") / CONVENTIONAL_FULL_PAIR
    if kind == "half":
        return 1 - xor_cost("half_addsub") / CONVENTIONAL_HALF_PAIR
    raise ConfigError(kind)


# --- word-level array twins -------------------------------------------------

def f_minsum_array(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    mag = np.minimum(np.abs(a), np.abs(b))
    sign = np.where((a < 0) ^ (b < 0), -1, 1)
    return saturate(sign * mag, q)


def g_candidates_array(a: np.ndarray, b: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    return saturate(b + a, q), saturate(b - a, q)


def merged_pe_array(a: np.ndarray, b: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(out1, out2, out3)`` of a bank of merged PEs, elementwise."""
    cand0, cand1 = g_candidates_array(a, b, q)
    return f_minsum_array(a, b, q), cand0, cand1
