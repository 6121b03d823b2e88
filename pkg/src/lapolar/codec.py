"""Polar code definition, generator matrix and encoder.

Conventions
-----------
Bit vectors are ``numpy.uint8`` arrays.  Indices are stored 0-based; the
documentation and the text serialisation use 1-based indices.

The encoder computes the row-vector product ``x = u . G_N`` over GF(2) with
``G_N = B_N F^{(x)n}``.  Because ``B_N`` and ``F^{(x)n}`` commute, ``x`` is the
natural-order polar transform of ``u`` read out in bit-reversed order.  Every
decoder in this package therefore bit-reverses the channel LLRs once at its
input and works on a plain binary tree afterwards: the stage next to the
channel combines adjacent channel values, and the output stage combines the
first and second halves of the codeword.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ContractError, RangeError, SizeError

MAX_N_LOG2 = 20

_F = np.array([[1, 0], [1, 1]], dtype=np.uint8)


def _check_n(n: int, lo: int = 1) -> None:
    if not isinstance(n, (int, np.integer)) or not lo <= n <= MAX_N_LOG2:
        raise SizeError(f"log2 block length must be in [{lo}, {MAX_N_LOG2}], got {n!r}")


def bit_reversal_permutation(n: int) -> np.ndarray:
    """Index permutation reversing the ``n``-bit binary form of each position.

    >>> bit_reversal_permutation(3).tolist()
    [0, 4, 2, 6, 1, 5, 3, 7]
    """
    _check_n(n, lo=0)
    perm = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        perm = np.concatenate([2 * perm, 2 * perm + 1])
    return perm


def kronecker_power(n: int) -> np.ndarray:
    """Dense ``F^{(x)n}`` over GF(2)."""
    _check_n(n, lo=0)
    out = np.ones((1, 1), dtype=np.uint8)
    for _ in range(n):
        out = np.kron(out, _F).astype(np.uint8)
    return out


def generator_matrix(n: int) -> np.ndarray:
    """Dense generator matrix ``G_N = B_N F^{(x)n}`` (an ``N x N`` uint8 array)."""
    _check_n(n)
    if n > 14:
        raise SizeError("dense generator matrix limited to n <= 14; use encode() instead")
    return kronecker_power(n)[bit_reversal_permutation(n)]


def polar_transform(u: np.ndarray) -> np.ndarray:
    """Natural-order transform ``u . F^{(x)n}`` along the last axis (butterfly, O(N log N)).

    Works on any leading batch shape.
    """
    x = np.array(u, dtype=np.uint8, order="C", copy=True)
    size = x.shape[-1]
    if size & (size - 1):
        raise SizeError(f"length {size} is not a power of two")
    half = size // 2
    while half >= 1:
        blocks = x.reshape(*x.shape[:-1], size // (2 * half), 2, half)
        blocks[..., 0, :] ^= blocks[..., 1, :]
        half //= 2
    return x


@dataclass(frozen=True)
class PolarCode:
    """An ``(N, K)`` polar code with an explicit frozen set.

    Parameters
    ----------
    n : int
        log2 of the block length.
    frozen_set : tuple of int
        0-based frozen positions.
    frozen_values : tuple of int, optional
        Value carried by each frozen position, aligned with ``frozen_set``.
        Defaults to all zeros.
    """

    n: int
    frozen_set: tuple[int, ...]
    frozen_values: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        _check_n(self.n)
        raw = [int(i) for i in self.frozen_set]
        values = [int(v) for v in self.frozen_values] or [0] * len(raw)
        if len(values) != len(raw):
            raise ContractError("frozen_values must align with frozen_set")
        if len(set(raw)) != len(raw):
            raise ContractError("frozen_set contains duplicates")
        if any(v not in (0, 1) for v in values):
            raise ContractError("frozen values must be bits")
        pairs = sorted(zip(raw, values))
        frozen = tuple(i for i, _ in pairs)
        values = tuple(v for _, v in pairs)
        if frozen and not (0 <= frozen[0] and frozen[-1] < self.N):
            raise RangeError(f"frozen index out of [0, {self.N})")
        object.__setattr__(self, "frozen_set", frozen)
        object.__setattr__(self, "frozen_values", values)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return self.N - len(self.frozen_set)

    @cached_property
    def info_set(self) -> tuple[int, ...]:
        frozen = set(self.frozen_set)
        return tuple(i for i in range(self.N) if i not in frozen)

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        mask[list(self.frozen_set)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def frozen_word(self) -> np.ndarray:
        """Length-N vector holding the frozen values (zeros at info positions)."""
        word = np.zeros(self.N, dtype=np.uint8)
        word[list(self.frozen_set)] = self.frozen_values
        word.setflags(write=False)
        return word

    @classmethod
    def from_bhattacharyya(cls, n: int, K: int, erasure: float = 0.5) -> "PolarCode":
        """Freeze the ``N - K`` least reliable positions of a BEC(erasure).

        Reliabilities come from the Bhattacharyya recursion ``Z -> (2Z - Z^2, Z^2)``.
        Ties are broken towards freezing the lower index.
        """
        _check_n(n)
        N = 1 << n
        if not 0 <= K <= N:
            raise RangeError(f"K must be in [0, {N}], got {K}")
        z = np.array([erasure], dtype=float)
        for _ in range(n):
            nxt = np.empty(2 * z.size)
            nxt[0::2] = 2 * z - z * z
            nxt[1::2] = z * z
            z = nxt
        order = sorted(range(N), key=lambda i: (-z[i], i))
        return cls(n, tuple(sorted(order[: N - K])))

    def info_word(self, message: np.ndarray) -> np.ndarray:
        """Place ``K`` message bits (last axis) into a full ``u`` vector."""
        message = np.asarray(message, dtype=np.uint8)
        if message.shape[-1] != self.K:
            raise SizeError(f"message length {message.shape[-1]} != K={self.K}")
        u = np.broadcast_to(self.frozen_word, message.shape[:-1] + (self.N,)).copy()
        u[..., list(self.info_set)] = message
        return u

    def to_text(self) -> str:
        """key=value block; frozen indices are 1-based."""
        lines = [
            f"n={self.n}",
            f"K={self.K}",
            "frozen=" + ",".join(str(i + 1) for i in self.frozen_set),
            "frozen_values=" + ",".join(str(v) for v in self.frozen_values),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PolarCode":
        fields: dict[str, str] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        try:
            n = int(fields["n"])
        except KeyError as exc:
            raise ContractError("code text lacks 'n='") from exc
        frozen = tuple(int(i) - 1 for i in fields.get("frozen", "").split(",") if i)
        values = tuple(int(v) for v in fields.get("frozen_values", "").split(",") if v)
        code = cls(n, frozen, values)
        if "K" in fields and int(fields["K"]) != code.K:
            raise ContractError(f"declared K={fields['K']} disagrees with frozen set (K={code.K})")
        return code


def encode(code: PolarCode, u: np.ndarray) -> np.ndarray:
    """Codeword ``x = u . G_N`` for ``u`` of length N (batch axes allowed).

    Raises
    ------
    ContractError
        If a frozen position of ``u`` differs from the code's frozen value.
    """
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != code.N:
        raise SizeError(f"u has length {u.shape[-1]}, code has N={code.N}")
    if np.any(u[..., code.frozen_mask] != code.frozen_word[code.frozen_mask]):
        raise ContractError("u disagrees with the frozen values")
    return polar_transform(u)[..., bit_reversal_permutation(code.n)]


def partial_sum_oracle(decoded_prefix, stage: int, code: PolarCode) -> np.ndarray:
    """Partial sums a Type I PE of ``stage`` consumes, given the decoded prefix.

    Stage 1 sits next to the channel and stage ``n`` produces decision LLRs.
    A stage-``s`` tree node spans ``B = N / 2^(s-1)`` consecutive bits.  Once
    its left half is decoded, the Type I PEs selecting inputs for its right
    half need the re-encoded left half, ``u_left . F^{(x)}``.  The returned
    vector belongs to the latest such node whose left half lies entirely in
    ``decoded_prefix``; it is empty if there is none.
    """
    if not 1 <= stage <= code.n:
        raise RangeError(f"stage must be in [1, {code.n}], got {stage}")
    prefix = np.asarray(decoded_prefix, dtype=np.uint8)
    if prefix.shape[-1] > code.N:
        raise SizeError("prefix longer than the block")
    span = code.N >> (stage - 1)
    half = span // 2
    m = prefix.shape[-1]
    if m < half:
        return np.zeros(prefix.shape[:-1] + (0,), dtype=np.uint8)
    start = ((m - half) // span) * span
    return polar_transform(prefix[..., start : start + half])
