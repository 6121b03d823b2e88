"""Sequential successive-cancellation decoders.

Four arithmetic variants share one iterative tree walk:

``lr``
    likelihood ratios, ``f(a, b) = (ab + 1) / (a + b)`` and ``g = a^(1-2u) b``.
``llr_exact``
    log domain, ``f(a, b) = 2 artanh(tanh(a/2) tanh(b/2))``.
``minsum``
    log domain, ``f(a, b) = sgn(a) sgn(b) min(|a|, |b|)``.
``minsum_quantized``
    min-sum on q-bit saturating integers, bit-exact with the hardware models.

The tree works on bit-reversed channel values (see :mod:`lapolar.codec`), so
node ``v`` at depth ``d`` owns the contiguous slice of length ``N / 2^d``
and its left and right children own the two halves.  All decoders take a
leading batch axis; every frame in a batch is decoded independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gate_pe
from .codec import PolarCode, bit_reversal_permutation, polar_transform
from .errors import ConfigError, RangeError, SizeError

LLR_SATURATION = 1e30
LR_MIN, LR_MAX = 1e-150, 1e150

VARIANTS = ("lr", "llr_exact", "minsum", "minsum_quantized")


# --- scalar / elementwise kernels ------------------------------------------

def f_exact(a, b):
    """``2 artanh(tanh(a/2) tanh(b/2))`` in a form that stays finite for large inputs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        sign = np.sign(a) * np.sign(b)
        mag = np.minimum(np.abs(a), np.abs(b))
        corr = np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
        out = sign * mag + np.where(np.isfinite(corr), corr, 0.0)
    out = np.where(sign == 0, 0.0, out)
    return np.clip(out, -LLR_SATURATION, LLR_SATURATION)


def f_minsum(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def f_minsum_absform(a, b):
    """The same rule written as ``(|a + b| - |a - b|) / 2``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return (np.abs(a + b) - np.abs(a - b)) / 2


def g_func(a, b, u_prev):
    """``(-1)^u a + b``; ``a`` is the operand the decided bit flips."""
    u = np.asarray(u_prev)
    return np.where(u.astype(bool), -np.asarray(a), np.asarray(a)) + np.asarray(b)


def f_lr(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.clip((a * b + 1.0) / (a + b), LR_MIN, LR_MAX)


def g_lr(a, b, u_prev):
    a = np.asarray(a, dtype=float)
    u = np.asarray(u_prev).astype(bool)
    return np.clip(np.where(u, 1.0 / a, a) * np.asarray(b, dtype=float), LR_MIN, LR_MAX)


def decide(llr, index: int, code: PolarCode) -> int:
    """Hard decision for 0-based position ``index``; ties decide 0."""
    if not 0 <= index < code.N:
        raise RangeError(f"index must be in [0, {code.N})")
    if code.frozen_mask[index]:
        return int(code.frozen_word[index])
    return int(llr < 0)


# --- decoder ------------------------------------------------------------------

@dataclass(frozen=True)
class DecodeResult:
    """Decoded ``u`` vectors and the decision LLR of every position.

    Both arrays carry the batch axis of the input (shape ``(B, N)``).  For the
    ``lr`` variant ``llr_trace`` holds the log of the decision ratio; for the
    quantized variant it holds raw integers.
    """

    u_hat: np.ndarray
    llr_trace: np.ndarray


def _kernels(variant: str, q: int, f: int):
    if variant == "lr":
        return f_lr, g_lr, np.float64
    if variant == "llr_exact":
        return f_exact, g_func, np.float64
    if variant == "minsum":
        return f_minsum, g_func, np.float64
    if variant == "minsum_quantized":
        def fq(a, b):
            return gate_pe.f_minsum_array(a, b, q)

        def gq(a, b, u):
            c0, c1 = gate_pe.g_candidates_array(a, b, q)
            return np.where(u.astype(bool), c1, c0)

        return fq, gq, np.int64
    raise ConfigError(f"unknown variant {variant!r}; choose from {VARIANTS}")


def prepare_input(channel_llrs, variant: str, q: int = 6, f: int = 2) -> np.ndarray:
    """Convert real channel LLRs to the variant's input domain."""
    llr = np.asarray(channel_llrs, dtype=float)
    if variant == "lr":
        return np.clip(np.exp(np.clip(llr, -345.0, 345.0)), LR_MIN, LR_MAX)
    if variant == "minsum_quantized":
        return gate_pe.quantize(llr, q, f)
    if variant in ("llr_exact", "minsum"):
        return np.clip(llr, -LLR_SATURATION, LLR_SATURATION)
    raise ConfigError(f"unknown variant {variant!r}")


def decode(code: PolarCode, channel_llrs, variant: str = "minsum", q: int = 6, f: int = 2) -> DecodeResult:
    """SC-decode one frame (shape ``(N,)``) or a batch (shape ``(B, N)``).

    ``channel_llrs`` are real LLRs in natural codeword order; the quantized
    variant rounds them with :func:`lapolar.gate_pe.quantize`.  Returned
    arrays drop the batch axis again when the input had none.
    """
    arr = np.asarray(channel_llrs, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != code.N:
        raise SizeError(f"expected channel LLRs of length N={code.N}, got shape {np.shape(channel_llrs)}")
    res = decode_prepared(code, prepare_input(arr, variant, q, f), variant, q)
    if single:
        return DecodeResult(res.u_hat[0], res.llr_trace[0])
    return res


def decode_prepared(code: PolarCode, values: np.ndarray, variant: str, q: int = 6) -> DecodeResult:
    """SC decode of a ``(B, N)`` batch already in the variant's domain."""
    fk, gk, dtype = _kernels(variant, q, 0)
    B, N, n = values.shape[0], code.N, code.n
    # alpha[d] holds node values of length N >> d for the node on the current path
    alpha = [np.empty((B, N >> d), dtype=dtype) for d in range(n + 1)]
    alpha[0][:] = values[:, bit_reversal_permutation(n)]
    u_hat = np.zeros((B, N), dtype=np.uint8)
    trace = np.zeros((B, N), dtype=dtype if variant != "lr" else np.float64)
    frozen = code.frozen_mask
    fvals = code.frozen_word
    depth = 0  # depth of the deepest node whose alpha is valid for the current leaf
    for i in range(N):
        # descend from the deepest shared ancestor of leaves i-1 and i
        if i:
            common = n - int(i ^ (i - 1)).bit_length()
            # node at depth `common` is shared; step into its right child
            parent = alpha[common]
            h = parent.shape[1] // 2
            span = N >> common
            start = (i >> (n - common)) << (n - common)
            left_bits = polar_transform(u_hat[:, start : start + span // 2])
            alpha[common + 1][:] = gk(parent[:, :h], parent[:, h:], left_bits)
            depth = common + 1
        while depth < n:
            parent = alpha[depth]
            h = parent.shape[1] // 2
            alpha[depth + 1][:] = fk(parent[:, :h], parent[:, h:])
            depth += 1
        leaf = alpha[n][:, 0]
        trace[:, i] = np.log(leaf) if variant == "lr" else leaf
        if frozen[i]:
            u_hat[:, i] = fvals[i]
        elif variant == "lr":
            u_hat[:, i] = leaf < 1.0
        else:
            u_hat[:, i] = leaf < 0
    return DecodeResult(u_hat, trace)
