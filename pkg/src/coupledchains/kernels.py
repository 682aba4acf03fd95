"""Process kernels: conditional laws, memory-decay coefficients, lower
envelopes, regime classification and exact stationary word laws.

Every kernel here has finite effective memory ``m``: the conditional
probability of the next symbol depends only on the last ``m`` symbols of
the past (older symbols are zero-padded away).  All "exact" quantities
are computed by exhaustive enumeration over the 2^m relevant contexts.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Union

import numpy as np

from .words import Word, as_word, int_to_word, word_to_int

MAX_MARKOV_ORDER = 12
MAX_MEMORY_DEPTH = 16
MAX_WORD_LENGTH = 16

_STATIONARY_TOL = 1e-13
_STATIONARY_MAX_ITER = 200_000


class CapExceededError(ValueError):
    """An enumeration would exceed the desk-scale size caps."""


@dataclass(frozen=True)
class IIDKernel:
    """Context-free kernel: P(0 | anything) = p0."""

    p0: float

    def __post_init__(self):
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must lie strictly in (0,1), got {self.p0}")

    @property
    def memory(self) -> int:
        return 0

    @property
    def label(self) -> str:
        return f"iid(p0={self.p0})"

    @cached_property
    def prob0_table(self) -> np.ndarray:
        table = np.array([self.p0])
        table.flags.writeable = False
        return table


@dataclass(frozen=True)
class MarkovKernel:
    """Order-k kernel given by the full table of P(0 | last k symbols).

    ``probs[c]`` is P(0 | context with integer code c); use
    :meth:`from_table` to build one from words.
    """

    order: int
    probs: tuple[float, ...]

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("markov order must be >= 1")
        if self.order > MAX_MARKOV_ORDER:
            raise CapExceededError(
                f"markov order {self.order} exceeds cap {MAX_MARKOV_ORDER}"
            )
        if len(self.probs) != 1 << self.order:
            raise ValueError(
                f"need {1 << self.order} entries for order {self.order}, "
                f"got {len(self.probs)}"
            )
        for p in self.probs:
            if not 0.0 < p < 1.0:
                raise ValueError(f"conditional probability {p} not in (0,1)")

    @classmethod
    def from_table(cls, order: int, table: Mapping) -> "MarkovKernel":
        probs = [None] * (1 << order)
        for key, p in table.items():
            word = as_word(key) if not isinstance(key, str) else as_word(
                int(c) for c in key
            )
            if len(word) != order:
                raise ValueError(f"context {word!r} does not have length {order}")
            probs[word_to_int(word)] = float(p)
        if any(p is None for p in probs):
            raise ValueError("markov table must cover every length-k context")
        return cls(order, tuple(probs))

    @property
    def memory(self) -> int:
        return self.order

    @property
    def label(self) -> str:
        return f"markov(order={self.order})"

    @cached_property
    def prob0_table(self) -> np.ndarray:
        table = np.array(self.probs)
        table.flags.writeable = False
        return table


@dataclass(frozen=True)
class LongMemoryKernel:
    """Additive long-memory kernel, truncated at depth len(weights):

        P(0 | past) = c + sum_p weights[p-1] * 1(x_{-p} = 0),

    with symbols beyond the truncation depth (and beyond the available
    context) zero-padded, hence counted as 0.  The truncated object *is*
    the kernel; there is no hidden infinite tail.
    """

    c: float
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(t) for t in self.weights))
        if len(self.weights) > MAX_MEMORY_DEPTH:
            raise CapExceededError(
                f"truncation depth {len(self.weights)} exceeds cap {MAX_MEMORY_DEPTH}"
            )
        if self.c <= 0.0:
            raise ValueError("base probability c must be positive")
        if any(t < 0.0 for t in self.weights):
            raise ValueError("weights must be nonnegative")
        if self.c + sum(self.weights) >= 1.0:
            raise ValueError("c + sum(weights) must stay below 1")

    @property
    def memory(self) -> int:
        return len(self.weights)

    @property
    def label(self) -> str:
        return f"long_memory(c={self.c}, depth={len(self.weights)})"

    @cached_property
    def prob0_table(self) -> np.ndarray:
        m = self.memory
        ctx = np.arange(1 << m)
        table = np.full(1 << m, self.c)
        for p in range(1, m + 1):
            bit = (ctx >> (p - 1)) & 1
            table += self.weights[p - 1] * (1 - bit)
        table.flags.writeable = False
        return table


Kernel = Union[IIDKernel, MarkovKernel, LongMemoryKernel]


def min_prob(kernel: Kernel) -> float:
    """Infimum of all conditional symbol probabilities."""
    table = kernel.prob0_table
    return float(min(table.min(), (1.0 - table).min()))


def builtin_kernels() -> dict[str, Kernel]:
    return {
        "iid-half": IIDKernel(0.5),
        "markov1-demo": MarkovKernel.from_table(1, {(0,): 0.7, (1,): 0.4}),
        "long-memory-demo": LongMemoryKernel(0.3, (0.2, 0.1)),
    }


def conditional_prob(kernel: Kernel, context: Iterable[int]) -> float:
    """P(0 | context).  Shorter contexts are zero-padded on the left, so
    every context (including the empty one) is admissible."""
    ctx = word_to_int(context)
    m = kernel.memory
    mask = (1 << m) - 1 if m else 0
    return float(kernel.prob0_table[ctx & mask])


# ---------------------------------------------------------------------------
# Memory-decay coefficients


@dataclass(frozen=True)
class GammaProfile:
    """Decay coefficients gamma_0..gamma_{p_max} with per-entry
    certification flags and a regime verdict (filled by regime_check)."""

    values: tuple[float, ...]
    certified: tuple[str, ...]
    regime: str = "undetermined"

    def __post_init__(self):
        for g in self.values:
            if not 0.0 <= g < 1.0:
                raise ValueError(f"gamma value {g} outside [0,1)")
        for a, b in zip(self.values, self.values[1:]):
            if b > a + 1e-12:
                raise ValueError("gamma values must be non-increasing")

    def gamma(self, p: int) -> float:
        """gamma_p, zero beyond the tabulated range (finite-memory kernels)."""
        return self.values[p] if p < len(self.values) else 0.0


def _as_fraction(x: float) -> Fraction:
    """Exact rational for a float parameter, interpreted as the decimal
    number it prints as (str gives the shortest round-trip repr, so a
    parameter written as 0.7 means 7/10, not its binary neighbour)."""
    return Fraction(Decimal(str(x)))


def prob0_fractions(kernel: Kernel) -> list[Fraction]:
    """The conditional-probability table as exact rationals."""
    if isinstance(kernel, LongMemoryKernel):
        m = kernel.memory
        out = []
        for ctx in range(1 << m):
            f = _as_fraction(kernel.c)
            for p in range(1, m + 1):
                if not (ctx >> (p - 1)) & 1:
                    f += _as_fraction(kernel.weights[p - 1])
            out.append(f)
        return out
    return [_as_fraction(p) for p in kernel.prob0_table.tolist()]


def gamma_profile(kernel: Kernel, p_max: int) -> GammaProfile:
    """Worst-case relative change of the conditional law when pasts agree
    on the last p symbols.  Exact by enumeration over all context pairs
    in rational arithmetic (one rounding at the end); zero for p at or
    beyond the kernel memory."""
    if p_max < 0:
        raise ValueError("p_max must be >= 0")
    m = kernel.memory
    if m > MAX_MEMORY_DEPTH:
        raise CapExceededError(f"memory {m} exceeds cap {MAX_MEMORY_DEPTH}")
    p0 = prob0_fractions(kernel)
    p1 = [1 - f for f in p0]
    values = []
    for p in range(p_max + 1):
        if p >= m:
            values.append(0.0)
            continue
        # Contexts sharing their low p bits form one comparison group.
        worst = Fraction(1)
        for probs in (p0, p1):
            for residue in range(1 << p):
                group = probs[residue :: 1 << p]
                worst = min(worst, min(group) / max(group))
        values.append(float(1 - worst))
    return GammaProfile(tuple(values), ("exact",) * (p_max + 1))


def lower_envelope(kernel: Kernel, i: int, z: Iterable[int]) -> float:
    """Infimum of P(i | x) over all pasts x extending the word z."""
    if i not in (0, 1):
        raise ValueError("symbol must be 0 or 1")
    z = as_word(z)
    p = len(z)
    m = kernel.memory
    table = kernel.prob0_table if i == 0 else 1.0 - kernel.prob0_table
    if p >= m:
        return float(table[word_to_int(z) & ((1 << m) - 1 if m else 0)])
    zint = word_to_int(z)
    free = np.arange(1 << (m - p))
    return float(table[(free << p) | zint].min())


# ---------------------------------------------------------------------------
# Regime classification


@dataclass(frozen=True)
class TailDescriptor:
    """Analytic description of gamma_p beyond the tabulated range.

    Divergence of the series sum_l prod_{p<=l}(1 - gamma_p) cannot be
    decided from finitely many values, so classification requires one of
    the recognized analytic families (or stays undetermined).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    amp: float = 0.0
    ratio: float = 0.0

    def gamma(self, p: int) -> float:
        if self.kind == "eventually-zero":
            return 0.0
        if self.kind == "rational-decay":
            return self.a / (p + self.b)
        if self.kind == "one-minus-geometric":
            return 1.0 - self.amp * self.ratio**p
        raise ValueError(f"no formula for tail kind {self.kind!r}")


def eventually_zero() -> TailDescriptor:
    return TailDescriptor("eventually-zero")


def rational_decay(a: float, b: float) -> TailDescriptor:
    """gamma_p = a / (p + b)."""
    if a <= 0 or b <= 0 or a / b >= 1:
        raise ValueError("need a, b > 0 with a/b < 1")
    return TailDescriptor("rational-decay", a=a, b=b)


def one_minus_geometric(amp: float, ratio: float) -> TailDescriptor:
    """gamma_p = 1 - amp * ratio**p."""
    if not 0 < amp <= 1 or not 0 < ratio < 1:
        raise ValueError("need 0 < amp <= 1 and 0 < ratio < 1")
    return TailDescriptor("one-minus-geometric", amp=amp, ratio=ratio)


def unknown_tail() -> TailDescriptor:
    return TailDescriptor("unknown")


@dataclass(frozen=True)
class RegimeReport:
    regime: str  # diverges-certified | converges-certified | undetermined
    gamma_limit_zero: bool | None
    gamma_summable: bool | None
    partial_sum: float  # sum_{l<=l_max} prod_{p<=l}(1 - gamma_p)


def regime_check(
    profile: GammaProfile, tail: TailDescriptor, l_max: int = 1000
) -> RegimeReport:
    """Classify the renewal-series regime from the analytic tail family;
    also reports whether gamma_p -> 0 and whether sum gamma_p < inf."""

    def gamma_at(p: int) -> float:
        if p < len(profile.values):
            return profile.values[p]
        return tail.gamma(p) if tail.kind != "unknown" else float("nan")

    partial = 0.0
    prod = 1.0
    for ell in range(l_max + 1):
        g = gamma_at(ell)
        if g != g:  # unknown tail ran out of information
            break
        prod *= 1.0 - g
        partial += prod
        if prod == 0.0:
            break

    if tail.kind == "eventually-zero":
        # Partial products are eventually constant and positive.
        return RegimeReport("diverges-certified", True, True, partial)
    if tail.kind == "rational-decay":
        regime = "diverges-certified" if tail.a <= 1.0 else "converges-certified"
        return RegimeReport(regime, True, False, partial)
    if tail.kind == "one-minus-geometric":
        # Partial products shrink super-geometrically; tail sums bounded.
        return RegimeReport("converges-certified", False, False, partial)
    return RegimeReport("undetermined", None, None, partial)


# ---------------------------------------------------------------------------
# Stationary word laws (iid / markov only)


def _require_enumerable(kernel: Kernel) -> None:
    if isinstance(kernel, LongMemoryKernel):
        raise ValueError(
            "stationary word law is exact only for iid/markov kernels; "
            "use burn-in initialization for long-memory kernels"
        )


def stationary_ctx_vector(kernel: Kernel, length: int) -> np.ndarray:
    """Exact stationary distribution over integer-coded words of the
    given length, by power iteration on the word shift chain."""
    _require_enumerable(kernel)
    if length > MAX_WORD_LENGTH:
        raise CapExceededError(f"word length {length} exceeds cap {MAX_WORD_LENGTH}")
    m = kernel.memory
    s = max(m, length, 1)
    size = 1 << s
    mask = size - 1
    kmask = (1 << m) - 1 if m else 0
    idx = np.arange(size)
    p0 = kernel.prob0_table[idx & kmask]
    next0 = ((idx << 1) & mask)
    next1 = next0 | 1
    pi = np.full(size, 1.0 / size)
    for _ in range(_STATIONARY_MAX_ITER):
        new = np.bincount(next0, weights=pi * p0, minlength=size)
        new += np.bincount(next1, weights=pi * (1.0 - p0), minlength=size)
        if np.abs(new - pi).max() < _STATIONARY_TOL:
            pi = new
            break
        pi = new
    else:
        raise RuntimeError("stationary iteration failed to converge")
    if abs(pi.sum() - 1.0) > 1e-12:
        raise RuntimeError("stationary law does not sum to 1")
    if s == length:
        return pi
    # Marginalize onto the most recent `length` symbols.
    return np.bincount(idx & ((1 << length) - 1), weights=pi, minlength=1 << length)


def stationary_word_law(kernel: Kernel, length: int) -> dict[Word, float]:
    """Stationary law of `length` consecutive symbols, keyed by Word."""
    pi = stationary_ctx_vector(kernel, length)
    return {int_to_word(v, length): float(pi[v]) for v in range(1 << length)}
