"""Standardness diagnostics: truncated real-valued generator, optimal
two-by-two couplings, the exact backward metric recursion, and the
decreasing sequence of expected coupling distances (alpha).

The generator maps a one-sided symbol past (present included) to

    R = sum_{n >= 0} 3^{-n} x_{-n},

truncated at depth D (coordinates at lags 0..D retained) with
truncation error at most 3^{-D} / 2.  For a
pair of pasts the metric recursion propagates the expected generator
distance under the optimal one-step coupling of the two conditional
laws; alpha_p is that distance averaged over two independent stationary
pasts.  The filtration is standard exactly when alpha_p -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import CapExceededError, Kernel, stationary_ctx_vector
from .words import int_to_word, word_str

MAX_TABLE_LENGTH = 8

DEFAULT_DEPTH = 6


@dataclass(frozen=True)
class GeneratorConfig:
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_TABLE_LENGTH - 1:
            raise CapExceededError(
                f"generator depth must be in 1..{MAX_TABLE_LENGTH - 1}"
            )

    @property
    def truncation_error(self) -> float:
        """Sup over pasts of |R - R_D| = sum_{n > D} 3^-n = 3^-D / 2."""
        return 3.0 ** (-self.depth) / 2.0


def truncated_generator(word_int: int, depth: int) -> float:
    """R_D of the past whose present symbol is bit 0 of word_int; lags
    0..depth contribute with weights 3^-lag."""
    return sum(
        3.0 ** (-n) * ((word_int >> n) & 1) for n in range(depth + 1)
    )


def generator_table(depth: int) -> np.ndarray:
    """R_D for every (depth+1)-bit word, indexed by integer code."""
    vals = np.array(
        [truncated_generator(v, depth) for v in range(1 << (depth + 1))]
    )
    vals.flags.writeable = False
    return vals


# ---------------------------------------------------------------------------
# Optimal two-by-two couplings


@dataclass(frozen=True)
class Coupling2x2:
    """Joint law on {0,1}^2 with marginals (f, 1-f) and (g, 1-g)."""

    f: float
    g: float
    table: np.ndarray  # shape (2, 2); table[i, j] = Lambda(i, j)
    orientation: int  # -1 monotone (mass on diagonal), +1 antitone

    def cost(self, costs: np.ndarray) -> float:
        return float(np.sum(self.table * costs))


def lambda_sign(costs: np.ndarray) -> int:
    """Orientation of the optimal coupling for a 2x2 transport cost:
    -1 when c00 + c11 <= c01 + c10 (ties favor the monotone table)."""
    s = costs[0, 0] + costs[1, 1] - costs[0, 1] - costs[1, 0]
    return -1 if s <= 0 else 1


def coupling_table(f: float, g: float, orientation: int) -> np.ndarray:
    """The extreme coupling table of Bernoulli(1-f) and Bernoulli(1-g)
    for a fixed orientation: monotone (-1) puts the minima on the
    diagonal, antitone (+1) on the anti-diagonal."""
    if orientation == -1:
        d00 = min(f, g)
        table = np.array([[d00, f - d00], [g - d00, 1.0 - f - g + d00]])
    else:
        table = np.array(
            [
                [f + g - 1.0, min(f, 1.0 - g)],
                [min(1.0 - f, g), 1.0 - f - g],
            ]
        )
    return np.maximum(table, 0.0)  # clip float dust at the boundary


def optimal_coupling(f: float, g: float, costs: np.ndarray) -> Coupling2x2:
    """Minimum-cost coupling of Bernoulli(1-f) and Bernoulli(1-g)
    (f, g are the probabilities of symbol 0).

    The transport polytope is a segment; a linear cost is minimized at
    an endpoint, which is the monotone table for orientation -1 and the
    antitone table for orientation +1.
    """
    orient = lambda_sign(costs)
    return Coupling2x2(f, g, coupling_table(f, g, orient), orient)


# ---------------------------------------------------------------------------
# Exact metric recursion


@dataclass(frozen=True)
class MetricTable:
    """Expected generator distance after `depth` optimal coupling steps.

    ``values[u, v]`` is the distance between the pasts whose symbols at
    lags depth+1 .. depth+length are coded by u and v (the recursion has
    already averaged out the most recent `depth` symbols).  For kernels
    of finite order k with length >= max(k, generator depth - depth),
    every entry is exact: the conditioning contexts never run off the
    stored word.

    ``rho_tilde(x, y)`` exposes the distance between full pasts coded up
    to the present: the most recent `depth` symbols of x and y are
    irrelevant (already averaged), so it reads values[x >> depth, y >> depth].
    """

    depth: int
    length: int
    values: np.ndarray  # shape (2^length, 2^length)
    orientation: np.ndarray | None  # lambda used to step *into* this table

    def rho_tilde(self, x_int: int, y_int: int) -> float:
        """Distance for pasts coded with the present at bit 0."""
        return float(self.values[x_int >> self.depth, y_int >> self.depth])

    def dump(self) -> str:
        size = 1 << self.length
        lines = []
        for u in range(size):
            su = word_str(int_to_word(u, self.length))
            for v in range(size):
                sv = word_str(int_to_word(v, self.length))
                lines.append(f"{su} {sv} {self.values[u, v]:.17g}")
        return "\n".join(lines) + "\n"


def _base_table(config: GeneratorConfig, length: int) -> MetricTable:
    """Depth-0 table: plain |R_D(x) - R_D(y)| on length-`length` words.

    Requires length >= depth + 1 so no generator coordinate falls
    outside the stored word."""
    if length < config.depth + 1:
        raise ValueError("table length must cover the generator depth + 1")
    gen = generator_table(config.depth)
    r = gen[np.arange(1 << length) & ((1 << (config.depth + 1)) - 1)]
    values = np.abs(r[:, None] - r[None, :])
    values.flags.writeable = False
    return MetricTable(0, length, values, None)


def rho_step(kernel: Kernel, table: MetricTable) -> MetricTable:
    """One backward step of the metric recursion.

    For each pair of contexts (u, v) the new value is the optimal-
    coupling average of the four successor distances; the successor at
    symbol a of context u is (u << 1 | a) truncated to `length` bits,
    which stays a true context because length >= kernel memory.
    """
    length = table.length
    if length < kernel.memory:
        raise ValueError("table length must cover the kernel memory")
    size = 1 << length
    mask = size - 1
    kmask = (1 << kernel.memory) - 1 if kernel.memory else 0
    p0 = kernel.prob0_table
    idx = np.arange(size)
    succ0 = (idx << 1) & mask
    succ1 = succ0 | 1

    old = table.values
    c00 = old[np.ix_(succ0, succ0)]
    c01 = old[np.ix_(succ0, succ1)]
    c10 = old[np.ix_(succ1, succ0)]
    c11 = old[np.ix_(succ1, succ1)]
    f = p0[idx & kmask] if kernel.memory else np.full(size, p0[0])
    fu = f[:, None]
    gv = f[None, :]

    orient_stat = c00 + c11 - c01 - c10
    orientation = np.where(orient_stat <= 0, -1, 1).astype(np.int8)

    # Monotone endpoint: diagonal mass min(f, g).
    d00 = np.minimum(fu, gv)
    mono = (
        d00 * c00
        + (fu - d00) * c01
        + (gv - d00) * c10
        + (1.0 - fu - gv + d00) * c11
    )
    # Antitone endpoint: minima on the anti-diagonal.
    anti = (
        np.maximum(fu + gv - 1.0, 0.0) * c00
        + np.minimum(fu, 1.0 - gv) * c01
        + np.minimum(1.0 - fu, gv) * c10
        + np.maximum(1.0 - fu - gv, 0.0) * c11
    )
    values = np.where(orientation == -1, mono, anti)
    values.flags.writeable = False
    return MetricTable(table.depth + 1, length, values, orientation)


def metric_tables(
    kernel: Kernel, p_max: int, config: GeneratorConfig = GeneratorConfig()
) -> list[MetricTable]:
    """Tables T_0 .. T_{p_max}; T_p holds the depth-p distances."""
    length = max(kernel.memory, config.depth + 1)
    if length > MAX_TABLE_LENGTH:
        raise CapExceededError(
            f"metric table length {length} exceeds cap {MAX_TABLE_LENGTH}"
        )
    tables = [_base_table(config, length)]
    for _ in range(p_max):
        tables.append(rho_step(kernel, tables[-1]))
    return tables


# ---------------------------------------------------------------------------
# Alpha sequence


@dataclass(frozen=True)
class AlphaSequence:
    values: tuple[float, ...]  # alpha_0 .. alpha_{p_max}
    mode: str  # "exact" | "monte-carlo"
    stderr: tuple[float, ...] | None = None

    def alpha(self, p: int) -> float:
        return self.values[p]


def alpha_sequence(
    kernel: Kernel,
    p_max: int,
    config: GeneratorConfig = GeneratorConfig(),
) -> AlphaSequence:
    """alpha_p = E rho_p(X, Y) over independent stationary pasts X, Y,
    computed exactly from the metric tables and the stationary word law."""
    tables = metric_tables(kernel, p_max, config)
    length = tables[0].length
    pi = stationary_ctx_vector(kernel, length)
    outer = pi[:, None] * pi[None, :]
    values = tuple(float(np.sum(outer * t.values)) for t in tables)
    return AlphaSequence(values, "exact")


def alpha_sequence_mc(
    kernel: Kernel,
    p_max: int,
    trials: int,
    seed: int,
    config: GeneratorConfig = GeneratorConfig(),
) -> AlphaSequence:
    """Monte Carlo estimate of the same sequence: sample independent
    stationary context pairs and average the table entries."""
    from .rng import stream_rng

    tables = metric_tables(kernel, p_max, config)
    length = tables[0].length
    pi = stationary_ctx_vector(kernel, length)
    rng = stream_rng(seed, "alpha-mc", kernel.label)
    xs = rng.choice(pi.size, p=pi, size=trials)
    ys = rng.choice(pi.size, p=pi, size=trials)
    vals, errs = [], []
    for t in tables:
        samples = t.values[xs, ys]
        vals.append(float(samples.mean()))
        errs.append(float(samples.std(ddof=1) / np.sqrt(trials)))
    return AlphaSequence(tuple(vals), "monte-carlo", tuple(errs))


def alpha_sup_bound(config: GeneratorConfig, p: int) -> float:
    """For context-free kernels the depth-p distance only sees symbols
    at lags >= p, so alpha_p <= sum_{n=p}^{D} 3^-n.  Not certified for
    context-dependent kernels (coupled symbols need not agree)."""
    return float(sum(3.0 ** (-n) for n in range(p, config.depth + 1)))
