"""Path simulation, finite-window reconstruction from innovations, and
the renewal (reset-chain) bound on reconstruction error.

A stationary path is carried as a numpy int array together with the
innovation stream that generated it.  Reconstruction replays the
innovations through the decoder starting from an all-zero prehistory;
the renewal bound controls how far back the replay must start for the
final window to agree with the truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .innovation import encode_w
from .kernels import (
    CapExceededError,
    Kernel,
    LongMemoryKernel,
    MAX_WORD_LENGTH,
    gamma_profile,
    stationary_ctx_vector,
)
from .rng import stream_rng

_BURN_IN = 4096


@dataclass(frozen=True)
class PathSample:
    """A simulated path with its innovations; index 0 is the earliest step."""

    x: np.ndarray  # symbols, shape (steps,)
    w: np.ndarray  # innovations, shape (steps,)
    f: np.ndarray  # conditional P(X=0) used at each step
    init_ctx: int  # integer-coded context preceding x[0]


def _init_context(kernel: Kernel, rng: np.random.Generator) -> int:
    """Draw a stationary starting context (burn-in for long-memory)."""
    m = kernel.memory
    if m == 0:
        return 0
    if isinstance(kernel, LongMemoryKernel):
        table = kernel.prob0_table
        mask = (1 << m) - 1
        ctx = 0
        for u in rng.random(_BURN_IN):
            x = 1 if u > table[ctx] else 0
            ctx = ((ctx << 1) | x) & mask
        return ctx
    pi = stationary_ctx_vector(kernel, m)
    return int(rng.choice(pi.size, p=pi))


def simulate_path(kernel: Kernel, steps: int, seed: int) -> PathSample:
    """Simulate a stationary path together with its innovation stream.

    Each step consumes two independent uniforms: one thresholds the
    symbol, the other is the auxiliary uniform packed into the
    innovation.  The innovations are therefore a genuine function of
    (path, auxiliary randomness), not uniforms drawn directly.
    """
    rng = stream_rng(seed, "simulate", kernel.label)
    init_ctx = _init_context(kernel, rng)
    m = kernel.memory
    mask = (1 << m) - 1 if m else 0
    table = kernel.prob0_table
    u = rng.random(steps)
    v = rng.random(steps)
    x = np.empty(steps, dtype=np.int64)
    f = np.empty(steps)
    ctx = init_ctx
    for t in range(steps):
        ft = table[ctx & mask] if m else table[0]
        xt = 1 if u[t] > ft else 0
        x[t] = xt
        f[t] = ft
        ctx = ((ctx << 1) | xt) & mask
    w = encode_w(x, v, f)
    return PathSample(x=x, w=w, f=f, init_ctx=init_ctx)


def window_reconstruct(kernel: Kernel, w: np.ndarray, start_ctx: int = 0) -> np.ndarray:
    """Replay innovations through the decoder from the given context
    (default: all-zero prehistory), returning the reconstructed symbols."""
    m = kernel.memory
    mask = (1 << m) - 1 if m else 0
    table = kernel.prob0_table
    x = np.empty(len(w), dtype=np.int64)
    ctx = start_ctx & mask if m else 0
    for t, wt in enumerate(np.asarray(w, dtype=float)):
        ft = table[ctx & mask] if m else table[0]
        xt = 1 if wt > ft else 0
        x[t] = xt
        ctx = ((ctx << 1) | xt) & mask
    return x


def agreement_length(x: np.ndarray, xhat: np.ndarray) -> int:
    """Length of the common suffix of the two symbol arrays."""
    x = np.asarray(x)
    xhat = np.asarray(xhat)
    diff = np.nonzero(x != xhat)[0]
    if diff.size == 0:
        return len(x)
    return len(x) - 1 - int(diff[-1])


# ---------------------------------------------------------------------------
# Reset-chain (renewal) bound


@dataclass(frozen=True)
class ResetChainDist:
    """Law of the reset chain after n steps from state 0.

    The chain moves i -> i+1 with probability 1 - gamma_i and resets to
    0 with probability gamma_i; its state dominates (stochastically,
    from below) the agreement length between truth and replay.
    """

    n: int
    probs: np.ndarray  # probs[i] = P(Z_n = i), i = 0..n

    def cdf(self, k: int) -> float:
        """P(Z_n <= k)."""
        if k < 0:
            return 0.0
        return float(np.sum(self.probs[: min(k, self.n) + 1]))


def house_of_cards_dist(gammas, n: int) -> ResetChainDist:
    """Exact law of the reset chain after n steps started at 0.

    ``gammas`` is indexable: gammas[i] = reset probability from state i
    (a GammaProfile's .gamma works via a small adapter below)."""
    probs = np.zeros(n + 1)
    probs[0] = 1.0
    for _ in range(n):
        new = np.zeros(n + 1)
        for i in range(n + 1):
            p = probs[i]
            if p == 0.0:
                continue
            g = gammas[i] if i < len(gammas) else 0.0
            new[0] += p * g
            if i + 1 <= n:
                new[i + 1] += p * (1.0 - g)
        probs = new
    return ResetChainDist(n, probs)


def reconstruction_bound(kernel: Kernel, n_start: int, k_lags: int) -> float:
    """Renewal upper bound on P(replay over [n_start; 0] from zero
    prehistory disagrees with the truth on [-k_lags; 0]): the reset
    chain runs |n_start| steps (state 0 after the first replay symbol)
    and the bound is P(Z_{|n_start|} <= k_lags)."""
    n = -n_start
    prof = gamma_profile(kernel, max(kernel.memory, 1))
    gammas = [prof.gamma(p) for p in range(n + 1)]
    dist = house_of_cards_dist(gammas, n)
    return dist.cdf(k_lags)


# ---------------------------------------------------------------------------
# Monte Carlo disagreement experiment


@dataclass(frozen=True)
class DisagreementRow:
    n_start: int
    k_lags: int
    trials: int
    freq: float
    stderr: float
    dp_bound: float
    verdict: str  # "within-bound" | "violates-bound"


def _coupled_replay_words(
    kernel: Kernel, n_start: int, trials: int, seed: int, keep_bits: int
):
    """Run the true chain and the zero-prehistory replay on shared
    innovations over [n_start; 0], vectorized across trials.

    The innovations are drawn uniform directly (same joint law as the
    two-uniform encoder).  Returns the low `keep_bits` bits of the final
    contexts (true, replay)."""
    steps = -n_start + 1
    rng = stream_rng(seed, "replay", kernel.label, f"N{n_start}")
    m = kernel.memory
    mask = (1 << m) - 1 if m else 0
    table = kernel.prob0_table

    # Stationary initial contexts for the true chain.
    if isinstance(kernel, LongMemoryKernel):
        ctx_true = np.array(
            [
                _init_context(kernel, stream_rng(seed, "init", str(t)))
                for t in range(trials)
            ],
            dtype=np.int64,
        )
    elif m:
        pi = stationary_ctx_vector(kernel, m)
        ctx_true = np.array(rng.choice(pi.size, p=pi, size=trials), dtype=np.int64)
    else:
        ctx_true = np.zeros(trials, dtype=np.int64)
    ctx_hat = np.zeros(trials, dtype=np.int64)

    w = rng.random((trials, steps))
    keep = (1 << keep_bits) - 1
    for t in range(steps):
        wt = w[:, t]
        f_true = table[ctx_true & mask] if m else np.full(trials, table[0])
        f_hat = table[ctx_hat & mask] if m else f_true
        x_true = (wt > f_true).astype(np.int64)
        x_hat = (wt > f_hat).astype(np.int64)
        ctx_true = ((ctx_true << 1) | x_true) & keep
        ctx_hat = ((ctx_hat << 1) | x_hat) & keep
    return ctx_true, ctx_hat


def disagreement_experiment(
    kernel: Kernel,
    n_start: int,
    k_lags: int,
    trials: int,
    seed: int,
    slack_sigmas: float = 3.0,
) -> DisagreementRow:
    """Estimate P(replay disagrees with the truth on [-k_lags; 0]) and
    compare with the renewal bound."""
    if k_lags + 1 > MAX_WORD_LENGTH:
        raise CapExceededError(f"window {k_lags + 1} exceeds cap {MAX_WORD_LENGTH}")
    if k_lags >= -n_start + 1:
        raise ValueError("compared window cannot exceed the replayed range")
    keep = max(k_lags + 1, kernel.memory)
    end_true, end_hat = _coupled_replay_words(kernel, n_start, trials, seed, keep)
    wmask = (1 << (k_lags + 1)) - 1
    mismatches = int(np.sum((end_true & wmask) != (end_hat & wmask)))
    freq = mismatches / trials
    stderr = float(np.sqrt(freq * (1.0 - freq) / trials))
    bound = reconstruction_bound(kernel, n_start, k_lags)
    ok = freq <= bound + slack_sigmas * stderr
    return DisagreementRow(
        n_start, k_lags, trials, freq, stderr, bound,
        "within-bound" if ok else "violates-bound",
    )


@dataclass(frozen=True)
class DominationRow:
    n_start: int
    m: int
    trials: int
    mc_tail: float  # MC estimate of P(agreement length > m)
    stderr: float
    exact_tail: float  # exact P(Z_{|n_start|} > m)
    verdict: str  # "dominates" | "violates"


def domination_experiment(
    kernel: Kernel,
    n_start: int,
    trials: int,
    seed: int,
    slack_sigmas: float = 3.0,
) -> list[DominationRow]:
    """Check P(agreement length > M) >= P(Z_{|n_start|} > M) - 3*stderr
    for every M up to |n_start|: the reset chain is stochastically
    dominated by the true agreement length."""
    n = -n_start
    keep = min(n + 1, MAX_WORD_LENGTH)
    keep = max(keep, kernel.memory)
    end_true, end_hat = _coupled_replay_words(kernel, n_start, trials, seed, keep)
    max_m = min(n, keep - 1)
    prof = gamma_profile(kernel, max(kernel.memory, 1))
    dist = house_of_cards_dist([prof.gamma(p) for p in range(n + 1)], n)
    # Agreement length = common low-bit run of the two final contexts.
    diff = end_true ^ end_hat
    rows = []
    for m in range(max_m + 1):
        agree = (diff & ((1 << (m + 1)) - 1)) == 0  # suffix length > m
        mc = float(np.mean(agree))
        stderr = float(np.sqrt(mc * (1.0 - mc) / trials))
        exact = 1.0 - dist.cdf(m)
        ok = mc >= exact - slack_sigmas * stderr
        rows.append(
            DominationRow(
                n_start, m, trials, mc, stderr, exact,
                "dominates" if ok else "violates",
            )
        )
    return rows
