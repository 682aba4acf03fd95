from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledchains.kernels import (
    CapExceededError,
    IIDKernel,
    LongMemoryKernel,
    MarkovKernel,
    builtin_kernels,
    conditional_prob,
    eventually_zero,
    gamma_profile,
    lower_envelope,
    min_prob,
    one_minus_geometric,
    prob0_fractions,
    rational_decay,
    regime_check,
    stationary_ctx_vector,
    stationary_word_law,
    unknown_tail,
)
from coupledchains.words import int_to_word

MARKOV1 = builtin_kernels()["markov1-demo"]
LONGMEM = builtin_kernels()["long-memory-demo"]
IID = builtin_kernels()["iid-half"]


# ---------------------------------------------------------------------------
# Conditional probabilities


def test_markov_table_lookup():
    assert conditional_prob(MARKOV1, (0,)) == 0.7
    assert conditional_prob(MARKOV1, (1,)) == 0.4
    # Longer contexts: only the most recent symbol matters.
    assert conditional_prob(MARKOV1, (1, 1, 0)) == 0.7
    # Short/empty contexts are zero-padded.
    assert conditional_prob(MARKOV1, ()) == 0.7


def test_long_memory_table():
    # P(0 | past) = 0.3 + 0.2*1(lag1 == 0) + 0.1*1(lag2 == 0)
    assert conditional_prob(LONGMEM, (0, 0)) == pytest.approx(0.6)
    assert conditional_prob(LONGMEM, (0, 1)) == pytest.approx(0.4)
    assert conditional_prob(LONGMEM, (1, 0)) == pytest.approx(0.5)
    assert conditional_prob(LONGMEM, (1, 1)) == pytest.approx(0.3)


def test_iid_ignores_context():
    assert conditional_prob(IID, ()) == 0.5
    assert conditional_prob(IID, (1, 0, 1)) == 0.5


def test_min_prob():
    assert min_prob(MARKOV1) == pytest.approx(0.3)
    assert min_prob(IID) == 0.5


def test_validation():
    with pytest.raises(ValueError):
        IIDKernel(1.0)
    with pytest.raises(ValueError):
        MarkovKernel.from_table(1, {(0,): 0.7})  # incomplete table
    with pytest.raises(ValueError):
        LongMemoryKernel(0.5, (0.4, 0.2))  # exceeds 1
    with pytest.raises(CapExceededError):
        MarkovKernel(13, tuple([0.5] * (1 << 13)))
    with pytest.raises(CapExceededError):
        LongMemoryKernel(0.1, tuple([0.01] * 17))


# ---------------------------------------------------------------------------
# Memory-decay coefficients.  Oracle: independent hand enumeration in
# exact rational arithmetic over explicitly listed contexts.


def _gamma_oracle(p0_by_ctx: dict, p: int, memory: int) -> float:
    """1 - inf over context pairs agreeing on the last p symbols of the
    ratio of conditional laws, straight from the definition."""
    worst = Fraction(1)
    ctxs = list(p0_by_ctx)
    for a in ctxs:
        for b in ctxs:
            if a[len(a) - p :] != b[len(b) - p :]:
                continue
            for sym in (0, 1):
                pa = p0_by_ctx[a] if sym == 0 else 1 - p0_by_ctx[a]
                pb = p0_by_ctx[b] if sym == 0 else 1 - p0_by_ctx[b]
                worst = min(worst, Fraction(pa) / Fraction(pb))
    return float(1 - worst)


def test_gamma_markov1_exact():
    table = {(0,): Fraction(7, 10), (1,): Fraction(4, 10)}
    prof = gamma_profile(MARKOV1, 3)
    assert prof.values[0] == _gamma_oracle(table, 0, 1)
    assert prof.values[0] == 0.5
    assert prof.values[1:] == (0.0, 0.0, 0.0)


def test_gamma_long_memory_exact():
    c, t1, t2 = Fraction(3, 10), Fraction(2, 10), Fraction(1, 10)
    table = {
        (b2, b1): c + t1 * (1 - b1) + t2 * (1 - b2)
        for b1 in (0, 1)
        for b2 in (0, 1)
    }
    prof = gamma_profile(LONGMEM, 3)
    assert prof.values[0] == _gamma_oracle(table, 0, 2)
    assert prof.values[1] == _gamma_oracle(table, 1, 2)
    assert prof.values == (0.5, 0.25, 0.0, 0.0)


def test_gamma_iid_zero():
    assert gamma_profile(IID, 4).values == (0.0,) * 5


def test_gamma_beyond_range_is_zero():
    prof = gamma_profile(MARKOV1, 2)
    assert prof.gamma(10) == 0.0


@given(
    st.lists(st.floats(0.05, 0.95), min_size=4, max_size=4),
)
@settings(max_examples=50)
def test_gamma_monotone_nonincreasing(probs):
    kernel = MarkovKernel(2, tuple(probs))
    prof = gamma_profile(kernel, 4)
    for a, b in zip(prof.values, prof.values[1:]):
        assert b <= a + 1e-12


# ---------------------------------------------------------------------------
# Lower envelopes and the envelope inequality


def test_lower_envelope_brute_force():
    # Oracle: explicit min over all full-memory contexts extending z.
    table = LONGMEM.prob0_table
    for z in [(), (0,), (1,), (0, 1)]:
        exts = [
            ctx
            for ctx in range(4)
            if all(((ctx >> i) & 1) == z[len(z) - 1 - i] for i in range(len(z)))
        ]
        for sym in (0, 1):
            probs = [table[c] if sym == 0 else 1 - table[c] for c in exts]
            assert lower_envelope(LONGMEM, sym, z) == min(probs)


def test_envelope_inequality_all_builtins():
    # a_p(0|z) + a_p(1|z) >= 1 - gamma_p for every context length <= 8.
    for kernel in builtin_kernels().values():
        prof = gamma_profile(kernel, 8)
        for p in range(9):
            for code in range(1 << p):
                z = int_to_word(code, p)
                total = lower_envelope(kernel, 0, z) + lower_envelope(kernel, 1, z)
                assert total >= 1.0 - prof.gamma(p) - 1e-12


# ---------------------------------------------------------------------------
# Regime classification


def test_regime_families():
    prof = gamma_profile(MARKOV1, 4)
    assert regime_check(prof, eventually_zero()).regime == "diverges-certified"
    assert regime_check(prof, unknown_tail()).regime == "undetermined"
    slow = rational_decay(0.9, 2.0)
    assert regime_check(prof, slow).regime == "diverges-certified"
    fast = rational_decay(2.0, 3.0)
    assert regime_check(prof, fast).regime == "converges-certified"
    geo = one_minus_geometric(0.9, 0.5)
    assert regime_check(prof, geo).regime == "converges-certified"


def test_tail_validation():
    with pytest.raises(ValueError):
        rational_decay(2.0, 1.0)  # a/b >= 1
    with pytest.raises(ValueError):
        one_minus_geometric(1.5, 0.5)


# ---------------------------------------------------------------------------
# Stationary laws.  Oracle: dense linear solve of the balance equations.


def _stationary_oracle(kernel, length):
    size = 1 << length
    mask = size - 1
    P = np.zeros((size, size))
    for ctx in range(size):
        f = conditional_prob(kernel, int_to_word(ctx, length))
        P[ctx, ((ctx << 1) & mask)] += f
        P[ctx, ((ctx << 1) & mask) | 1] += 1.0 - f
    A = np.vstack([P.T - np.eye(size), np.ones(size)])
    b = np.zeros(size + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def test_stationary_markov1():
    pi = stationary_ctx_vector(MARKOV1, 1)
    # Balance: pi0 = pi0*0.7 + (1-pi0)*0.4  =>  pi0 = 4/7.
    assert pi[0] == pytest.approx(4 / 7, abs=1e-12)
    oracle = _stationary_oracle(MARKOV1, 2)
    pi2 = stationary_ctx_vector(MARKOV1, 2)
    assert np.allclose(pi2, oracle, atol=1e-10)
    assert pi2[0] == pytest.approx(0.4, abs=1e-12)


def test_stationary_word_law_marginalizes():
    law = stationary_word_law(MARKOV1, 2)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
    pi1 = stationary_ctx_vector(MARKOV1, 1)
    assert law[(0, 0)] + law[(1, 0)] == pytest.approx(pi1[0], abs=1e-12)


def test_stationary_iid():
    pi = stationary_ctx_vector(IID, 3)
    assert np.allclose(pi, 1 / 8, atol=1e-12)


def test_stationary_rejects_long_memory():
    with pytest.raises(ValueError):
        stationary_ctx_vector(LONGMEM, 2)


def test_prob0_fractions_decimal_interpretation():
    fr = prob0_fractions(MARKOV1)
    assert fr == [Fraction(7, 10), Fraction(4, 10)]
