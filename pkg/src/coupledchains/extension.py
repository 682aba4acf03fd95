"""Orientation-driven innovations, anchored companion chains, and the
block-stitched product-type sequence.

Given the metric tables of :mod:`.vershik`, each step of the true chain
is re-encoded relative to a companion ("hat") chain started from an
anchor word: the innovation W is kept or flipped to U = 1 - W according
to the orientation of the optimal coupling between the two conditional
laws, and the hat chain thresholds U against its own conditional
probability.  The joint one-step law of (X, X-hat) is then exactly the
optimal 2x2 coupling, the expected truncated-generator gap equals an
exact integral against the metric table, and stitching shifted blocks
of U yields an iid-uniform sequence from which the generator can be
recovered within any tolerance schedule.

Time convention: a run over [N; 0] takes |N|+1 steps; the step landing
at time t uses the orientation table at depth -t + 1 (depth |N|+1 first,
depth 1 last).  Contexts are integer words, most recent symbol at bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .innovation import AuditReport, innovation_audit
from .kernels import CapExceededError, Kernel, conditional_prob, stationary_ctx_vector
from .rng import stream_rng
from .vershik import (
    GeneratorConfig,
    MetricTable,
    coupling_table,
    generator_table,
    metric_tables,
)
from .words import Word, as_word, int_to_word, word_to_int


class AnchorSelectionError(RuntimeError):
    """No candidate anchor meets the requested integral bound."""


def u_step(w: float, lam: int, xhat_context, kernel: Kernel):
    """One re-encoded innovation step.

    Returns (u, xhat_next): u = w when lam = -1, u = 1 - w when
    lam = +1; the hat chain then thresholds u against P(0 | context).
    """
    if lam not in (-1, 1):
        raise ValueError("orientation must be -1 or +1")
    u = w if lam == -1 else 1.0 - w
    xhat_next = 1 if u > conditional_prob(kernel, as_word(xhat_context)) else 0
    return u, xhat_next


@dataclass(frozen=True)
class CouplingEngine:
    """Precomputed machinery for coupled runs against a fixed kernel:
    metric tables (values + orientations) up to some depth, plus the
    exact stationary law on length-L contexts."""

    kernel: Kernel
    config: GeneratorConfig
    tables: list[MetricTable]
    pi: np.ndarray  # stationary law on length-L words

    @classmethod
    def build(
        cls, kernel: Kernel, p_max: int, config: GeneratorConfig = GeneratorConfig()
    ) -> "CouplingEngine":
        tables = metric_tables(kernel, p_max, config)
        pi = stationary_ctx_vector(kernel, tables[0].length)
        return cls(kernel, config, tables, pi)

    @property
    def length(self) -> int:
        return self.tables[0].length

    @property
    def p_max(self) -> int:
        return len(self.tables) - 1

    def extend(self, p_max: int) -> "CouplingEngine":
        if p_max <= self.p_max:
            return self
        from .vershik import rho_step

        tables = list(self.tables)
        while len(tables) <= p_max:
            tables.append(rho_step(self.kernel, tables[-1]))
        return CouplingEngine(self.kernel, self.config, tables, self.pi)

    def alpha(self, p: int) -> float:
        t = self.tables[p]
        return float(np.sum(self.pi[:, None] * self.pi[None, :] * t.values))

    def anchor_integrals(self, p: int) -> np.ndarray:
        """integral_v -> sum_u pi(u) * rho_tilde_p(u, v), all anchors v."""
        return np.sum(self.pi[:, None] * self.tables[p].values, axis=0)

    def orientations(self, depth: int, ctx_x, ctx_hat):
        """Orientation lambda at the given depth for context pairs
        (vectorized); depth >= 1."""
        mask = (1 << self.length) - 1
        orient = self.tables[depth].orientation
        return orient[np.asarray(ctx_x) & mask, np.asarray(ctx_hat) & mask]

    def generator_values(self, ctx) -> np.ndarray:
        """Truncated generator from the low depth+1 bits of a context."""
        gen = generator_table(self.config.depth)
        return gen[np.asarray(ctx) & ((1 << (self.config.depth + 1)) - 1)]


def _step_prob0(kernel: Kernel, ctx):
    table = kernel.prob0_table
    m = kernel.memory
    if m == 0:
        ctx = np.asarray(ctx)
        return np.full(ctx.shape, table[0]) if ctx.ndim else float(table[0])
    return table[np.asarray(ctx) & ((1 << m) - 1)]


def coupled_run(
    engine: CouplingEngine,
    n_start: int,
    ctx_true: np.ndarray,
    ctx_hat: np.ndarray,
    w: np.ndarray,
):
    """Run the re-encoding over [n_start; 0] (|n_start|+1 steps),
    vectorized over trials.

    ``w`` has shape (trials, |n_start|+1); contexts are integer words
    for the pasts up to time n_start - 1.  Returns (u, ctx_true,
    ctx_hat) with u the re-encoded innovations and the contexts now up
    to time 0.
    """
    steps = -n_start + 1
    if w.shape[1] != steps:
        raise ValueError("innovation array does not match the window")
    if steps > engine.p_max:
        raise ValueError("engine tables too shallow for this window")
    kernel = engine.kernel
    ctx_true = np.array(ctx_true, dtype=np.int64)
    ctx_hat = np.array(ctx_hat, dtype=np.int64)
    u = np.empty_like(w)
    for t in range(steps):
        depth = steps - t
        lam = engine.orientations(depth, ctx_true, ctx_hat)
        wt = w[:, t]
        ut = np.where(lam == -1, wt, 1.0 - wt)
        f_true = _step_prob0(kernel, ctx_true)
        f_hat = _step_prob0(kernel, ctx_hat)
        # True chain: X = 1(W > f); in terms of u that is
        # 1(u > f) for lam = -1 and 1(1 - u > f) for lam = +1.
        x_true = (wt > f_true).astype(np.int64)
        x_hat = (ut > f_hat).astype(np.int64)
        ctx_true = (ctx_true << 1) | x_true
        ctx_hat = (ctx_hat << 1) | x_hat
        u[:, t] = ut
    return u, ctx_true, ctx_hat


def reconstruct_from_u(
    engine: CouplingEngine,
    u: np.ndarray,
    ctx_true: np.ndarray,
    ctx_hat: np.ndarray,
):
    """Invert :func:`coupled_run`: rebuild the true symbols over [N; 0]
    from the re-encoded innovations, the true context before the window
    and the anchor context.  The hat chain is regenerated alongside
    (it is a plain function of u).

    Returns (x_true, x_hat) symbol arrays of shape (trials, |N|+1).
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    steps = u.shape[1]
    if steps > engine.p_max:
        raise ValueError("engine tables too shallow for this window")
    kernel = engine.kernel
    ctx_true = np.array(np.atleast_1d(ctx_true), dtype=np.int64)
    ctx_hat = np.array(np.atleast_1d(ctx_hat), dtype=np.int64)
    x_out = np.empty(u.shape, dtype=np.int64)
    xhat_out = np.empty(u.shape, dtype=np.int64)
    for t in range(steps):
        depth = steps - t
        lam = engine.orientations(depth, ctx_true, ctx_hat)
        ut = u[:, t]
        wt = np.where(lam == -1, ut, 1.0 - ut)
        x_true = (wt > _step_prob0(kernel, ctx_true)).astype(np.int64)
        x_hat = (ut > _step_prob0(kernel, ctx_hat)).astype(np.int64)
        ctx_true = (ctx_true << 1) | x_true
        ctx_hat = (ctx_hat << 1) | x_hat
        x_out[:, t] = x_true
        xhat_out[:, t] = x_hat
    return x_out, xhat_out


# ---------------------------------------------------------------------------
# Exact joint window law (identity checks for the coupled construction)


@dataclass(frozen=True)
class JointLawReport:
    window: int
    tv_gap: float  # DP via u-interval arithmetic vs coupling-table product
    hat_marginal_gap: float  # hat window law vs kernel chain from anchor
    anchor: Word


def _interval_joint(f_true: float, f_hat: float, lam: int) -> np.ndarray:
    """Joint law of (X, X-hat) from the uniform u by interval overlap:
    X-hat = 1(u > f_hat); X = 1(u > f_true) for lam = -1 and
    X = 1(u >= 1 - f_true... strictly: 1(1-u > f_true)) for lam = +1."""
    out = np.empty((2, 2))
    if lam == -1:
        lo, hi = min(f_true, f_hat), max(f_true, f_hat)
        out[0, 0] = lo
        out[0, 1] = (f_true - f_hat) if f_true > f_hat else 0.0
        out[1, 0] = (f_hat - f_true) if f_hat > f_true else 0.0
        out[1, 1] = 1.0 - hi
    else:
        # X = 0 iff u >= 1 - f_true; X-hat = 0 iff u <= f_hat.
        out[0, 0] = max(0.0, f_hat - (1.0 - f_true))
        out[0, 1] = min(f_true, 1.0 - f_hat)
        out[1, 0] = min(1.0 - f_true, f_hat)
        out[1, 1] = max(0.0, (1.0 - f_hat) - f_true)
    return out


def joint_step_law(
    engine: CouplingEngine, window: int, anchor
) -> JointLawReport:
    """Exact joint law of (X[window], X-hat[window]) by dynamic
    programming, against the product of optimal coupling tables.

    Both sides are pushed forward step by step from the stationary law
    on true contexts and the fixed anchor context; the report carries
    the total-variation gap (identical transition laws, so the gap is
    float dust) and the gap between the hat marginal and the kernel
    chain started from the anchor.
    """
    if window > 6:
        raise CapExceededError("exact window enumeration capped at 6")
    engine = engine.extend(window)

    anchor_int = word_to_int(as_word(anchor))
    L = engine.length
    mask = (1 << L) - 1
    kernel = engine.kernel

    # States: (ctx_true, ctx_hat, path_true, path_hat) -> prob.
    states_dp: dict[tuple, float] = {}
    states_prod: dict[tuple, float] = {}
    for c in range(1 << L):
        if engine.pi[c] > 0.0:
            states_dp[(c, anchor_int, 0, 0)] = float(engine.pi[c])
            states_prod[(c, anchor_int, 0, 0)] = float(engine.pi[c])

    for t in range(window):
        depth = window - t
        for states, use_interval in ((states_dp, True), (states_prod, False)):
            new: dict[tuple, float] = {}
            for (cx, ch, px, ph), prob in states.items():
                f_true = float(_step_prob0(kernel, np.int64(cx)))
                f_hat = float(_step_prob0(kernel, np.int64(ch)))
                lam = int(engine.orientations(depth, cx, ch))
                if use_interval:
                    joint = _interval_joint(f_true, f_hat, lam)
                else:
                    joint = coupling_table(f_true, f_hat, lam)
                for a in (0, 1):
                    for b in (0, 1):
                        p = prob * float(joint[a, b])
                        if p <= 0.0:
                            continue
                        key = (
                            ((cx << 1) | a) & mask,
                            ((ch << 1) | b) & mask,
                            (px << 1) | a,
                            (ph << 1) | b,
                        )
                        new[key] = new.get(key, 0.0) + p
            states.clear()
            states.update(new)

    def path_law(states):
        law: dict[tuple[int, int], float] = {}
        for (cx, ch, px, ph), prob in states.items():
            law[(px, ph)] = law.get((px, ph), 0.0) + prob
        return law

    law_dp = path_law(states_dp)
    law_prod = path_law(states_prod)
    keys = set(law_dp) | set(law_prod)
    tv = 0.5 * sum(abs(law_dp.get(k, 0.0) - law_prod.get(k, 0.0)) for k in keys)

    # Hat marginal vs the kernel chain run from the anchor context.
    hat_dp: dict[int, float] = {}
    for (px, ph), prob in law_dp.items():
        hat_dp[ph] = hat_dp.get(ph, 0.0) + prob
    chain: dict[tuple[int, int], float] = {(anchor_int, 0): 1.0}
    for _ in range(window):
        new: dict[tuple[int, int], float] = {}
        for (c, path), prob in chain.items():
            f = float(_step_prob0(kernel, np.int64(c)))
            for a, pa in ((0, f), (1, 1.0 - f)):
                key = (((c << 1) | a) & mask, (path << 1) | a)
                new[key] = new.get(key, 0.0) + prob * pa
        chain = new
    hat_chain: dict[int, float] = {}
    for (c, path), prob in chain.items():
        hat_chain[path] = hat_chain.get(path, 0.0) + prob
    keys = set(hat_dp) | set(hat_chain)
    hat_gap = 0.5 * sum(
        abs(hat_dp.get(k, 0.0) - hat_chain.get(k, 0.0)) for k in keys
    )
    return JointLawReport(window, tv, hat_gap, int_to_word(anchor_int, L))


# ---------------------------------------------------------------------------
# Generator-gap identity and anchor choice


@dataclass(frozen=True)
class GeneratorGapReport:
    n_start: int
    anchor: Word
    mc_estimate: float
    stderr: float
    exact_value: float
    tolerance: float
    verdict: str  # "match" | "mismatch"


def expected_generator_gap(engine: CouplingEngine, n_start: int, anchor) -> float:
    """Exact E|R_D - R_D(hat)| for a coupled run over [n_start; 0]:
    the metric-table integral against the stationary context law."""
    p = -n_start + 1
    engine = engine.extend(p)
    anchor_int = word_to_int(as_word(anchor))
    return float(np.sum(engine.pi * engine.tables[p].values[:, anchor_int]))


def generator_error_check(
    engine: CouplingEngine,
    n_start: int,
    anchor,
    trials: int,
    seed: int,
) -> GeneratorGapReport:
    """Monte Carlo the coupled-run generator gap and compare with the
    exact integral; tolerance 3*stderr + one truncation allowance."""
    p = -n_start + 1
    engine = engine.extend(p)
    anchor_int = word_to_int(as_word(anchor))
    rng = stream_rng(seed, "generator-gap", engine.kernel.label, f"N{n_start}")
    ctx_true = rng.choice(engine.pi.size, p=engine.pi, size=trials)
    ctx_hat = np.full(trials, anchor_int, dtype=np.int64)
    w = rng.random((trials, p))
    _, end_true, end_hat = coupled_run(engine, n_start, ctx_true, ctx_hat, w)
    gaps = np.abs(
        engine.generator_values(end_true) - engine.generator_values(end_hat)
    )
    mc = float(gaps.mean())
    stderr = float(gaps.std(ddof=1) / np.sqrt(trials))
    exact = expected_generator_gap(engine, n_start, anchor)
    tol = 3.0 * stderr + 3.0 ** (-engine.config.depth)
    verdict = "match" if abs(mc - exact) <= tol else "mismatch"
    return GeneratorGapReport(
        n_start, int_to_word(anchor_int, engine.length), mc, stderr, exact, tol, verdict
    )


def choose_anchor(
    engine: CouplingEngine,
    n_start: int,
    delta: float,
    candidates: int | None = None,
) -> tuple[Word, float]:
    """Argmin anchor for the exact generator-gap integral over [n_start; 0].

    All 2^L words are scanned (L is capped small); `candidates` may
    restrict the scan to the highest-probability words.  Raises
    AnchorSelectionError when no candidate achieves the bound."""
    p = -n_start + 1
    engine = engine.extend(p)
    integrals = engine.anchor_integrals(p)
    order = np.argsort(integrals, kind="stable")
    if candidates is not None:
        by_mass = np.argsort(-engine.pi, kind="stable")[:candidates]
        allowed = np.zeros(integrals.size, dtype=bool)
        allowed[by_mass] = True
        order = [v for v in order if allowed[v]]
    best = int(order[0])
    value = float(integrals[best])
    if value >= delta:
        raise AnchorSelectionError(
            f"best anchor integral {value:.6g} >= delta {delta:.6g} at "
            f"window start {n_start}; extend the window (larger |N|)"
        )
    return int_to_word(best, engine.length), value


# ---------------------------------------------------------------------------
# Block stitching


@dataclass(frozen=True)
class StitchRow:
    j: int
    n_j: int
    m_j: int
    k_j: int
    delta_j: float
    alpha_used: float
    anchor: Word
    exceed_freq: float
    stderr: float
    verdict: str  # "ok" | "exceeded"


@dataclass(frozen=True)
class StitchReport:
    rows: list[StitchRow]
    audit: AuditReport
    trials: int

    @property
    def passed(self) -> bool:
        return all(r.verdict == "ok" for r in self.rows) and self.audit.passed


def _plan_block(
    engine: CouplingEngine, threshold: float, p_min: int, p_cap: int = 200
):
    """Smallest window depth p >= p_min with alpha_p below the threshold
    and a feasible anchor; returns (engine, p, alpha_p, anchor, value)."""
    p = p_min
    while True:
        engine = engine.extend(p)
        a = engine.alpha(p)
        if a < threshold:
            try:
                anchor, value = choose_anchor(engine, -(p - 1), threshold)
                return engine, p, a, anchor, value
            except AnchorSelectionError:
                pass
        p += 1
        if p > p_cap:
            raise RuntimeError(
                f"coupling-distance threshold {threshold:.3g} not reached "
                f"within depth {p_cap}; need deeper metric tables"
            )


def stitch_blocks(
    kernel: Kernel,
    deltas: tuple[float, ...],
    trials: int,
    seed: int,
    config: GeneratorConfig = GeneratorConfig(),
) -> StitchReport:
    """Build the stitched innovation sequence over J+1 shifted blocks
    and verify, per block, that the recovered truncated generator stays
    within the tolerance schedule.

    Block j covers times [M_{j+1}; M_j - 1] with M_0 = 1 and
    M_{j+1} = M_j + N_j - 1.  Its window start N_j is chosen so the
    depth-(|N_j|+1) coupling distance (and the chosen anchor's exact
    integral) beat delta_0 for j = 0 and 3^(K_j - M_j + 1) * delta_j / 2
    for j >= 1, where K_j = M_j - L pins the exact context window.
    Estimates P(|S_j - R_D| > delta_j) per block and audits the pooled
    stitched innovations.
    """
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("tolerance schedule must be strictly decreasing")
    if 3.0 ** (-config.depth) > deltas[-1]:
        raise ValueError(
            "generator depth too small for the final tolerance: need "
            "3^-D <= delta_J"
        )
    n_blocks = len(deltas)
    engine = CouplingEngine.build(kernel, 1, config)
    L = engine.length

    # Deterministic planning phase.
    m = [1]
    n_starts, k_cuts, alphas, anchors = [], [], [], []
    for j, delta in enumerate(deltas):
        k_j = m[j] - L
        if j == 0:
            threshold = delta
        else:
            threshold = 3.0 ** (k_j - m[j] + 1) * delta / 2.0
        engine, p, a, anchor, value = _plan_block(engine, threshold, p_min=L)
        n_j = -(p - 1)
        n_starts.append(n_j)
        k_cuts.append(k_j)
        alphas.append(a)
        anchors.append(anchor)
        m.append(m[j] + n_j - 1)

    # Simulation phase: one pass over absolute times M_{J+1} .. 0.
    t_min = m[n_blocks]
    steps = -t_min + 1
    rng = stream_rng(seed, "stitch", kernel.label, f"J{n_blocks - 1}")
    ctx_true = np.array(
        rng.choice(engine.pi.size, p=engine.pi, size=trials), dtype=np.int64
    )
    w = rng.random((trials, steps))
    u_all = np.empty((trials, steps))
    hat_before = np.empty((steps, trials), dtype=np.int64)  # hat ctx up to t-1
    true_before = np.empty((steps + 1, trials), dtype=np.int64)
    block_of = np.empty(steps, dtype=np.int64)
    ctx_hat = None
    for t in range(t_min, 1):
        idx = t - t_min
        j = next(i for i in range(n_blocks) if m[i + 1] <= t <= m[i] - 1)
        block_of[idx] = j
        if t == m[j + 1]:  # block start: hat chain restarts from anchor
            ctx_hat = np.full(trials, word_to_int(anchors[j]), dtype=np.int64)
        true_before[idx] = ctx_true
        hat_before[idx] = ctx_hat
        depth = m[j] - t
        lam = engine.orientations(depth, ctx_true, ctx_hat)
        wt = w[:, idx]
        ut = np.where(lam == -1, wt, 1.0 - wt)
        x_true = (wt > _step_prob0(kernel, ctx_true)).astype(np.int64)
        x_hat = (ut > _step_prob0(kernel, ctx_hat)).astype(np.int64)
        ctx_true = (ctx_true << 1) | x_true
        ctx_hat = (ctx_hat << 1) | x_hat
        u_all[:, idx] = ut
    true_before[steps] = ctx_true
    r_true = engine.generator_values(ctx_true)

    # Per-block recovery of the truncated generator.
    rows = []
    for j, delta in enumerate(deltas):
        if j == 0:
            # Replay from the true context before the block: exact round trip.
            seed_ctx = true_before[m[1] - t_min]
        else:
            # Replay from block j's hat window [K_j; M_j - 1].
            seed_ctx = hat_before[m[j] - t_min] & ((1 << L) - 1)
        ctx_replay = np.array(seed_ctx, dtype=np.int64)
        start = m[j] if j else m[1]
        for t in range(start, 1):
            idx = t - t_min
            i = int(block_of[idx])
            depth = m[i] - t
            lam = engine.orientations(depth, ctx_replay, hat_before[idx])
            ut = u_all[:, idx]
            wt = np.where(lam == -1, ut, 1.0 - ut)
            x = (wt > _step_prob0(kernel, ctx_replay)).astype(np.int64)
            ctx_replay = (ctx_replay << 1) | x
        s_j = engine.generator_values(ctx_replay)
        exceed = np.abs(s_j - r_true) > delta
        freq = float(exceed.mean())
        stderr = float(np.sqrt(freq * (1.0 - freq) / trials))
        verdict = "ok" if freq <= delta + 3.0 * stderr else "exceeded"
        rows.append(
            StitchRow(
                j, n_starts[j], m[j], k_cuts[j], delta, alphas[j],
                anchors[j], freq, stderr, verdict,
            )
        )

    audit = innovation_audit(u_all.ravel())
    return StitchReport(rows, audit, trials)
