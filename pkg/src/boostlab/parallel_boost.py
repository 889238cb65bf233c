"""Round-query trade-off boosting: bagging blocks alternating with boosting.

Each interaction round draws Q multisets of size n from the block-start
distribution, queries the weak learner once per multiset in parallel, and
then runs up to R boosting steps against the pooled answers.  Total
interaction rounds come to ceil(K/R) instead of K, at the cost of Q queries
per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adaboost import (
    BoostTrace,
    SnapshotPolicy,
    SNAPSHOT_ALL,
    VotingClassifier,
    _BoostState,
    learning_rate,
)
from .core import (
    LOSS_TOL,
    Hypothesis,
    LabeledDomain,
    TrainingSet,
    WeightDistribution,
    empirical_loss,
    stable_ceil,
)
from .errors import InvalidInputError
from .seeding import substream
from .weak_learners import (
    AdvantageViolation,
    Hypothesis as _Hypothesis,  # noqa: F401  (re-export convenience)
    OracleFailure,
    QueryLedger,
    WeakLearnerOracle,
    validated_query,
)

# Hard default cap on Q: the theoretical formula is existence-level and
# overflows any realistic budget almost immediately.
DEFAULT_Q_CAP = 4096


@dataclass(frozen=True)
class ParallelParams:
    """Knobs of the trade-off booster.

    ``steps_per_block`` (R) must satisfy 2 * gamma * R <= 1.
    ``theory_scale_exceeded`` flags that the queries-per-block formula
    overflowed the configured cap and was truncated.
    ``identity_subsample`` replaces each multiset draw by the block-start
    distribution itself (degeneration testing only).
    """

    gamma: float
    steps_per_block: int
    subsample_size: int
    queries_per_block: int
    total_steps: int
    rate: float
    theory_constant: float = 1.0
    theory_scale_exceeded: bool = False
    identity_subsample: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma < 0.5:
            raise InvalidInputError("gamma must lie in (0, 1/2)")
        if self.steps_per_block < 1:
            raise InvalidInputError("steps_per_block must be >= 1")
        if 2.0 * self.gamma * self.steps_per_block > 1.0 + 1e-12:
            raise InvalidInputError("steps_per_block must satisfy 2*gamma*R <= 1")
        if self.subsample_size < 1 or self.queries_per_block < 1 or self.total_steps < 1:
            raise InvalidInputError("n, Q, K must all be >= 1")

    @property
    def block_count(self) -> int:
        return math.ceil(self.total_steps / self.steps_per_block)


def default_parameters(
    m: int,
    vc_dim: int,
    gamma: float,
    steps_per_block: int,
    theory_constant: float,
    q_cap: int = DEFAULT_Q_CAP,
    k_cap: int | None = None,
) -> ParallelParams:
    """Parameters from the theory formulas.

    K = ceil(16 ln(m) / gamma^2), n = ceil(c' d / gamma^2), and
    Q = ceil(exp(16 c' d R^2) ln(1/gamma)) evaluated in log-space and capped
    at ``q_cap`` (with the theory-scale flag set when the cap binds).
    """
    if m < 2 or vc_dim < 1:
        raise InvalidInputError("need m >= 2 and vc_dim >= 1")
    if not 0.0 < gamma < 0.5:
        raise InvalidInputError("gamma must lie in (0, 1/2)")
    if steps_per_block < 1 or 2.0 * gamma * steps_per_block > 1.0 + 1e-12:
        raise InvalidInputError("steps_per_block must satisfy 1 <= R <= 1/(2*gamma)")
    k = stable_ceil(16.0 * math.log(m) / (gamma * gamma))
    if k_cap is not None:
        k = min(k, k_cap)
    n = stable_ceil(theory_constant * vc_dim / (gamma * gamma))
    log_q = 16.0 * theory_constant * vc_dim * steps_per_block**2 + math.log(
        math.log(1.0 / gamma)
    )
    exceeded = log_q > math.log(q_cap)
    q = q_cap if exceeded else stable_ceil(math.exp(log_q))
    return ParallelParams(
        gamma=gamma,
        steps_per_block=steps_per_block,
        subsample_size=max(n, 1),
        queries_per_block=max(q, 1),
        total_steps=max(k, 1),
        rate=learning_rate(gamma),
        theory_constant=theory_constant,
        theory_scale_exceeded=exceeded,
    )


@dataclass(eq=False)
class BaggingBlock:
    """One bagging step: Q multisets, their uniform distributions, pooled answers."""

    block_index: int
    multisets: list[np.ndarray | None]
    distributions: list[WeightDistribution]
    hypotheses: list[Hypothesis]
    dropped: list[tuple[int, str]] = field(default_factory=list)


def bagging_round(
    dist: WeightDistribution,
    params: ParallelParams,
    oracle: WeakLearnerOracle,
    seed: int,
    block_index: int,
    domain: LabeledDomain,
    ledger: QueryLedger | None = None,
) -> BaggingBlock:
    """Draw Q multisets of size n i.i.d. from ``dist`` and query each one.

    Slot q draws from the substream (seed, "bag", block_index, q), so the
    multisets do not depend on the order the Q draws are scheduled in.
    Answers that fail validation at the oracle's advertised gamma are
    dropped from the pool and recorded.
    """
    multisets: list[np.ndarray | None] = []
    dists: list[WeightDistribution] = []
    hypotheses: list[Hypothesis] = []
    dropped: list[tuple[int, str]] = []
    n_slots = len(dist)
    for q in range(params.queries_per_block):
        if params.identity_subsample:
            multisets.append(None)
            query_dist = dist
        else:
            rng = substream(seed, "bag", block_index, q)
            draws = rng.choice(n_slots, size=params.subsample_size, replace=True, p=dist.weights)
            counts = np.bincount(draws, minlength=n_slots).astype(np.float64)
            query_dist = WeightDistribution.normalized(dist.indices, counts)
            multisets.append(dist.indices[draws])
        dists.append(query_dist)
        answer = validated_query(oracle, query_dist, params.gamma, domain, ledger)
        if isinstance(answer, OracleFailure):
            dropped.append((q, "failure"))
        elif isinstance(answer, AdvantageViolation):
            dropped.append((q, "violation"))
        else:
            hypotheses.append(answer)
    return BaggingBlock(block_index, multisets, dists, hypotheses, dropped)


@dataclass(frozen=True)
class BlockFailure:
    """No pooled hypothesis reached loss <= 1/2 - gamma/4 at this step."""

    step_index: int
    best_loss: float


def _best_member(
    hypotheses: list[Hypothesis], dist: WeightDistribution, domain: LabeledDomain
) -> tuple[int, float]:
    best_i, best_loss = -1, math.inf
    for i, h in enumerate(hypotheses):
        loss = empirical_loss(h, dist, domain)
        if loss < best_loss:
            best_i, best_loss = i, loss
    return best_i, best_loss


def boosting_block(
    hypotheses: list[Hypothesis],
    dist: WeightDistribution,
    params: ParallelParams,
    domain: LabeledDomain,
    steps: int,
    state: _BoostState | None = None,
) -> tuple[WeightDistribution, list[Hypothesis]] | BlockFailure:
    """Up to ``steps`` boosting steps against a fixed pool.

    Each step takes the minimum-loss pool member (ties to the lowest index),
    requires loss <= 1/2 - gamma/4, and applies the multiplicative update.
    When a shared ``state`` is given the steps are recorded on its trace.
    """
    if steps > params.steps_per_block:
        raise InvalidInputError("steps must not exceed steps_per_block")
    if state is None:
        state = _BoostState(
            domain,
            TrainingSet(dist.indices),
            params.gamma,
            params.gamma / 4.0,
            params.rate,
            steps,
            SNAPSHOT_ALL,
            initial_dist=dist,
        )
    chosen: list[Hypothesis] = []
    threshold = 0.5 - params.gamma / 4.0
    for step in range(steps):
        best_i, best_loss = _best_member(hypotheses, state.dist, domain)
        if best_i < 0 or best_loss > threshold + LOSS_TOL:
            return BlockFailure(step, best_loss)
        h = hypotheses[best_i]
        state.accept(h, best_loss)
        chosen.append(h)
    return state.dist, chosen


@dataclass(frozen=True, eq=False)
class ParallelSuccess:
    classifier: VotingClassifier
    trace: BoostTrace
    ledger: QueryLedger


@dataclass(frozen=True, eq=False)
class ParallelFailure:
    block_index: int
    step_index: int
    best_loss: float
    trace: BoostTrace
    ledger: QueryLedger


def run_parallel_boost(
    domain: LabeledDomain,
    training: TrainingSet,
    oracle: WeakLearnerOracle,
    params: ParallelParams,
    seed: int,
    snapshot_policy: SnapshotPolicy = SNAPSHOT_ALL,
    ledger: QueryLedger | None = None,
) -> ParallelSuccess | ParallelFailure:
    """Alternate bagging and boosting blocks for ceil(K/R) interaction rounds.

    The last block runs min((k+1)R, K) - kR steps; the final classifier is a
    uniform vote over all K chosen hypotheses.  The ledger ends up with
    p = ceil(K/R) rounds of exactly Q queries each.
    """
    training.validate_for(domain)
    if ledger is None:
        ledger = QueryLedger(
            round_budget=params.block_count, per_round_budget=params.queries_per_block
        )
    state = _BoostState(
        domain,
        training,
        params.gamma,
        params.gamma / 4.0,
        params.rate,
        params.total_steps,
        snapshot_policy,
    )
    k_total, r_per = params.total_steps, params.steps_per_block
    for k in range(params.block_count):
        oracle.advance_round()
        ledger.begin_round()
        block = bagging_round(state.dist, params, oracle, seed, k, domain, ledger)
        steps = min((k + 1) * r_per, k_total) - k * r_per
        outcome = boosting_block(block.hypotheses, state.dist, params, domain, steps, state)
        if isinstance(outcome, BlockFailure):
            return ParallelFailure(k, outcome.step_index, outcome.best_loss, state.trace, ledger)
    return ParallelSuccess(VotingClassifier(tuple(state.trace.chosen)), state.trace, ledger)
