"""boostlab: weak-to-strong boosting with round-query trade-offs.

Core pieces: a classic fixed-rate AdaBoost driver, a bagging-based parallel
booster, an adversarial staged weak learner with a coin-game loss floor, and
a verification toolkit (max-divergence, advanced composition,
epsilon-approximation, exact coin-game errors).
"""

from .adaboost import (
    BoostFailure,
    BoostSuccess,
    BoostTrace,
    SnapshotPolicy,
    VotingClassifier,
    check_z_decay,
    exponential_loss,
    learning_rate,
    min_margin,
    run_adaboost,
    update_distribution,
)
from .adversary import (
    AdversarialInstance,
    AdversaryConfig,
    AdversaryOracle,
    QueryKind,
    answer_round,
    bayes_optimal_loss,
    build_instance,
    classify_query,
    target_distribution,
)
from .analysis import (
    ApproxReport,
    CoinGameResult,
    CompositionResult,
    DivergenceReport,
    advanced_composition,
    breiman_bound,
    check_trace_divergence,
    coin_game_simulate,
    coin_majority_error,
    eps_approximation_check,
    max_divergence,
)
from .core import (
    Hypothesis,
    HypothesisClass,
    LabeledDomain,
    Stump,
    TrainingSet,
    WeightDistribution,
    advantage,
    empirical_loss,
    generalized_spreadness,
    margin,
    margins_at,
    spreadness,
)
from .errors import (
    BoostlabError,
    BudgetError,
    ConfigError,
    InvalidInputError,
    UnsupportedTraceError,
)
from .parallel_boost import (
    BaggingBlock,
    BlockFailure,
    ParallelFailure,
    ParallelParams,
    ParallelSuccess,
    bagging_round,
    boosting_block,
    default_parameters,
    run_parallel_boost,
)
from .weak_learners import (
    AdvantageViolation,
    ErmOracle,
    OracleFailure,
    QueryLedger,
    StumpOracle,
    WeakLearnerOracle,
    erm_finite,
    train_stump,
    validated_query,
)

__version__ = "0.1.0"
