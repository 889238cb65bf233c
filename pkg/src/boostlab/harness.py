"""Experiment orchestration: seeded runs, sweeps, CSV persistence, configs.

Configs are flat key-value INI files with one section per experiment kind.
Every run is deterministic given (config, seed): repetition i draws its seed
from the substream (master_seed, "rep", i), so adding repetitions never
perturbs earlier ones, and CSV output is byte-identical across invocations
(wall-clock durations are reported in the human-readable table only).
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaboost import (
    BoostFailure,
    BoostSuccess,
    SnapshotPolicy,
    run_adaboost,
)
from .adversary import (
    AdversaryConfig,
    AdversaryOracle,
    bayes_optimal_loss,
    build_instance,
)
from .analysis import (
    advanced_composition,
    coin_game_simulate,
    coin_majority_error,
    eps_approximation_check,
)
from .core import LabeledDomain, TrainingSet, WeightDistribution, margins_at, stable_ceil
from .datasets import diagonal_task, random_hypothesis_class, random_labels_task
from .errors import ConfigError, InvalidInputError
from .parallel_boost import (
    ParallelFailure,
    ParallelParams,
    ParallelSuccess,
    default_parameters,
    run_parallel_boost,
)
from .seeding import derive_seed, substream
from .weak_learners import ErmOracle, QueryLedger, StumpOracle

OUTPUT_ENV_VAR = "BOOSTLAB_OUT"

EXPERIMENT_KINDS = ("adaboost", "pboost", "adversary", "coingame", "sweep", "compose", "approx")


def _fmt(value) -> str:
    """CSV cell formatting; floats carry 12 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return "" if value is None else str(value)


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class _Key:
    parse: object
    default: object
    check: object = None
    help: str = ""


def _pos_int(lo=1, hi=None):
    def check(v):
        return v >= lo and (hi is None or v <= hi)

    return check


def _open_unit(v):
    return 0.0 < v < 1.0


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in str(text).split(",") if str(part).strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in str(text).split(",") if str(part).strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_COMMON = {
    "seed": _Key(int, 0, lambda v: 0 <= v < 2**64),
    "reps": _Key(int, 1, _pos_int()),
    "out": _Key(str, None),
    "snapshots": _Key(str, "all", lambda v: v in ("all", "window", "none")),
}

_BOOST_DATA = {
    "m": _Key(int, 100, _pos_int(lo=2)),
    "gamma": _Key(float, 0.2, lambda v: 0.0 < v < 0.5),
    "oracle": _Key(str, "stump", lambda v: v in ("stump", "erm")),
    "class_size": _Key(int, 16, _pos_int()),
    "margin": _Key(float, 0.05, lambda v: 0.0 <= v < 0.45),
}

_SCHEMAS: dict[str, dict[str, _Key]] = {
    "adaboost": {
        **_COMMON,
        **_BOOST_DATA,
        "k": _Key(int, 0, _pos_int(lo=0), help="0 means the 16 ln(m)/gamma^2 formula"),
        "k_cap": _Key(int, 2000, _pos_int()),
        "accept_gamma": _Key(float, -1.0, lambda v: v == -1.0 or 0.0 <= v < 0.5,
                             help="-1 means gamma/4"),
    },
    "pboost": {
        **_COMMON,
        **_BOOST_DATA,
        "r": _Key(int, 1, _pos_int()),
        "d": _Key(int, 4, _pos_int()),
        "c_prime": _Key(float, 0.1, lambda v: v > 0.0),
        "q": _Key(int, 0, _pos_int(lo=0), help="0 means the theory formula with q_cap"),
        "q_cap": _Key(int, 64, _pos_int()),
        "k": _Key(int, 0, _pos_int(lo=0)),
        "k_cap": _Key(int, 2000, _pos_int()),
        "n": _Key(int, 0, _pos_int(lo=0), help="0 means ceil(c_prime*d/gamma^2)"),
        "identity": _Key(_bool, False),
    },
    "adversary": {
        **_COMMON,
        "m": _Key(int, 500, _pos_int(lo=2)),
        "gamma": _Key(float, 0.05, lambda v: 0.0 < v < 0.5),
        "p": _Key(int, 20, _pos_int()),
        "d": _Key(int, 6, _pos_int()),
        "c_bias": _Key(float, 7.0, lambda v: v > 0.0),
        "alpha_thr": _Key(float, 2.0, lambda v: v > 0.0),
        "stages_per_round": _Key(int, 1, _pos_int()),
    },
    "coingame": {
        **_COMMON,
        "n_values": _Key(_int_list, (25, 100, 400, 1600), lambda v: all(x >= 1 for x in v)),
        "eps_values": _Key(_float_list, (0.05, 0.1, 0.2), lambda v: all(0 <= x <= 1 for x in v)),
        "trials": _Key(int, 100_000, _pos_int()),
        "rule": _Key(str, "majority", lambda v: v in ("majority", "first")),
    },
    "compose": {
        **_COMMON,
        "eps_values": _Key(_float_list, (0.05, 0.1, 0.2, 0.4), lambda v: all(x >= 0 for x in v)),
        "n_values": _Key(_int_list, (1, 10, 100, 1000), lambda v: all(x >= 1 for x in v)),
        "delta": _Key(float, 0.0, lambda v: 0.0 <= v < 1.0),
        "delta_prime": _Key(float, 0.25, _open_unit),
    },
    "approx": {
        **_COMMON,
        "class_log2": _Key(int, 8, _pos_int(lo=1, hi=16)),
        "points": _Key(int, 64, _pos_int(lo=2)),
        "eps_values": _Key(_float_list, (0.1,), lambda v: all(0 < x < 1 for x in v)),
        "delta": _Key(float, 0.1, _open_unit),
        "trials": _Key(int, 200, _pos_int()),
        "n_start": _Key(int, 1, _pos_int()),
        "n_limit": _Key(int, 1 << 15, _pos_int()),
        "pass_target": _Key(float, 0.9, _open_unit),
    },
}

_SCHEMAS["sweep"] = {
    **{k: v for k, v in _SCHEMAS["pboost"].items() if k not in ("r", "q")},
    "r_values": _Key(_int_list, (1, 2), lambda v: all(x >= 1 for x in v)),
    "success_target": _Key(float, 0.9, _open_unit),
    "q_start": _Key(int, 1, _pos_int()),
    "q_limit": _Key(int, 256, _pos_int()),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in _SCHEMAS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")

    def __getitem__(self, key):
        return self.params[key]

    @property
    def seed(self) -> int:
        return self.params["seed"]

    @property
    def reps(self) -> int:
        return self.params["reps"]

    def out_dir(self) -> Path:
        out = self.params.get("out")
        if not out:
            out = os.environ.get(OUTPUT_ENV_VAR, "runs")
        return Path(out)

    def digest(self) -> str:
        return hashlib.sha1(serialize_config(self).encode()).hexdigest()[:16]


def _validate(kind: str, raw: dict) -> dict:
    if kind not in _SCHEMAS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    schema = _SCHEMAS[kind]
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) for {kind}: {sorted(unknown)}")
    params = {}
    for key, spec in schema.items():
        if key in raw:
            try:
                value = spec.parse(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {kind}.{key}: {raw[key]!r} ({exc})") from exc
        else:
            value = spec.default
        if value is not None and spec.check is not None and not spec.check(value):
            raise ConfigError(f"value out of range for {kind}.{key}: {value!r}")
        params[key] = value
    return params


def make_config(kind: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig(kind, _validate(kind, overrides))


def parse_config(path: str | Path, kind: str, overrides: dict | None = None) -> ExperimentConfig:
    """Load the [kind] section of an INI file; CLI overrides win."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if not parser.has_section(kind):
        raise ConfigError(f"config file has no [{kind}] section")
    raw = dict(parser.items(kind))
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(kind, _validate(kind, raw))


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical INI text; parse(serialize(cfg)) == cfg."""
    lines = [f"[{cfg.kind}]"]
    for key in _SCHEMAS[cfg.kind]:
        value = cfg.params[key]
        if value is None:
            continue
        if isinstance(value, tuple):
            text = ",".join(_fmt(v) for v in value)
        else:
            text = _fmt(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Records and CSV output


@dataclass(eq=False)
class RunRecord:
    """One (config, seed) run: per-round metrics plus a summary row."""

    kind: str
    config_digest: str
    seed: int
    outcome: str
    rounds: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    duration_s: float = 0.0

    @property
    def failed(self) -> bool:
        return self.outcome.startswith("failed")


_ROUND_COLUMNS = ["seed", "round", "queries", "loss", "log_z", "min_margin_so_far"]

_SUMMARY_COLUMNS = {
    "adaboost": [
        "seed", "outcome", "rounds_used", "total_queries",
        "min_margin", "train_error", "holdout_error",
    ],
    "pboost": [
        "seed", "outcome", "rounds_used", "queries_per_round", "total_queries",
        "failed_block", "failed_step", "min_margin", "train_error", "holdout_error",
    ],
    "adversary": [
        "seed", "outcome", "rounds_used", "final_loss", "bayes_floor", "gap",
        "stages_seen", "unseen_fraction", "leaks", "violations",
    ],
    "coingame": ["n", "eps", "closed_form", "empirical", "std_error", "within_3se"],
    "compose": ["eps", "delta", "n", "delta_prime", "eps_hat", "delta_hat"],
    "approx": ["eps", "found_n", "pass_rate"],
    "sweep": [
        "r", "seed", "rounds_used", "queries_per_round", "min_q",
        "success_rate", "final_loss",
    ],
}


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])


def write_outputs(cfg: ExperimentConfig, records: list[RunRecord]) -> list[Path]:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    summary_path = out / f"{cfg.kind}_summary.csv"
    _write_csv(summary_path, _SUMMARY_COLUMNS[cfg.kind], [r.summary for r in records])
    paths.append(summary_path)
    round_rows = [row for rec in records for row in rec.rounds]
    if any(rec.rounds for rec in records):
        run_path = out / f"{cfg.kind}_run.csv"
        _write_csv(run_path, _ROUND_COLUMNS, round_rows)
        paths.append(run_path)
    return paths


def report(records: list[RunRecord], round_csv: io.TextIOBase | None = None) -> str:
    """Fixed-column human-readable table plus a failure-rate footer.

    Optionally streams the per-round rows as CSV to ``round_csv`` for
    external plotting.
    """
    lines = [f"{'kind':<10} {'seed':>20} {'outcome':<16} {'duration_s':>10}"]
    for rec in records:
        lines.append(
            f"{rec.kind:<10} {rec.seed:>20} {rec.outcome:<16} {rec.duration_s:>10.3f}"
        )
    total = len(records)
    failed = sum(1 for r in records if r.failed)
    rate = failed / total if total else 0.0
    lines.append(f"runs: {total}  failed: {failed}  failure_rate: {_fmt(rate)}")
    if round_csv is not None:
        writer = csv.writer(round_csv, lineterminator="\n")
        writer.writerow(_ROUND_COLUMNS)
        for rec in records:
            for row in rec.rounds:
                writer.writerow([_fmt(row.get(col)) for col in _ROUND_COLUMNS])
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Experiment bodies


def _snapshot_policy(cfg: ExperimentConfig, window: int = 8) -> SnapshotPolicy:
    mode = cfg.params.get("snapshots", "all")
    return SnapshotPolicy(mode, window) if mode == "window" else SnapshotPolicy(mode)


def _boost_task(cfg: ExperimentConfig, rep_seed: int):
    """Dataset + oracle shared by the adaboost and pboost kinds."""
    m = cfg["m"]
    if cfg["oracle"] == "stump":
        domain, training = diagonal_task(m, rep_seed, margin=cfg["margin"])
        oracle = StumpOracle(domain)
    else:
        domain, training = random_labels_task(m, rep_seed)
        cls = random_hypothesis_class(
            domain, cfg["class_size"], rep_seed, include_concept=True
        )
        oracle = ErmOracle(cls, domain)
    return domain, training, oracle


def _round_rows(trace, domain, training, seed: int, queries_per_round: list[int]) -> list[dict]:
    rows = []
    cum_votes = np.zeros(domain.size, dtype=np.int64)
    idx = training.indices
    for r, rec in enumerate(trace.records):
        cum_votes += rec.hypothesis.evaluate(domain)
        margin_so_far = float(margins_at(cum_votes / (r + 1), idx, domain).min())
        rows.append(
            {
                "seed": seed,
                "round": r,
                "queries": queries_per_round[r] if r < len(queries_per_round) else 0,
                "loss": rec.loss,
                "log_z": rec.log_z,
                "min_margin_so_far": margin_so_far,
            }
        )
    return rows


def _holdout_indices(domain: LabeledDomain, training: TrainingSet) -> np.ndarray:
    mask = np.ones(domain.size, dtype=bool)
    mask[training.unique_points()] = False
    return np.flatnonzero(mask)


def _adaboost_rounds(cfg: ExperimentConfig) -> int:
    if cfg["k"]:
        return cfg["k"]
    formula = stable_ceil(16.0 * math.log(cfg["m"]) / cfg["gamma"] ** 2)
    return min(formula, cfg["k_cap"])


def _exp_adaboost(cfg: ExperimentConfig, rep: int) -> RunRecord:
    rep_seed = derive_seed(cfg.seed, "rep", rep)
    domain, training, oracle = _boost_task(cfg, rep_seed)
    rounds = _adaboost_rounds(cfg)
    accept = None if cfg["accept_gamma"] == -1.0 else cfg["accept_gamma"]
    ledger = QueryLedger()
    start = time.perf_counter()
    result = run_adaboost(
        domain, training, oracle, cfg["gamma"], rounds,
        accept_gamma=accept, snapshot_policy=_snapshot_policy(cfg, 2), ledger=ledger,
    )
    duration = time.perf_counter() - start
    record = RunRecord(cfg.kind, cfg.digest(), rep_seed, "success", duration_s=duration)
    trace = result.trace
    if isinstance(result, BoostFailure):
        record.outcome = f"failed(round={result.round_index})"
        summary_extra = {"min_margin": None, "train_error": None, "holdout_error": None}
    else:
        vc = result.classifier
        holdout = _holdout_indices(domain, training)
        summary_extra = {
            "min_margin": float(
                margins_at(vc.votes(domain), training.indices, domain).min()
            ),
            "train_error": vc.error_rate(domain, training.indices),
            "holdout_error": vc.error_rate(domain, holdout) if holdout.size else None,
        }
    record.rounds = _round_rows(trace, domain, training, rep_seed, ledger.per_round_counts())
    record.summary = {
        "seed": rep_seed,
        "outcome": record.outcome,
        "rounds_used": ledger.rounds_used,
        "total_queries": ledger.total_queries,
        **summary_extra,
    }
    return record


def _pboost_params(cfg: ExperimentConfig) -> ParallelParams:
    params = default_parameters(
        cfg["m"], cfg["d"], cfg["gamma"], cfg["r"], cfg["c_prime"],
        q_cap=cfg["q_cap"], k_cap=cfg["k_cap"],
    )
    overrides = {}
    if cfg["q"]:
        overrides["queries_per_block"] = cfg["q"]
        overrides["theory_scale_exceeded"] = False
    if cfg["k"]:
        overrides["total_steps"] = cfg["k"]
    if cfg["n"]:
        overrides["subsample_size"] = cfg["n"]
    if cfg["identity"]:
        overrides["identity_subsample"] = True
    if overrides:
        params = ParallelParams(
            gamma=params.gamma,
            steps_per_block=params.steps_per_block,
            subsample_size=overrides.get("subsample_size", params.subsample_size),
            queries_per_block=overrides.get("queries_per_block", params.queries_per_block),
            total_steps=overrides.get("total_steps", params.total_steps),
            rate=params.rate,
            theory_constant=params.theory_constant,
            theory_scale_exceeded=overrides.get(
                "theory_scale_exceeded", params.theory_scale_exceeded
            ),
            identity_subsample=overrides.get("identity_subsample", params.identity_subsample),
        )
    return params


def _exp_pboost(cfg: ExperimentConfig, rep: int) -> RunRecord:
    rep_seed = derive_seed(cfg.seed, "rep", rep)
    domain, training, oracle = _boost_task(cfg, rep_seed)
    params = _pboost_params(cfg)
    start = time.perf_counter()
    result = run_parallel_boost(
        domain, training, oracle, params, rep_seed,
        snapshot_policy=_snapshot_policy(cfg, params.steps_per_block + 1),
    )
    duration = time.perf_counter() - start
    record = RunRecord(cfg.kind, cfg.digest(), rep_seed, "success", duration_s=duration)
    ledger = result.ledger
    failed_block = failed_step = None
    if isinstance(result, ParallelFailure):
        record.outcome = f"failed(block={result.block_index},step={result.step_index})"
        failed_block, failed_step = result.block_index, result.step_index
        summary_extra = {"min_margin": None, "train_error": None, "holdout_error": None}
    else:
        vc = result.classifier
        holdout = _holdout_indices(domain, training)
        summary_extra = {
            "min_margin": float(
                margins_at(vc.votes(domain), training.indices, domain).min()
            ),
            "train_error": vc.error_rate(domain, training.indices),
            "holdout_error": vc.error_rate(domain, holdout) if holdout.size else None,
        }
    record.rounds = _round_rows(
        result.trace, domain, training, rep_seed,
        _per_step_queries(params, result.trace.round_count),
    )
    record.summary = {
        "seed": rep_seed,
        "outcome": record.outcome,
        "rounds_used": ledger.rounds_used,
        "queries_per_round": params.queries_per_block,
        "total_queries": ledger.total_queries,
        "failed_block": failed_block,
        "failed_step": failed_step,
        **summary_extra,
    }
    return record


def _per_step_queries(params: ParallelParams, total_rounds: int) -> list[int]:
    """Per boosting step: queries charged to its block (Q on the first step, 0 after)."""
    return [
        params.queries_per_block if r % params.steps_per_block == 0 else 0
        for r in range(total_rounds)
    ]


def _exp_adversary(cfg: ExperimentConfig, rep: int) -> RunRecord:
    rep_seed = derive_seed(cfg.seed, "rep", rep)
    adv_cfg = AdversaryConfig(
        m=cfg["m"], vc_dim=cfg["d"], gamma=cfg["gamma"], rounds=cfg["p"],
        stages_per_round=cfg["stages_per_round"], bias_multiplier=cfg["c_bias"],
        spread_threshold=cfg["alpha_thr"], seed=rep_seed,
    )
    start = time.perf_counter()
    instance = build_instance(adv_cfg)
    sample_rng = substream(rep_seed, "sample")
    training = TrainingSet(
        sample_rng.integers(0, instance.domain.size, size=cfg["m"], dtype=np.int64)
    )
    oracle = AdversaryOracle(instance, cfg["gamma"])
    ledger = QueryLedger()
    result = run_adaboost(
        instance.domain, training, oracle, cfg["gamma"], cfg["p"],
        snapshot_policy=_snapshot_policy(cfg, 2), ledger=ledger,
    )
    duration = time.perf_counter() - start
    record = RunRecord(cfg.kind, cfg.digest(), rep_seed, "success", duration_s=duration)
    violations = sum(1 for q in ledger.all_records()
                     if q.measured_loss is not None
                     and q.measured_loss > 0.5 - cfg["gamma"] + 1e-12)
    unseen = training.unseen_fraction(instance.domain)
    stages_seen = len(instance.stages_with_bias_revealed())
    floor = bayes_optimal_loss(stages_seen, cfg["gamma"], cfg["c_bias"], unseen)
    if isinstance(result, BoostFailure):
        record.outcome = f"failed(round={result.round_index})"
        final_loss = None
        gap = None
    else:
        final_loss = result.classifier.error_rate(instance.domain)
        gap = final_loss - floor
    record.rounds = _round_rows(
        result.trace, instance.domain, training, rep_seed, ledger.per_round_counts()
    )
    record.summary = {
        "seed": rep_seed,
        "outcome": record.outcome,
        "rounds_used": ledger.rounds_used,
        "final_loss": final_loss,
        "bayes_floor": floor,
        "gap": gap,
        "stages_seen": stages_seen,
        "unseen_fraction": unseen,
        "leaks": len(instance.leak_log),
        "violations": violations,
    }
    return record


def _exp_coingame(cfg: ExperimentConfig) -> list[RunRecord]:
    records = []
    for n in cfg["n_values"]:
        for eps in cfg["eps_values"]:
            start = time.perf_counter()
            closed = coin_majority_error(n, eps)
            sim = coin_game_simulate(
                n, eps, cfg["trials"], rule=cfg["rule"],
                seed=derive_seed(cfg.seed, "coin", n, int(eps * 10_000)),
            )
            duration = time.perf_counter() - start
            within = abs(sim.error - closed) <= 3.0 * sim.std_error + 1e-12
            records.append(
                RunRecord(
                    cfg.kind, cfg.digest(), cfg.seed, "success",
                    summary={
                        "n": n, "eps": eps, "closed_form": closed,
                        "empirical": sim.error, "std_error": sim.std_error,
                        "within_3se": within,
                    },
                    duration_s=duration,
                )
            )
    return records


def _exp_compose(cfg: ExperimentConfig) -> list[RunRecord]:
    records = []
    for eps in cfg["eps_values"]:
        for n in cfg["n_values"]:
            result = advanced_composition(eps, cfg["delta"], n, cfg["delta_prime"])
            records.append(
                RunRecord(
                    cfg.kind, cfg.digest(), cfg.seed, "success",
                    summary={
                        "eps": eps, "delta": cfg["delta"], "n": n,
                        "delta_prime": cfg["delta_prime"],
                        "eps_hat": result.eps_hat, "delta_hat": result.delta_hat,
                    },
                )
            )
    return records


def find_approximation_size(
    points: int,
    class_log2: int,
    eps: float,
    trials: int,
    pass_target: float,
    seed: int,
    n_start: int = 1,
    n_limit: int = 1 << 15,
) -> tuple[int, float]:
    """Double the multiset size until the epsilon-approximation pass rate
    over ``trials`` fresh draws reaches ``pass_target``; returns (n, rate)."""
    m = points // 2
    domain, _ = random_labels_task(m, derive_seed(seed, "approx-domain"))
    cls = random_hypothesis_class(domain, 2**class_log2, derive_seed(seed, "approx-class"))
    idx = np.arange(domain.size, dtype=np.int64)
    dist = WeightDistribution.uniform(idx)
    n = n_start
    rate = 0.0
    while True:
        rng = substream(seed, "approx-draws", n)
        passed = 0
        for _ in range(trials):
            multiset = rng.choice(idx, size=n, replace=True, p=dist.weights)
            if eps_approximation_check(multiset, dist, cls, eps, domain).passed:
                passed += 1
        rate = passed / trials
        if rate >= pass_target or n >= n_limit:
            return n, rate
        n *= 2


def _exp_approx(cfg: ExperimentConfig) -> list[RunRecord]:
    records = []
    for eps in cfg["eps_values"]:
        start = time.perf_counter()
        n, rate = find_approximation_size(
            cfg["points"], cfg["class_log2"], eps, cfg["trials"], cfg["pass_target"],
            cfg.seed, cfg["n_start"], cfg["n_limit"],
        )
        records.append(
            RunRecord(
                cfg.kind, cfg.digest(), cfg.seed, "success",
                summary={"eps": eps, "found_n": n, "pass_rate": rate},
                duration_s=time.perf_counter() - start,
            )
        )
    return records


def sweep_tradeoff(cfg: ExperimentConfig) -> list[RunRecord]:
    """Round-query trade-off sweep over R.

    For each R, double Q until at least ``success_target`` of the seeds
    finish without a failed round, then emit one row per (R, seed) with the
    found Q, the realized round count ceil(K/R), and the held-out loss.
    """
    records = []
    for r_value in cfg["r_values"]:
        if 2.0 * cfg["gamma"] * r_value > 1.0 + 1e-12:
            raise ConfigError(f"r={r_value} violates 2*gamma*R <= 1")
        base = dict(cfg.params)
        for key in ("r_values", "success_target", "q_start", "q_limit"):
            base.pop(key)
        base["r"] = r_value
        q = cfg["q_start"]
        while True:
            base["q"] = q
            sub = ExperimentConfig("pboost", _validate("pboost", {
                k: (",".join(map(str, v)) if isinstance(v, tuple) else v)
                for k, v in base.items() if v is not None
            }))
            reps = [_exp_pboost(sub, i) for i in range(cfg.reps)]
            rate = sum(0 if rec.failed else 1 for rec in reps) / len(reps)
            if rate >= cfg["success_target"] or q >= cfg["q_limit"]:
                break
            q *= 2
        for rec in reps:
            records.append(
                RunRecord(
                    "sweep", cfg.digest(), rec.seed, rec.outcome,
                    summary={
                        "r": r_value,
                        "seed": rec.seed,
                        "rounds_used": rec.summary["rounds_used"],
                        "queries_per_round": rec.summary["queries_per_round"],
                        "min_q": q,
                        "success_rate": rate,
                        "final_loss": rec.summary["holdout_error"],
                    },
                    duration_s=rec.duration_s,
                )
            )
    return records


def run_experiment(cfg: ExperimentConfig) -> tuple[list[RunRecord], list[Path]]:
    """Run all repetitions of a configured experiment and persist CSVs."""
    if cfg.kind == "adaboost":
        records = [_exp_adaboost(cfg, i) for i in range(cfg.reps)]
    elif cfg.kind == "pboost":
        records = [_exp_pboost(cfg, i) for i in range(cfg.reps)]
    elif cfg.kind == "adversary":
        records = [_exp_adversary(cfg, i) for i in range(cfg.reps)]
    elif cfg.kind == "coingame":
        records = _exp_coingame(cfg)
    elif cfg.kind == "compose":
        records = _exp_compose(cfg)
    elif cfg.kind == "approx":
        records = _exp_approx(cfg)
    elif cfg.kind == "sweep":
        records = sweep_tradeoff(cfg)
    else:  # unreachable; kinds validated at construction
        raise ConfigError(f"unknown kind {cfg.kind!r}")
    paths = write_outputs(cfg, records)
    return records, paths
