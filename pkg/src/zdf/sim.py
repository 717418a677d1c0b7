"""Monte-Carlo experiment harness: trials, aggregation, CSV output."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import distributions
from .codec import FactorGraph, FountainEncoder, build_factor_graph
from .decoder import (DecodeReport, bitwise_original, bitwise_scheduled, packet_wise_pa,
                      warm_up)
from .precode import build_precode, precode_packets

log = logging.getLogger(__name__)

AGGREGATE_COLUMNS = ["alpha", "algo", "trials", "failures", "der", "der_ci_lo", "der_ci_hi",
                     "mean_processes", "mean_bitwise_iters", "mean_decode_ms"]
PER_ITERATION_COLUMNS = ["iteration", "stage", "processes", "updating", "active"]
TRIAL_COLUMNS = ["trial", "seed", "alpha", "algo", "k_prime", "success", "packet_resolved",
                 "residual_edges", "bitwise_iters", "total_processes", "restarts",
                 "decode_ms", "build_ms"]


class DecodeMismatchError(RuntimeError):
    """A decode reported success but disagrees with the transmitted packets."""


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: int = 1000
    ell: int = 100
    alphas: list = field(default_factory=lambda: [0.1])
    trials: int = 100
    algo: str = "both"
    t_a: str = "6/alpha"
    t_b: int = 20
    seed: int = 0
    workers: int = 1
    per_iteration: list = field(default_factory=list)
    omega: str = "zdf-paper-omega"
    delta: str = "zdf-paper-delta"
    out: str = "results"
    benchmark: bool = False

    def __post_init__(self):
        self.alphas = [float(a) for a in self.alphas]
        if not self.alphas:
            raise ConfigError("empty alpha list")
        if any(a <= 0 for a in self.alphas):
            raise ConfigError("overhead alpha must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.algo not in ("original", "scheduled", "both"):
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        if self.t_b < 1:
            raise ConfigError("t_b must be >= 1")
        t_a_value(self.t_a, self.alphas[0])
        distributions.resolve(self.omega, "degree")
        distributions.resolve(self.delta, "shift")
        if self.benchmark:
            self.workers = 1

    @property
    def algorithms(self) -> list:
        return ["original", "scheduled"] if self.algo == "both" else [self.algo]


def t_a_value(rule, alpha: float):
    """Stage-1 deadline for ``alpha``: ``None`` means unbounded."""
    rule = str(rule).strip().lower()
    if rule in ("inf", "infinite", "none"):
        return None
    if rule == "6/alpha":
        # guard against 6/0.1 == 60.000000000000007
        return math.ceil(6 / alpha - 1e-9)
    try:
        value = int(rule)
    except ValueError:
        raise ConfigError(f"t_a must be an integer, '6/alpha' or 'inf', got {rule!r}") from None
    if value < 1:
        raise ConfigError("t_a must be >= 1")
    return value


def k_prime(k: int, alpha: float) -> int:
    return math.ceil(k * (1 + alpha) - 1e-9)


def trial_seed_sequence(master_seed: int, trial: int) -> np.random.SeedSequence:
    """Per-trial stream: the trial index is mixed into the master seed as
    ``SeedSequence([master_seed, trial])``. Every alpha point reuses it, so a
    trial at larger overhead sees the same packets plus a few more."""
    return np.random.SeedSequence([master_seed, trial])


@lru_cache(maxsize=8)
def cached_precode(n: int, seed: int):
    return build_precode(n, seed)


@dataclass
class Instance:
    graph: FactorGraph
    truth: np.ndarray
    k_prime: int
    build_time: float


def make_instance(cfg: ExperimentConfig, alpha: float, trial: int) -> Instance:
    """Random source packets, precoded, fountain-encoded, received as a graph."""
    H, plan, _ = cached_precode(cfg.n, cfg.seed)
    omega = distributions.resolve(cfg.omega, "degree")
    delta = distributions.resolve(cfg.delta, "shift")
    rng = np.random.default_rng(trial_seed_sequence(cfg.seed, trial))
    start = time.perf_counter()
    source = rng.integers(0, 2, size=(plan.k, cfg.ell), dtype=np.uint8)
    truth = precode_packets(plan, source)
    kp = k_prime(plan.k, alpha)
    packets = FountainEncoder(truth, omega, delta, rng).generate(kp)
    graph = build_factor_graph(H, packets, cfg.ell, delta.max_shift)
    return Instance(graph, truth, kp, time.perf_counter() - start)


@dataclass
class TrialRecord:
    trial: int
    seed: int
    alpha: float
    algo: str
    k_prime: int
    success: bool
    packet_resolved: int
    residual_edges: int
    bitwise_iters: int
    total_processes: int
    restarts: int
    decode_ms: float
    build_ms: float
    report: DecodeReport = field(repr=False, compare=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("report")
        return d


def decode_instance(inst: Instance, algorithms, t_a=None, t_b: int = 20) -> list:
    """Run packet-wise peeling once, then each bit-wise schedule on a copy of
    the residual graph. ``algorithms`` items are ``"original"``,
    ``"scheduled"`` or ``("scheduled", t_a)`` to override the deadline.

    Returns one ``(label, BitStates | None, DecodeReport)`` per algorithm.
    """
    start = time.perf_counter()
    residual = packet_wise_pa(inst.graph)
    peel_time = time.perf_counter() - start
    out = []
    for algo in algorithms:
        label, deadline = (algo if isinstance(algo, tuple) else (algo, t_a))
        if residual.resolved.all():
            report = DecodeReport(label, success=True, packet_resolved=residual.n)
            states = None
        elif label == "original":
            states, report = bitwise_original(residual)
        else:
            states, report = bitwise_scheduled(residual, deadline, t_b)
        out.append((label, states, report))
        if report.success:
            got = residual.values if states is None else states.value
            if not np.array_equal(got, inst.truth):
                raise DecodeMismatchError(f"{label}: success reported but packets differ")
    inst.build_time += peel_time
    return out


def run_trial(cfg: ExperimentConfig, alpha: float, trial: int) -> list:
    """Decode one instance with every configured algorithm; one record each."""
    inst = make_instance(cfg, alpha, trial)
    results = decode_instance(inst, cfg.algorithms, t_a_value(cfg.t_a, alpha), cfg.t_b)
    return [
        TrialRecord(trial, cfg.seed, alpha, label, inst.k_prime, report.success, report.packet_resolved,
                    report.residual_edges, report.iterations, report.total_processes,
                    report.restarts, report.wall_time * 1e3, inst.build_time * 1e3, report)
        for label, _, report in results
    ]


def der_interval(failures: int, trials: int, level: float = 0.95):
    """Clopper-Pearson interval for the decoding erasure rate."""
    ci = binomtest(failures, trials).proportion_ci(confidence_level=level, method="exact")
    return ci.low, ci.high


def aggregate(records: list) -> list:
    groups = {}
    for r in records:
        groups.setdefault((r.alpha, r.algo), []).append(r)
    rows = []
    for (alpha, algo), rs in sorted(groups.items()):
        failures = sum(not r.success for r in rs)
        lo, hi = der_interval(failures, len(rs))
        rows.append({
            "alpha": alpha, "algo": algo, "trials": len(rs), "failures": failures,
            "der": failures / len(rs), "der_ci_lo": lo, "der_ci_hi": hi,
            "mean_processes": float(np.mean([r.total_processes for r in rs])),
            "mean_bitwise_iters": float(np.mean([r.bitwise_iters for r in rs])),
            "mean_decode_ms": float(np.mean([r.decode_ms for r in rs])),
            "median_processes": float(np.median([r.total_processes for r in rs])),
        })
    return rows


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)


def _alpha_tag(alpha: float) -> str:
    return f"{alpha:g}"


def _run_chunk(cfg: ExperimentConfig, jobs: list) -> list:
    warm_up()
    return [rec for alpha, trial in jobs for rec in run_trial(cfg, alpha, trial)]


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every (alpha, trial) pair and write CSVs under ``cfg.out``.

    Files: ``aggregate_<algo>.csv`` (one row per alpha), ``trials_<algo>.csv``,
    ``per_iteration_<algo>_a<alpha>_t<trial>.csv`` for requested trials, and
    ``metadata.json``. Returns the paths written, keyed by kind.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    H, plan, precode_seed = cached_precode(cfg.n, cfg.seed)
    jobs = [(a, t) for a in cfg.alphas for t in range(cfg.trials)]
    start = time.perf_counter()
    if cfg.workers > 1:
        chunks = [jobs[w::cfg.workers] for w in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = [r for part in pool.map(_run_chunk, [cfg] * len(chunks), chunks)
                       for r in part]
    else:
        records = _run_chunk(cfg, jobs)
    elapsed = time.perf_counter() - start
    records.sort(key=lambda r: (r.alpha, r.trial, r.algo))

    written = {"aggregate": [], "trials": [], "per_iteration": []}
    agg = aggregate(records)
    for algo in cfg.algorithms:
        path = out / f"aggregate_{algo}.csv"
        _write_csv(path, AGGREGATE_COLUMNS + ["median_processes"],
                   [r for r in agg if r["algo"] == algo])
        written["aggregate"].append(path)
        path = out / f"trials_{algo}.csv"
        _write_csv(path, TRIAL_COLUMNS, [r.row() for r in records if r.algo == algo])
        written["trials"].append(path)
    wanted = set(cfg.per_iteration)
    for r in records:
        if r.trial in wanted:
            path = out / f"per_iteration_{r.algo}_a{_alpha_tag(r.alpha)}_t{r.trial}.csv"
            _write_csv(path, PER_ITERATION_COLUMNS, r.report.per_iteration_rows())
            written["per_iteration"].append(path)

    meta = {
        "config": asdict(cfg),
        "k": plan.k, "m": H.m, "precode_seed": precode_seed,
        "rng": distributions.RNG_ALGORITHM,
        "trial_seed_rule": "numpy.random.SeedSequence([seed, trial])",
        "k_prime": {_alpha_tag(a): k_prime(plan.k, a) for a in cfg.alphas},
        "t_a": {_alpha_tag(a): t_a_value(cfg.t_a, a) for a in cfg.alphas},
        "elapsed_s": elapsed,
    }
    path = out / "metadata.json"
    path.write_text(json.dumps(meta, indent=2) + "\n")
    written["metadata"] = path
    log.info("%d records in %.1f s -> %s", len(records), elapsed, out)
    return written


def emit_plotdata(csv_path, out_dir=None) -> list:
    """Reshape an aggregate or per-iteration CSV into whitespace-separated
    columns for gnuplot. Aggregates give one file per (metric, algorithm)."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        rows = list(reader)

    def dump(path, header, table):
        lines = ["# " + " ".join(header)] + [" ".join(str(v) for v in row) for row in table]
        path.write_text("\n".join(lines) + "\n")
        return path

    if set(PER_ITERATION_COLUMNS) <= set(columns):
        cols = ["iteration", "processes", "updating", "active"]
        return [dump(out_dir / (csv_path.stem + ".dat"), cols,
                     [[r[c] for c in cols] for r in rows])]
    missing = {"alpha", "algo", "der", "mean_processes", "mean_decode_ms"} - set(columns)
    if missing:
        raise ValueError(f"{csv_path}: missing columns {sorted(missing)}")
    written = []
    for algo in sorted({r["algo"] for r in rows}):
        sel = sorted((r for r in rows if r["algo"] == algo), key=lambda r: float(r["alpha"]))
        for metric, name in (("der", "der"), ("mean_processes", "processes"),
                             ("mean_decode_ms", "time")):
            written.append(dump(out_dir / f"{name}_{algo}.dat", ["alpha", metric],
                                [[r["alpha"], r[metric]] for r in sel]))
    return written
