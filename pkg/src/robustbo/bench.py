"""Synthetic benchmark harness.

Test functions are drawn from a GP prior by sequential exact conditioning,
corrupted observations are injected from a uniform high-value
distribution, and method variants (vanilla, robust, clean baseline) run
against the same draw with shared seeds so that trials are paired.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .bo_loop import BOConfig, BOState, derive_seed, new_state, suggest, tell
from .kernels import KernelFamily, KernelSpec
from .kernels import gram, kernel_matrix
from .linalg import jittered_cholesky
from .robust import Schedule
from scipy.linalg import cho_solve

_TAG_DRAW = 11
_TAG_INJECT = 12
_TAG_TRIAL = 13

METHODS = ("vanilla", "robust", "clean")


class GPFunctionDraw:
    """Lazily sampled function from a zero-mean GP prior.

    Each new query point is sampled from the Gaussian conditional given
    every previously queried (point, value) pair, so any query sequence is
    jointly distributed according to the prior.  Re-querying a cached
    point returns the cached value exactly.
    """

    def __init__(self, spec: KernelSpec, seed: int):
        self.spec = spec
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._X: list[np.ndarray] = []
        self._f: list[float] = []

    @property
    def cache_size(self) -> int:
        return len(self._f)

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        for xi, fi in zip(self._X, self._f):
            if xi.shape == x.shape and np.array_equal(xi, x):
                return fi
        if not self._X:
            mean = 0.0
            var = self.spec.signal_variance
        else:
            Xc = np.vstack(self._X)
            fc = np.asarray(self._f)
            K = gram(Xc, self.spec, 0.0)
            L, jitter = jittered_cholesky(K)
            k = kernel_matrix(x[None, :], Xc, self.spec)[0]
            w = cho_solve((L, True), k)
            mean = float(k @ cho_solve((L, True), fc))
            var = float(self.spec.signal_variance - k @ w) + jitter
        var = max(var, 0.0)
        value = mean + np.sqrt(var) * self._rng.standard_normal()
        self._X.append(x.copy())
        self._f.append(float(value))
        return float(value)


def sample_gp_function(spec: KernelSpec, seed: int) -> GPFunctionDraw:
    """Handle to a random function with unit prior amplitude enforced."""
    if abs(spec.signal_variance - 1.0) > 1e-12:
        spec = KernelSpec(spec.family, spec.lengthscales, 1.0, spec.alpha)
    return GPFunctionDraw(spec, seed)


def inject_outliers(y_true: float, rate: float,
                    rng: np.random.Generator) -> tuple[float, bool]:
    """With probability ``rate`` replace the value by u ~ U(1, 2)."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    coin = rng.random()
    u = rng.uniform(1.0, 2.0)  # always drawn, keeps streams aligned
    if coin < rate:
        return float(u), True
    return float(y_true), False


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark batch: function family, corruption level, methods."""

    dimension: int = 8
    generator: KernelFamily = KernelFamily.MATERN52
    gen_lengthscale: float = 0.3
    alpha: float = 2.0
    outlier_rate: float = 0.2
    trials: int = 20
    budget: int = 60
    n_init: int = 5
    methods: tuple = METHODS
    base_seed: int = 0
    schedule: Schedule = field(default_factory=Schedule)
    bounds: np.ndarray | None = None

    def box(self) -> np.ndarray:
        if self.bounds is not None:
            return np.atleast_2d(np.asarray(self.bounds, dtype=float))
        return np.tile([0.0, 1.0], (self.dimension, 1))

    def generator_spec(self) -> KernelSpec:
        return KernelSpec(self.generator,
                          np.full(self.dimension, self.gen_lengthscale),
                          1.0, self.alpha)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: str
    iter: int
    x: tuple
    y_true: float
    y_obs: float
    injected: bool
    flagged: bool
    incumbent_true: float
    ms: float


def record_to_json(rec: TrialRecord) -> str:
    d = asdict(rec)
    d["x"] = list(d["x"])
    return json.dumps(d)


def record_from_json(line: str) -> TrialRecord:
    d = json.loads(line)
    d["x"] = tuple(d["x"])
    return TrialRecord(**d)


def _bo_config(bench: BenchSpec, method: str, trial_seed: int) -> BOConfig:
    return BOConfig(
        dimension=bench.dimension,
        bounds=bench.box(),
        budget=bench.budget,
        n_init=bench.n_init,
        schedule=bench.schedule,
        seed=trial_seed,
        robust_enabled=(method == "robust"),
    )


def run_single_trial(bench: BenchSpec, trial: int) -> list[TrialRecord]:
    """All method variants for one trial, sharing draw, injections and
    initial design."""
    trial_seed = derive_seed(bench.base_seed, _TAG_TRIAL, trial)
    draw = sample_gp_function(bench.generator_spec(),
                              derive_seed(bench.base_seed, _TAG_DRAW, trial))
    inj_rng = np.random.default_rng(
        derive_seed(bench.base_seed, _TAG_INJECT, trial))
    # same coin flips and corrupted values for every method in the trial
    coin_hits = []
    uniforms = []
    for _ in range(bench.budget):
        coin_hits.append(bool(inj_rng.random() < bench.outlier_rate))
        uniforms.append(float(inj_rng.uniform(1.0, 2.0)))

    records: list[TrialRecord] = []
    for method in bench.methods:
        config = _bo_config(bench, method, trial_seed)
        state = new_state(config)
        y_true_seq: list[float] = []
        method_records: list[TrialRecord] = []
        for t in range(bench.budget):
            t0 = time.perf_counter()
            point = suggest(state, config)
            y_true = draw(point)
            if method != "clean" and coin_hits[t]:
                y_obs, injected = uniforms[t], True
            else:
                y_obs, injected = y_true, False
            tell(state, point, y_obs)
            ms = (time.perf_counter() - t0) * 1000.0
            y_true_seq.append(y_true)
            active = ~state.dataset.flags
            if not active.any():
                active = np.ones(len(y_true_seq), dtype=bool)
            incumbent_true = float(np.min(np.asarray(y_true_seq)[active]))
            method_records.append(TrialRecord(
                trial=trial, method=method, iter=t,
                x=tuple(float(v) for v in point),
                y_true=float(y_true), y_obs=float(y_obs),
                injected=bool(injected), flagged=False,
                incumbent_true=incumbent_true, ms=ms,
            ))
        final_flags = state.dataset.flags
        for t, rec in enumerate(method_records):
            method_records[t] = TrialRecord(
                **{**asdict(rec), "flagged": bool(final_flags[t])})
        records.extend(method_records)
    return records


def run_trials(bench: BenchSpec, parallelism: int = 1,
               on_trial=None) -> list[TrialRecord]:
    """Run every trial; per-trial failures are recorded and skipped.

    ``on_trial(trial, records_or_exception)`` is invoked as each trial
    completes (for incremental flushing).  Output is sorted by
    (trial, method order, iter) regardless of execution interleaving.
    """
    results: list[TrialRecord] = []
    failures = 0
    if parallelism > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = {pool.submit(run_single_trial, bench, t): t
                       for t in range(bench.trials)}
            collected = {}
            for fut, t in futures.items():
                try:
                    collected[t] = fut.result()
                except Exception as exc:
                    failures += 1
                    collected[t] = exc
            for t in range(bench.trials):
                out = collected[t]
                if on_trial is not None:
                    on_trial(t, out)
                if not isinstance(out, Exception):
                    results.extend(out)
    else:
        for t in range(bench.trials):
            try:
                out = run_single_trial(bench, t)
            except Exception as exc:
                failures += 1
                out = exc
            if on_trial is not None:
                on_trial(t, out)
            if not isinstance(out, Exception):
                results.extend(out)
    if failures == bench.trials:
        raise RuntimeError("all trials failed")
    method_rank = {m: i for i, m in enumerate(bench.methods)}
    results.sort(key=lambda r: (r.trial, method_rank.get(r.method, 99),
                                r.iter))
    return results


def aggregate(records, n_boot: int = 1000, seed: int = 0) -> list[dict]:
    """Per-method, per-iteration summary of the running best true value.

    Returns rows with mean, median and a seeded percentile-bootstrap 95%
    band of the mean, sorted by (method, iter).
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    trials = {r.trial for r in records}
    if len(trials) < 2:
        raise ValueError("aggregation requires records from >= 2 trials")
    rng = np.random.default_rng(seed)
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.method, r.iter), []).append(r.incumbent_true)
    rows = []
    for (method, it) in sorted(groups):
        vals = np.asarray(groups[(method, it)])
        idx = rng.integers(0, vals.size, size=(n_boot, vals.size))
        boot_means = vals[idx].mean(axis=1)
        rows.append({
            "method": method,
            "iter": it,
            "mean": float(np.mean(vals)),
            "median": float(np.median(vals)),
            "lo95": float(np.percentile(boot_means, 2.5)),
            "hi95": float(np.percentile(boot_means, 97.5)),
        })
    return rows
