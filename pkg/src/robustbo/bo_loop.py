"""Sequential optimization controller with ask/tell semantics.

The loop alternates: fit the surrogate on the active (non-flagged)
observations, maximize expected improvement, evaluate, append.  On
scheduled iterations a heavy-tailed refit reclassifies every observation
before the clean surrogate is fitted.  All randomness derives from the
config seed and the iteration index, so a run can be reconstructed
exactly from its observation history.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gp_exact, gp_laplace
from .acquisition import maximize_acquisition
from .data import Dataset
from .linalg import NumericalError
from .robust import Direction, Schedule, active_subset, classify_outliers, \
    should_run_detection

# stream tags for per-purpose RNG derivation
_TAG_LHS = 1
_TAG_FIT = 2
_TAG_ACQ = 3
_TAG_LAPLACE = 4
_TAG_FALLBACK = 5


def derive_seed(base: int, tag: int, index: int = 0) -> int:
    """Stable per-purpose seed from the run seed and an iteration index."""
    ss = np.random.SeedSequence([int(base), int(tag), int(index)])
    return int(ss.generate_state(1)[0])


def latin_hypercube(n: int, d: int, bounds, seed: int) -> np.ndarray:
    """Stratified design: one point per equal-width stratum per dimension,
    uniformly jittered within its stratum."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    rng = np.random.default_rng(seed)
    pts = np.empty((n, d))
    for j in range(d):
        strata = rng.permutation(n)
        pts[:, j] = (strata + rng.random(n)) / n
    return bounds[:, 0] + pts * (bounds[:, 1] - bounds[:, 0])


@dataclass(frozen=True)
class BOConfig:
    dimension: int
    bounds: np.ndarray
    budget: int
    n_init: int = 5
    schedule: Schedule = field(default_factory=Schedule)
    seed: int = 0
    robust_enabled: bool = True
    direction: Direction = Direction.HIGH
    lik_dof: float = 4.0
    exact_restarts: int = 3
    laplace_restarts: int = 2
    laplace_max_evals: int = 150
    candidates: int | None = None
    refinements: int = 5

    def __post_init__(self):
        bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if bounds.shape != (self.dimension, 2):
            raise ValueError("bounds must be (dimension, 2)")
        if not np.all(np.isfinite(bounds)) or \
                not np.all(bounds[:, 0] < bounds[:, 1]):
            raise ValueError("bounds must be finite with lower < upper")
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.budget <= self.n_init:
            raise ValueError("budget must exceed n_init")
        object.__setattr__(self, "bounds", bounds)


def initial_design(config: BOConfig) -> np.ndarray:
    return latin_hypercube(config.n_init, config.dimension, config.bounds,
                           derive_seed(config.seed, _TAG_LHS))


@dataclass
class BOState:
    """Mutable run state: dataset, incumbent and bookkeeping."""

    dataset: Dataset
    incumbent_value: float = np.inf
    incumbent_point: np.ndarray | None = None
    events: list = field(default_factory=list)
    last_laplace_params: np.ndarray | None = None
    laplace_model: object = None
    exact_model: object = None

    @property
    def iteration(self) -> int:
        return len(self.dataset)

    def refresh_incumbent(self) -> None:
        idx = self.dataset.active_indices()
        if idx.size == 0:
            idx = np.arange(len(self.dataset))
        if idx.size:
            best = idx[np.argmin(self.dataset.y[idx])]
            self.incumbent_value = float(self.dataset.y[best])
            self.incumbent_point = self.dataset.X[best].copy()


def new_state(config: BOConfig) -> BOState:
    return BOState(dataset=Dataset(bounds=config.bounds))


def _run_detection(state: BOState, config: BOConfig) -> None:
    t = state.iteration
    try:
        model = gp_laplace.fit_laplace(
            state.dataset.X, state.dataset.y,
            restarts=config.laplace_restarts,
            seed=derive_seed(config.seed, _TAG_LAPLACE, t),
            dof=config.lik_dof,
            init=state.last_laplace_params,
            max_evals=config.laplace_max_evals,
        )
    except NumericalError:
        state.events.append(("laplace_failure", t))
        return
    state.laplace_model = model
    state.last_laplace_params = gp_laplace.laplace_log_params(model)
    result = classify_outliers(state.dataset, model,
                               quantile=config.schedule.quantile,
                               direction=config.direction)
    if result.warning:
        state.events.append(("classification_warning", t, result.warning))
    state.dataset.flags = result.flags.copy()
    state.refresh_incumbent()


def suggest(state: BOState, config: BOConfig) -> np.ndarray:
    """Next point to evaluate; deterministic given state and config."""
    t = state.iteration
    if t < config.n_init:
        return initial_design(config)[t]
    if config.robust_enabled and t < config.budget and \
            should_run_detection(t, config.budget, config.schedule):
        _run_detection(state, config)
    active, warning = active_subset(state.dataset, state.dataset.flags)
    if warning:
        state.events.append(("degenerate_flags", t, warning))
    try:
        model = gp_exact.fit_exact(
            active.X, active.y,
            restarts=config.exact_restarts,
            seed=derive_seed(config.seed, _TAG_FIT, t),
        )
        state.exact_model = model
        incumbent = float(np.min(active.y))
        return maximize_acquisition(
            model, config.bounds, incumbent,
            candidates=config.candidates,
            refinements=config.refinements,
            seed=derive_seed(config.seed, _TAG_ACQ, t),
        )
    except NumericalError:
        state.events.append(("fit_failure", t))
        rng = np.random.default_rng(derive_seed(config.seed, _TAG_FALLBACK, t))
        return config.bounds[:, 0] + rng.random(config.dimension) * (
            config.bounds[:, 1] - config.bounds[:, 0])


def tell(state: BOState, point, value: float) -> BOState:
    """Record one evaluation and update the incumbent over active points."""
    state.dataset.append(point, value)
    state.refresh_incumbent()
    return state


def replay_state(config: BOConfig, observations) -> BOState:
    """Rebuild the run state implied by an observation history.

    Detection rounds that fired during the original run are re-executed at
    the same iterations on the same data prefixes with the same derived
    seeds, so flags, warm starts and the incumbent all match the live run.
    """
    state = new_state(config)
    for t, (point, value) in enumerate(observations):
        if config.robust_enabled and t >= config.n_init and \
                t < config.budget and \
                should_run_detection(t, config.budget, config.schedule):
            _run_detection(state, config)
        tell(state, point, value)
    return state


@dataclass(frozen=True)
class BOResult:
    history: list
    state: BOState

    @property
    def incumbent_value(self) -> float:
        return self.state.incumbent_value

    @property
    def incumbent_point(self) -> np.ndarray:
        return self.state.incumbent_point


def run_bo(objective, config: BOConfig) -> BOResult:
    """Run a full budget of evaluations against a callable objective.

    Returns per-iteration history rows with the point, observed value and
    the incumbent after the observation; the final state carries the last
    flags and models.
    """
    state = new_state(config)
    history = []
    for t in range(config.budget):
        point = suggest(state, config)
        try:
            value = float(objective(point))
        except Exception as exc:
            raise RuntimeError(f"objective failed at iteration {t}") from exc
        tell(state, point, value)
        history.append({
            "iter": t,
            "x": point.copy(),
            "y": value,
            "incumbent": state.incumbent_value,
            "flags": state.dataset.flags.copy(),
        })
    return BOResult(history=history, state=state)
