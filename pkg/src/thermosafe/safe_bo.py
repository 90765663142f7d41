"""Safe Bayesian optimization on a discretized parameter domain.

Two Gaussian processes are kept side by side: one for the objective ``O``
(to be minimized) and one for the safety constraint ``C`` (must stay below
``T``).  Each iteration computes the safe, minimizer and expander sets from
confidence bounds ``mu +/- beta * sigma`` and picks the next grid point with
one of three rules:

``safeOpt``
    largest objective uncertainty over minimizers and expanders;
``stageOpt``
    safeOpt for the first ``N_s`` iterations, then the smallest objective
    lower bound over the current safe set;
``shrinkAlgo``
    safeOpt for the first ``N_s`` iterations, then the safe set is narrowed to
    points whose objective upper bound is below ``T_o`` as well.

Every argmax/argmin breaks ties towards the lowest grid index.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from ._jit import HAVE_NUMBA, njit
from .errors import CampaignError, ConfigError, PlantError
from .gp import GPModel, KernelSpec, Observation

logger = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS",
    "AlgoConfig",
    "CampaignResult",
    "CampaignState",
    "HistoryEntry",
    "ParameterGrid",
    "PlantInterface",
    "compute_expander_set",
    "compute_minimizer_set",
    "compute_safe_set",
    "confidence_bounds",
    "context_factor",
    "continue_campaign",
    "initialize_campaign",
    "initialize_transfer",
    "next_point_safeopt",
    "next_point_shrink",
    "next_point_stageopt",
    "run_campaign",
    "select_next_point",
    "transfer_context",
    "update_sets",
]

ALGORITHMS = ("safeOpt", "stageOpt", "shrinkAlgo")


# ---------------------------------------------------------------------------
# grid and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterGrid:
    """Cartesian product of sorted coordinate axes.

    Points are enumerated with the first axis varying slowest, so
    ``points[i * len(axes[1]) + j] == (axes[0][i], axes[1][j])``.

    Parameters
    ----------
    axes : sequence of 1-D arrays
        Strictly increasing coordinates per dimension.
    context : sequence of float, optional
        Operating-condition vector shared by every point of the grid.
    names : sequence of str, optional
        Column labels used in CSV output.
    """

    axes: tuple
    context: Optional[tuple] = None
    names: Optional[tuple] = None

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).ravel() for a in self.axes)
        if not axes:
            raise ConfigError("grid needs at least one axis")
        for i, a in enumerate(axes):
            if a.size == 0:
                raise ConfigError(f"grid axis {i} is empty")
            if not np.all(np.isfinite(a)):
                raise ConfigError(f"grid axis {i} has non-finite values")
            if np.any(np.diff(a) <= 0):
                raise ConfigError(f"grid axis {i} is not strictly increasing")
        object.__setattr__(self, "axes", axes)
        if self.context is not None:
            object.__setattr__(self, "context", tuple(float(v) for v in np.atleast_1d(self.context)))
        names = self.names or tuple(f"p{i + 1}" for i in range(len(axes)))
        if len(names) != len(axes):
            raise ConfigError("one name per grid axis is required")
        object.__setattr__(self, "names", tuple(names))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.setflags(write=False)
        object.__setattr__(self, "_points", pts)

    @classmethod
    def uniform(cls, bounds: Sequence[tuple], counts: Sequence[int], context=None,
                names=None) -> "ParameterGrid":
        """Grid of ``counts[i]`` evenly spaced values on ``bounds[i]``."""
        if len(bounds) != len(counts):
            raise ConfigError("bounds and counts differ in length")
        axes = []
        for (lo, hi), n in zip(bounds, counts):
            if n < 1 or (n > 1 and not hi > lo):
                raise ConfigError(f"bad grid axis bounds ({lo}, {hi}) with {n} points")
            axes.append(np.linspace(lo, hi, int(n)))
        return cls(tuple(axes), context, names)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def bounds(self) -> list:
        return [(float(a[0]), float(a[-1])) for a in self.axes]

    def __len__(self) -> int:
        return self._points.shape[0]

    def contains(self, point) -> bool:
        """Whether ``point`` lies inside the axis bounds (inclusive)."""
        p = np.asarray(point, dtype=float).ravel()
        return bool(all(lo - 1e-12 <= v <= hi + 1e-12 for v, (lo, hi) in zip(p, self.bounds)))

    def nearest_index(self, point) -> int:
        """Flat index of the grid point closest to ``point`` along every axis."""
        p = np.asarray(point, dtype=float).ravel()
        if p.size != self.dim:
            raise ConfigError(f"point has {p.size} coordinates, grid has {self.dim}")
        idx = [int(np.argmin(np.abs(a - v))) for a, v in zip(self.axes, p)]
        return int(np.ravel_multi_index(idx, self.shape))

    def with_context(self, context) -> "ParameterGrid":
        return ParameterGrid(self.axes, context, self.names)


@dataclass(frozen=True)
class AlgoConfig:
    """Acquisition settings.

    ``switch_iteration`` (``N_s``) counts optimization iterations after the
    initializers: iterations ``1..N_s`` use the safeOpt rule, later ones the
    algorithm's second phase.
    """

    algorithm: str = "safeOpt"
    safety_threshold: float = 1.0
    objective_threshold: Optional[float] = None
    switch_iteration: int = 0
    max_iterations: int = 30
    confidence_multiplier: float = 2.0
    use_expander: bool = False

    def __post_init__(self):
        lookup = {a.lower(): a for a in ALGORITHMS}
        name = lookup.get(str(self.algorithm).lower())
        if name is None:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        object.__setattr__(self, "algorithm", name)
        if not self.confidence_multiplier > 0:
            raise ConfigError("confidence multiplier beta must be > 0")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if math.isnan(self.safety_threshold):
            raise ConfigError("safety threshold is NaN")
        if name != "safeOpt" and not 0 <= self.switch_iteration < max(self.max_iterations, 1):
            raise ConfigError("switch_iteration must satisfy 0 <= N_s < max_iterations")
        if (name == "shrinkAlgo") != (self.objective_threshold is not None):
            raise ConfigError("objective_threshold is required for shrinkAlgo and only for it")

    @property
    def beta(self) -> float:
        return self.confidence_multiplier

    def switched(self, iteration: int) -> bool:
        """True when ``iteration`` (1-based) runs the second-phase rule."""
        return self.algorithm != "safeOpt" and iteration > self.switch_iteration


class PlantInterface(Protocol):
    """Anything that returns noisy ``(objective, constraint)`` measurements."""

    description: dict

    def evaluate(self, point, context=None) -> tuple: ...


# ---------------------------------------------------------------------------
# campaign state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistoryEntry:
    point: tuple
    objective: float
    constraint: float
    iteration: int  # 0 for initializers
    was_initializer: bool = False
    context: Optional[tuple] = None
    safe_set_size: int = 0


@dataclass
class CampaignState:
    """Models, set masks and history of a running campaign.

    ``iteration`` is the number of optimization iterations already evaluated
    (initializers excluded).  Masks describe the sets computed for the
    upcoming iteration ``iteration + 1``.
    """

    grid: ParameterGrid
    config: AlgoConfig
    objective_model: GPModel
    constraint_model: GPModel
    initial_safe_mask: np.ndarray
    safe_mask: Optional[np.ndarray] = None
    minimizer_mask: Optional[np.ndarray] = None
    expander_mask: Optional[np.ndarray] = None
    expander_counts: Optional[np.ndarray] = None
    iteration: int = 0
    history: list = field(default_factory=list)
    _bounds: dict = field(default_factory=dict, repr=False)

    def bounds(self, which: str) -> tuple:
        """``(U, L, mean, var)`` of the objective (``"o"``) or constraint (``"c"``) GP on the grid."""
        if which not in self._bounds:
            model = self.objective_model if which == "o" else self.constraint_model
            mean, var = model.posterior(self.grid.points, self.grid.context)
            sd = np.sqrt(var)
            beta = self.config.beta
            self._bounds[which] = (mean + beta * sd, mean - beta * sd, mean, var)
        return self._bounds[which]

    def invalidate(self):
        self._bounds.clear()

    @property
    def next_iteration(self) -> int:
        return self.iteration + 1

    @property
    def switched(self) -> bool:
        return self.config.switched(self.next_iteration)


def confidence_bounds(model: GPModel, grid: ParameterGrid, beta: float) -> tuple:
    """Upper and lower confidence bounds ``mu +/- beta sigma`` on every grid point."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    mean, var = model.posterior(grid.points, grid.context)
    sd = np.sqrt(var)
    return mean + beta * sd, mean - beta * sd


def compute_safe_set(state: CampaignState, config: AlgoConfig = None) -> np.ndarray:
    """Safe mask for the upcoming iteration.

    Normally ``S_i`` united with ``{U^c < T}``.  After the shrinkAlgo switch
    the mask is ``{U^c < T and U^o < T_o}`` without ``S_i``.
    """
    config = config or state.config
    Uc = state.bounds("c")[0]
    below = Uc < config.safety_threshold
    if config.algorithm == "shrinkAlgo" and config.switched(state.next_iteration):
        mask = below & (state.bounds("o")[0] < config.objective_threshold)
        if not mask.any():
            raise CampaignError(
                "no safe set: no grid point has U^c < T and U^o < T_o after the switch; "
                "raise objective_threshold or switch_iteration", state.history)
        return mask
    mask = state.initial_safe_mask | below
    if not mask.any():
        raise CampaignError("no safe set: initial points do not certify any grid point",
                            state.history)
    return mask


def compute_minimizer_set(state: CampaignState) -> np.ndarray:
    """Safe points whose objective lower bound undercuts the best safe upper bound."""
    safe = state.safe_mask
    if safe is None or not safe.any():
        raise CampaignError("minimizer set needs a nonempty safe set", state.history)
    Uo, Lo = state.bounds("o")[:2]
    best_upper = np.min(Uo[safe])
    return safe & (Lo < best_upper)


# --- expander --------------------------------------------------------------

@njit(cache=True)
def _expander_counts_jit(cov, mu_u, var_u, shift, inv_s, beta, threshold):
    n_safe, n_unsafe = cov.shape
    counts = np.zeros(n_safe, dtype=np.int64)
    for i in range(n_safe):
        c_i = 0
        for j in range(n_unsafe):
            c = cov[i, j]
            v = var_u[j] - c * c * inv_s[i]
            if v < 0.0:
                v = 0.0
            if mu_u[j] + c * shift[i] + beta * math.sqrt(v) < threshold:
                c_i += 1
        counts[i] = c_i
    return counts


def _expander_counts_numpy(cov, mu_u, var_u, shift, inv_s, beta, threshold):
    var = np.maximum(var_u[None, :] - cov * cov * inv_s[:, None], 0.0)
    upper = mu_u[None, :] + cov * shift[:, None] + beta * np.sqrt(var)
    return np.count_nonzero(upper < threshold, axis=1).astype(np.int64)


def expander_counts_kernel(cov, mu_u, var_u, shift, inv_s, beta, threshold, backend: str = None):
    """Number of unsafe points each safe point would certify.

    Row ``i`` of ``cov`` holds the posterior covariance between safe point
    ``i`` and every unsafe point.  The hypothetical measurement at a safe
    point ``p`` is its lower bound, so the mean at ``q`` moves by
    ``cov * (L(p) - mu(p)) / s(p)`` (``shift = -beta sigma(p) / s(p)``) and
    the variance drops by ``cov^2 / s(p)``.

    ``backend`` is ``"numba"``, ``"numpy"`` or ``None`` (numba when present).
    """
    if backend is None:
        backend = "numba" if HAVE_NUMBA else "numpy"
    args = (np.ascontiguousarray(cov, dtype=float), np.ascontiguousarray(mu_u, dtype=float),
            np.ascontiguousarray(var_u, dtype=float), np.ascontiguousarray(shift, dtype=float),
            np.ascontiguousarray(inv_s, dtype=float), float(beta), float(threshold))
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _expander_counts_jit(*args)
    if backend == "numpy":
        return _expander_counts_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")


def compute_expander_set(state: CampaignState, config: AlgoConfig = None,
                         return_counts: bool = False):
    """Safe points whose optimistic constraint measurement would grow the safe set.

    For each safe ``p`` an artificial observation ``(p, L^c(p))`` is added to
    the constraint GP; ``e(p)`` counts the currently unsafe points whose
    hypothetical upper bound then falls below ``T``.
    """
    config = config or state.config
    safe = state.safe_mask
    if safe is None or not safe.any():
        raise CampaignError("expander set needs a nonempty safe set", state.history)
    counts = np.zeros(len(state.grid), dtype=np.int64)
    unsafe = ~safe
    if unsafe.any():
        model = state.constraint_model
        _, _, mean, var = state.bounds("c")
        pts = state.grid.points
        ctx = state.grid.context
        safe_idx = np.flatnonzero(safe)
        unsafe_idx = np.flatnonzero(unsafe)
        cov = model.posterior_cov(pts[safe_idx], pts[unsafe_idx], ctx, ctx)
        s = var[safe_idx] + model.spec.noise_var
        inv_s = 1.0 / s
        shift = -config.beta * np.sqrt(var[safe_idx]) * inv_s
        counts[safe_idx] = expander_counts_kernel(cov, mean[unsafe_idx], var[unsafe_idx], shift,
                                                  inv_s, config.beta, config.safety_threshold)
    mask = counts > 0
    return (mask, counts) if return_counts else mask


# --- acquisition -----------------------------------------------------------

def _masked_argmax(score: np.ndarray, mask: np.ndarray) -> int:
    idx = np.flatnonzero(mask)
    return int(idx[np.argmax(score[idx])])


def _masked_argmin(score: np.ndarray, mask: np.ndarray) -> int:
    idx = np.flatnonzero(mask)
    return int(idx[np.argmin(score[idx])])


def next_point_safeopt(state: CampaignState) -> int:
    """Grid index of the widest objective interval within ``M_n`` or ``E_n``."""
    cand = state.minimizer_mask | state.expander_mask
    if not cand.any():
        raise CampaignError("minimizer and expander sets are both empty", state.history)
    Uo, Lo = state.bounds("o")[:2]
    return _masked_argmax(Uo - Lo, cand)


def next_point_stageopt(state: CampaignState) -> int:
    """Grid index of the smallest objective lower bound over the current safe set."""
    if state.safe_mask is None or not state.safe_mask.any():
        raise CampaignError("stageOpt needs a nonempty safe set", state.history)
    return _masked_argmin(state.bounds("o")[1], state.safe_mask)


def next_point_shrink(state: CampaignState, config: AlgoConfig = None) -> int:
    """Grid index chosen by shrinkAlgo after the switch.

    Without expanders this is the widest objective interval over the shrunk
    safe set; with them it is the safeOpt rule applied to sets computed from
    the shrunk safe set.
    """
    config = config or state.config
    if state.safe_mask is None or not state.safe_mask.any():
        raise CampaignError("shrunk safe set is empty; raise objective_threshold or "
                            "switch_iteration", state.history)
    if config.use_expander:
        return next_point_safeopt(state)
    Uo, Lo = state.bounds("o")[:2]
    return _masked_argmax(Uo - Lo, state.safe_mask)


def update_sets(state: CampaignState) -> CampaignState:
    """Recompute the safe, minimizer and expander masks in place."""
    config = state.config
    state.safe_mask = compute_safe_set(state, config)
    state.minimizer_mask = compute_minimizer_set(state)
    phase_two = state.switched
    needs_expander = (not phase_two or
                      (config.algorithm == "shrinkAlgo" and config.use_expander))
    if needs_expander:
        state.expander_mask, state.expander_counts = compute_expander_set(
            state, config, return_counts=True)
    else:
        state.expander_mask = np.zeros(len(state.grid), dtype=bool)
        state.expander_counts = np.zeros(len(state.grid), dtype=np.int64)
    return state


def select_next_point(state: CampaignState) -> int:
    """Apply the configured rule to the current masks."""
    config = state.config
    if not state.switched:
        idx = next_point_safeopt(state)
    elif config.algorithm == "stageOpt":
        idx = next_point_stageopt(state)
    else:
        idx = next_point_shrink(state, config)
    if not state.safe_mask[idx]:  # guaranteed by construction
        raise CampaignError(f"selected grid index {idx} is outside the safe set", state.history)
    return idx


# ---------------------------------------------------------------------------
# campaign driver
# ---------------------------------------------------------------------------

@dataclass
class CampaignResult:
    history: list
    best: Optional[HistoryEntry]
    state: CampaignState
    surfaces: list = field(default_factory=list)

    @property
    def best_point(self):
        return None if self.best is None else self.best.point

    def write_history_csv(self, path):
        write_history_csv(self.history, self.state.grid, self.state.config.safety_threshold, path)


def best_entry(history: Sequence[HistoryEntry], threshold: float) -> Optional[HistoryEntry]:
    """Evaluation with the lowest measured objective among those with measured ``C <= T``.

    Ties go to the earliest evaluation.
    """
    best = None
    for h in history:
        if h.constraint <= threshold and (best is None or h.objective < best.objective):
            best = h
    return best


def _evaluate(plant, point, context, history):
    try:
        out = plant.evaluate(tuple(float(v) for v in point), context)
        o, c = float(out[0]), float(out[1])
    except PlantError as exc:
        exc.history = list(history)
        raise
    except Exception as exc:  # anything else from a plant is a plant failure too
        err = PlantError(f"plant evaluation at {tuple(point)} failed: {exc}")
        err.history = list(history)
        raise err from exc
    if not (math.isfinite(o) and math.isfinite(c)):
        err = PlantError(f"plant returned non-finite values ({o}, {c}) at {tuple(point)}")
        err.history = list(history)
        raise err
    return o, c


def _observation(point, value, context):
    return Observation(tuple(float(v) for v in point), float(value),
                       None if context is None else tuple(context))


def _resolve_specs(objective_spec, constraint_spec, config, init_objectives):
    if objective_spec.prior_mean is None:
        objective_spec = objective_spec.with_prior_mean(float(np.mean(init_objectives)))
    if constraint_spec.prior_mean is None:
        constraint_spec = constraint_spec.with_prior_mean(float(config.safety_threshold))
    return objective_spec, constraint_spec


def _initial_safe_mask(grid, constraint_model, config, init_entries) -> np.ndarray:
    mean, var = constraint_model.posterior(grid.points, grid.context)
    mask = mean + config.beta * np.sqrt(var) < config.safety_threshold
    if mask.any():
        return mask
    for h in init_entries:
        if h.constraint < config.safety_threshold and grid.contains(h.point):
            mask[grid.nearest_index(h.point)] = True
    if mask.any():
        logger.info("GP fit certifies no point; S_i falls back to %d measured-safe initializers",
                    int(mask.sum()))
    return mask


def initialize_campaign(plant, grid: ParameterGrid, objective_spec: KernelSpec,
                        constraint_spec: KernelSpec, config: AlgoConfig,
                        init_points: Sequence) -> CampaignState:
    """Evaluate the initializers, fit both GPs and derive ``S_i``.

    Initializers may lie outside the grid; they still inform both GPs.
    A ``prior_mean`` of ``None`` resolves to the mean initializer objective
    and to ``T`` for the constraint.
    """
    init_points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in init_points]
    if not init_points:
        raise CampaignError("at least one initial point is required")
    for p in init_points:
        if p.size != grid.dim:
            raise ConfigError(f"initial point {tuple(p)} has {p.size} coordinates, grid has {grid.dim}")
    ctx = grid.context
    entries = []
    for p in init_points:
        o, c = _evaluate(plant, p, ctx, entries)
        entries.append(HistoryEntry(tuple(float(v) for v in p), o, c, 0, True, ctx))
    objective_spec, constraint_spec = _resolve_specs(objective_spec, constraint_spec, config,
                                                     [h.objective for h in entries])
    _check_context(objective_spec, constraint_spec, ctx)
    obj = GPModel.from_observations(objective_spec, [_observation(h.point, h.objective, h.context)
                                                     for h in entries])
    con = GPModel.from_observations(constraint_spec, [_observation(h.point, h.constraint, h.context)
                                                      for h in entries])
    s_init = _initial_safe_mask(grid, con, config, entries)
    if not s_init.any():
        raise CampaignError("no safe set: no initializer is certified or measured safe", entries)
    entries = [replace(h, safe_set_size=int(s_init.sum())) for h in entries]
    return CampaignState(grid, config, obj, con, s_init, history=entries)


def _check_context(objective_spec, constraint_spec, ctx):
    for spec in (objective_spec, constraint_spec):
        if spec.contextual and ctx is None:
            raise ConfigError("contextual kernels need a grid context")
        if not spec.contextual and ctx is not None:
            raise ConfigError("grid has a context but the kernels are not contextual")


def surface_record(state: CampaignState, selected: int) -> dict:
    """Plot-ready snapshot of both posteriors and all masks on the grid."""
    _, _, mo, vo = state.bounds("o")
    _, _, mc, vc = state.bounds("c")
    return {
        "iteration": state.next_iteration,
        "selected": int(selected),
        "mu_o": mo.tolist(), "sigma_o": np.sqrt(vo).tolist(),
        "mu_c": mc.tolist(), "sigma_c": np.sqrt(vc).tolist(),
        "safe": state.safe_mask.astype(int).tolist(),
        "minimizer": state.minimizer_mask.astype(int).tolist(),
        "expander": state.expander_mask.astype(int).tolist(),
    }


def continue_campaign(state: CampaignState, plant, n_iterations: int,
                      on_iteration: Optional[Callable] = None,
                      surfaces: Optional[list] = None) -> CampaignState:
    """Run ``n_iterations`` more select-evaluate-update rounds in place.

    ``on_iteration(state, index)`` is called after selection and before the
    plant is queried; ``surfaces`` receives one :func:`surface_record` per
    iteration when given.
    """
    for _ in range(int(n_iterations)):
        update_sets(state)
        idx = select_next_point(state)
        if on_iteration is not None:
            on_iteration(state, idx)
        if surfaces is not None:
            surfaces.append(surface_record(state, idx))
        point = state.grid.points[idx]
        ctx = state.grid.context
        o, c = _evaluate(plant, point, ctx, state.history)
        state.history.append(HistoryEntry(tuple(float(v) for v in point), o, c,
                                          state.next_iteration, False, ctx,
                                          int(state.safe_mask.sum())))
        state.objective_model = state.objective_model.add_observation(_observation(point, o, ctx))
        state.constraint_model = state.constraint_model.add_observation(_observation(point, c, ctx))
        state.iteration += 1
        state.invalidate()
    return state


def run_campaign(plant, grid: ParameterGrid, objective_spec: KernelSpec,
                 constraint_spec: KernelSpec, config: AlgoConfig, init_points: Sequence,
                 on_iteration: Optional[Callable] = None,
                 record_surfaces: bool = False) -> CampaignResult:
    """Initialize from ``init_points`` and run ``config.max_iterations`` iterations.

    Raises
    ------
    CampaignError
        Empty safe or candidate set; ``.history`` holds the evaluations so far.
    PlantError
        The plant failed; ``.history`` holds the evaluations so far.
    """
    state = initialize_campaign(plant, grid, objective_spec, constraint_spec, config, init_points)
    surfaces = [] if record_surfaces else None
    continue_campaign(state, plant, config.max_iterations, on_iteration, surfaces)
    return CampaignResult(state.history, best_entry(state.history, config.safety_threshold),
                          state, surfaces or [])


# ---------------------------------------------------------------------------
# contextual transfer
# ---------------------------------------------------------------------------

def context_factor(spec: KernelSpec, z_from, z_to) -> float:
    """Covariance scale ``exp(-|z - z'|^2 / 2 l^2)`` between two contexts."""
    if not spec.contextual:
        raise ConfigError("kernel has no context length scales")
    a = np.atleast_1d(np.asarray(z_from, dtype=float))
    b = np.atleast_1d(np.asarray(z_to, dtype=float))
    ls = np.asarray(spec.context_length_scales, dtype=float)
    return float(np.exp(-0.5 * np.sum(((a - b) / ls) ** 2)))


def transfer_context(history_prev: Sequence[HistoryEntry], new_context,
                     objective_spec: KernelSpec, constraint_spec: KernelSpec,
                     grid: ParameterGrid, config: AlgoConfig) -> CampaignState:
    """Start a campaign at ``new_context`` that reuses earlier observations.

    Every previous evaluation enters both contextual GPs with its own context
    tag, and the returned state queries the grid at ``new_context``.  Unset
    prior means resolve as in :func:`initialize_campaign`, using the previous
    objective measurements.  The new history starts with the previous entries
    (marked as initializers) so best-point reports cover both stages.
    """
    if not (objective_spec.contextual and constraint_spec.contextual):
        raise ConfigError("context transfer needs context_length_scales on both kernels")
    history_prev = list(history_prev)
    if not history_prev:
        raise CampaignError("nothing to transfer: previous history is empty")
    if any(h.context is None for h in history_prev):
        raise ConfigError("every transferred observation needs a context tag")
    grid = grid.with_context(new_context)
    objective_spec, constraint_spec = _resolve_specs(
        objective_spec, constraint_spec, config, [h.objective for h in history_prev])
    obj = GPModel.from_observations(objective_spec, [_observation(h.point, h.objective, h.context)
                                                     for h in history_prev])
    con = GPModel.from_observations(constraint_spec, [_observation(h.point, h.constraint, h.context)
                                                      for h in history_prev])
    mean, var = con.posterior(grid.points, grid.context)
    s_init = mean + config.beta * np.sqrt(var) < config.safety_threshold
    if not s_init.any():
        raise CampaignError("no safe set after context transfer", history_prev)
    entries = [replace(h, was_initializer=True, iteration=0) for h in history_prev]
    return CampaignState(grid, config, obj, con, s_init, history=entries)


def initialize_transfer(plant, history_prev: Sequence[HistoryEntry], new_context,
                        objective_spec: KernelSpec, constraint_spec: KernelSpec,
                        grid: ParameterGrid, config: AlgoConfig,
                        init_points: Sequence = ()) -> CampaignState:
    """:func:`transfer_context` preceded by seed evaluations at ``new_context``.

    Each point of ``init_points`` is measured at the new context and added to
    the transferred data (flagged as an initializer with iteration 0).  This
    keeps the transfer usable when the decorrelated old data alone certify no
    grid point.  With no ``init_points`` it is :func:`transfer_context`.
    """
    ctx = tuple(float(v) for v in np.atleast_1d(new_context))
    entries = list(history_prev)
    for p in init_points:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.size != grid.dim:
            raise ConfigError(f"initial point {tuple(p)} has {p.size} coordinates, grid has {grid.dim}")
        o, c = _evaluate(plant, p, ctx, entries)
        entries.append(HistoryEntry(tuple(float(v) for v in p), o, c, 0, True, ctx))
    state = transfer_context(entries, ctx, objective_spec, constraint_spec, grid, config)
    size = int(state.initial_safe_mask.sum())
    state.history = [replace(h, safe_set_size=size) if i >= len(history_prev) else h
                     for i, h in enumerate(state.history)]
    return state


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_history_csv(history: Sequence[HistoryEntry], grid: ParameterGrid, threshold: float, path):
    """Campaign history, one row per evaluation, floats in round-trip precision."""
    ctx_dim = len(grid.context) if grid.context is not None else max(
        (len(h.context) for h in history if h.context is not None), default=0)
    header = ["iteration", *grid.names, *[f"z{i + 1}" for i in range(ctx_dim)],
              "objective_meas", "constraint_meas", "was_initializer", "safe_set_size",
              "best_so_far"]
    best = math.inf
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for h in history:
            if h.constraint <= threshold:
                best = min(best, h.objective)
            ctx = list(h.context) if h.context is not None else []
            ctx += [""] * (ctx_dim - len(ctx))
            w.writerow([h.iteration, *map(_fmt, h.point),
                        *[_fmt(v) if v != "" else "" for v in ctx],
                        _fmt(h.objective), _fmt(h.constraint), int(h.was_initializer),
                        h.safe_set_size, _fmt(best) if math.isfinite(best) else ""])


def write_surfaces_jsonl(surfaces: Sequence[dict], path):
    with open(path, "w") as fh:
        for rec in surfaces:
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")
