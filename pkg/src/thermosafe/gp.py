"""Exact Gaussian-process regression with fixed hyperparameters.

The covariance is a squared-exponential kernel over the control parameters,
optionally multiplied by a unit-amplitude squared-exponential kernel over a
context vector (operating condition).  Hyperparameters are never learned.

The model keeps a lower Cholesky factor of ``K_n + sigma^2 I`` and grows it by
one row per observation, so adding a point costs O(n^2) instead of O(n^3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "KernelSpec",
    "Observation",
    "GPModel",
    "kernel_eval",
    "kernel_matrix",
    "NOISE_VAR_FLOOR",
]

# Lower bound on the noise variance used by the solver.
NOISE_VAR_FLOOR = 1e-10


class DimensionError(ValueError):
    """Input dimensions disagree with the kernel specification."""


@dataclass(frozen=True)
class KernelSpec:
    """Hyperparameters of one squared-exponential kernel.

    Parameters
    ----------
    amplitude : float
        Prior variance ``theta``; ``k(p, p) = theta``.
    length_scales : sequence of float
        One positive length scale per parameter dimension.
    noise_std : float
        Measurement noise standard deviation.
    prior_mean : float or None
        Constant prior mean ``K``.  ``None`` means "resolve later"; the
        campaign driver fills it in before a model is built.
    context_length_scales : sequence of float or None
        Length scales of the context factor.  Present iff contextual.
    """

    amplitude: float
    length_scales: tuple
    noise_std: float
    prior_mean: Optional[float] = 0.0
    context_length_scales: Optional[tuple] = None

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.length_scales))
        object.__setattr__(self, "length_scales", ls)
        if self.context_length_scales is not None:
            cls = tuple(float(v) for v in np.atleast_1d(self.context_length_scales))
            object.__setattr__(self, "context_length_scales", cls)
            if not cls or any(v <= 0 for v in cls):
                raise ValueError("context length scales must be positive")
        if not ls or any(v <= 0 for v in ls):
            raise ValueError("length scales must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.length_scales)

    @property
    def context_dim(self) -> int:
        return 0 if self.context_length_scales is None else len(self.context_length_scales)

    @property
    def contextual(self) -> bool:
        return self.context_length_scales is not None

    @property
    def noise_var(self) -> float:
        return max(self.noise_std**2, NOISE_VAR_FLOOR)

    def with_prior_mean(self, value: float) -> "KernelSpec":
        return KernelSpec(self.amplitude, self.length_scales, self.noise_std,
                          float(value), self.context_length_scales)

    def with_context(self, context_length_scales) -> "KernelSpec":
        return KernelSpec(self.amplitude, self.length_scales, self.noise_std,
                          self.prior_mean, context_length_scales)


@dataclass(frozen=True)
class Observation:
    """One noisy measurement ``value`` at ``point`` (and ``context``)."""

    point: tuple
    value: float
    context: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in np.atleast_1d(self.point)))
        if self.context is not None:
            object.__setattr__(self, "context",
                               tuple(float(v) for v in np.atleast_1d(self.context)))
        object.__setattr__(self, "value", float(self.value))


def _as_points(x, dim: int, what: str = "points") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        # 1-D input is a list of scalars for 1-D kernels, else a single point
        x = x.reshape(-1, 1) if dim == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"{what} must have {dim} columns, got shape {x.shape}")
    return x


def _context_rows(spec: KernelSpec, z, n: int) -> Optional[np.ndarray]:
    """Broadcast ``z`` to an (n, context_dim) array, or None if not contextual."""
    if not spec.contextual:
        if z is not None:
            raise DimensionError("context given for a non-contextual kernel")
        return None
    if z is None:
        raise DimensionError("contextual kernel requires a context")
    z = np.asarray(z, dtype=float)
    if z.ndim <= 1 and z.size == spec.context_dim:
        return np.broadcast_to(z.reshape(1, -1), (n, spec.context_dim))
    z = z.reshape(-1, spec.context_dim) if z.ndim == 1 else z
    if z.shape != (n, spec.context_dim):
        raise DimensionError(f"contexts must have shape {(n, spec.context_dim)}, got {z.shape}")
    return z


def _sq_dist(a: np.ndarray, b: np.ndarray, scales) -> np.ndarray:
    a = a / np.asarray(scales)
    b = b / np.asarray(scales)
    d2 = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * a @ b.T)
    return np.maximum(d2, 0.0)


def kernel_matrix(spec: KernelSpec, a, b, za=None, zb=None) -> np.ndarray:
    """Covariance matrix between point sets ``a`` (m, d) and ``b`` (n, d)."""
    a = _as_points(a, spec.dim)
    b = _as_points(b, spec.dim)
    k = spec.amplitude * np.exp(-0.5 * _sq_dist(a, b, spec.length_scales))
    za = _context_rows(spec, za, a.shape[0])
    zb = _context_rows(spec, zb, b.shape[0])
    if za is not None:
        k = k * np.exp(-0.5 * _sq_dist(np.asarray(za), np.asarray(zb), spec.context_length_scales))
    return k


def kernel_eval(spec: KernelSpec, a, b, za=None, zb=None) -> float:
    """Covariance between two single points.

    Computed elementwise (not through the expanded-square form used by
    :func:`kernel_matrix`) so that ``k(a, b) == k(b, a)`` holds exactly.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (spec.dim,) or b.shape != (spec.dim,):
        raise DimensionError(f"points must have {spec.dim} coordinates")
    ls = np.asarray(spec.length_scales)
    d2 = float(np.sum(((a - b) / ls) ** 2))
    k = spec.amplitude * np.exp(-0.5 * d2)
    if spec.contextual:
        if za is None or zb is None:
            raise DimensionError("contextual kernel requires contexts")
        za = np.atleast_1d(np.asarray(za, dtype=float))
        zb = np.atleast_1d(np.asarray(zb, dtype=float))
        if za.shape != (spec.context_dim,) or zb.shape != (spec.context_dim,):
            raise DimensionError(f"contexts must have {spec.context_dim} coordinates")
        cls = np.asarray(spec.context_length_scales)
        k *= np.exp(-0.5 * float(np.sum(((za - zb) / cls) ** 2)))
    elif za is not None or zb is not None:
        raise DimensionError("context given for a non-contextual kernel")
    return float(k)


@dataclass
class GPModel:
    """Posterior of a constant-mean GP conditioned on a list of observations.

    Treat instances as immutable: :meth:`add_observation` returns a new model
    and leaves this one untouched, so concurrent readers are safe.
    """

    spec: KernelSpec
    X: np.ndarray = field(default=None)
    Z: Optional[np.ndarray] = field(default=None)
    y: np.ndarray = field(default=None)
    chol: np.ndarray = field(default=None)
    _alpha: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.spec.prior_mean is None:
            raise ValueError("prior_mean must be resolved before building a model")
        if self.X is None:
            self.X = np.empty((0, self.spec.dim))
            self.y = np.empty(0)
            self.chol = np.empty((0, 0))
            self.Z = np.empty((0, self.spec.context_dim)) if self.spec.contextual else None

    # -- construction -----------------------------------------------------
    @classmethod
    def from_observations(cls, spec: KernelSpec, observations: Sequence[Observation]) -> "GPModel":
        """Fit from scratch with a single dense Cholesky factorization."""
        model = cls(spec)
        if not observations:
            return model
        X = np.array([o.point for o in observations], dtype=float)
        X = _as_points(X, spec.dim, "observation points")
        Z = None
        if spec.contextual:
            if any(o.context is None for o in observations):
                raise DimensionError("contextual model needs a context on every observation")
            Z = _context_rows(spec, np.array([o.context for o in observations]), len(observations))
            Z = np.array(Z)
        elif any(o.context is not None for o in observations):
            raise DimensionError("context given for a non-contextual kernel")
        y = np.array([o.value for o in observations], dtype=float)
        K = kernel_matrix(spec, X, X, Z, Z)
        K[np.diag_indices_from(K)] += spec.noise_var
        chol = np.linalg.cholesky(K)
        return cls(spec, X, Z, y, chol)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def observations(self) -> list:
        zs = self.Z if self.Z is not None else [None] * self.n
        return [Observation(tuple(x), v, None if z is None else tuple(z))
                for x, z, v in zip(self.X, zs, self.y)]

    @property
    def alpha(self) -> np.ndarray:
        """``L^-1 (y - K)``, cached."""
        if self._alpha is None:
            self._alpha = solve_triangular(self.chol, self.y - self.spec.prior_mean, lower=True) \
                if self.n else np.empty(0)
        return self._alpha

    def _check_obs(self, obs: Observation):
        if len(obs.point) != self.spec.dim:
            raise DimensionError(f"observation has {len(obs.point)} coordinates, kernel expects {self.spec.dim}")
        if self.spec.contextual:
            if obs.context is None or len(obs.context) != self.spec.context_dim:
                raise DimensionError("observation context does not match the kernel")
        elif obs.context is not None:
            raise DimensionError("context given for a non-contextual kernel")

    def add_observation(self, obs: Observation) -> "GPModel":
        """Return a new model with ``obs`` appended (rank-one Cholesky growth)."""
        self._check_obs(obs)
        x = np.asarray(obs.point, dtype=float).reshape(1, -1)
        z = None if obs.context is None else np.asarray(obs.context, dtype=float).reshape(1, -1)
        n = self.n
        k_new = kernel_matrix(self.spec, self.X, x, self.Z, z)[:, 0] if n else np.empty(0)
        k_self = self.spec.amplitude + self.spec.noise_var
        row = solve_triangular(self.chol, k_new, lower=True) if n else np.empty(0)
        d2 = k_self - row @ row
        if not d2 > 0:
            raise np.linalg.LinAlgError("Gram matrix lost positive definiteness")
        chol = np.zeros((n + 1, n + 1))
        chol[:n, :n] = self.chol
        chol[n, :n] = row
        chol[n, n] = np.sqrt(d2)
        X = np.vstack([self.X, x])
        Z = None if self.Z is None else np.vstack([self.Z, z])
        y = np.append(self.y, obs.value)
        alpha = None
        if self._alpha is not None:
            a_new = (obs.value - self.spec.prior_mean - row @ self._alpha) / chol[n, n]
            alpha = np.append(self._alpha, a_new)
        return GPModel(self.spec, X, Z, y, chol, alpha)

    def add_observations(self, observations: Sequence[Observation]) -> "GPModel":
        model = self
        for obs in observations:
            model = model.add_observation(obs)
        return model

    # -- queries ----------------------------------------------------------
    def _whitened(self, points, contexts) -> tuple:
        Xq = _as_points(points, self.spec.dim, "query points")
        Zq = _context_rows(self.spec, contexts, Xq.shape[0])
        if self.n == 0:
            return Xq, Zq, np.empty((0, Xq.shape[0]))
        Kq = kernel_matrix(self.spec, self.X, Xq, self.Z, Zq)
        return Xq, Zq, solve_triangular(self.chol, Kq, lower=True)

    def posterior(self, points, contexts=None) -> tuple:
        """Posterior mean and variance at each query point.

        Parameters
        ----------
        points : array_like, shape (m, d)
        contexts : array_like, shape (context_dim,) or (m, context_dim)
            Required for contextual kernels; a single vector is broadcast.

        Returns
        -------
        mean, var : ndarray, shape (m,)
        """
        _, _, V = self._whitened(points, contexts)
        mean = self.spec.prior_mean + V.T @ self.alpha
        var = self.spec.amplitude - np.sum(V * V, axis=0)
        return mean, np.maximum(var, 0.0)

    def posterior_cov(self, points_a, points_b, contexts_a=None, contexts_b=None) -> np.ndarray:
        """Posterior cross-covariance matrix between two query sets."""
        Xa, Za, Va = self._whitened(points_a, contexts_a)
        Xb, Zb, Vb = self._whitened(points_b, contexts_b)
        return kernel_matrix(self.spec, Xa, Xb, Za, Zb) - Va.T @ Vb

    def hypothetical_posterior(self, artificial: Observation, points, contexts=None) -> tuple:
        """Posterior after a what-if observation, without changing the model.

        Uses the rank-one form of the Cholesky append: with ``c`` the current
        posterior covariance between the artificial point and the queries and
        ``s = var(artificial) + noise``, the mean moves by ``c (y - mu) / s``
        and the variance drops by ``c^2 / s``.
        """
        self._check_obs(artificial)
        mean, var = self.posterior(points, contexts)
        pa = np.asarray(artificial.point).reshape(1, -1)
        za = None if artificial.context is None else np.asarray(artificial.context)
        mu_a, var_a = self.posterior(pa, za)
        c = self.posterior_cov(pa, points, za, contexts)[0]
        s = var_a[0] + self.spec.noise_var
        new_mean = mean + c * (artificial.value - mu_a[0]) / s
        new_var = np.maximum(var - c * c / s, 0.0)
        return new_mean, new_var
