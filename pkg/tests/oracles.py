"""Independent reference implementations used only by the test-suite.

Nothing here shares code with the package beyond plain data containers.
"""

import math

import numpy as np


def se_kernel(theta, ls, a, b, cls=None, za=None, zb=None):
    d2 = sum(((ai - bi) / li) ** 2 for ai, bi, li in zip(a, b, ls))
    k = theta * math.exp(-0.5 * d2)
    if cls is not None:
        dz2 = sum(((ai - bi) / li) ** 2 for ai, bi, li in zip(za, zb, cls))
        k *= math.exp(-0.5 * dz2)
    return k


def dense_posterior(theta, ls, noise_var, prior_mean, X, y, Q, cls=None, Z=None, Zq=None):
    """Posterior via explicit matrix inverse, looping kernel evaluations."""
    n, m = len(X), len(Q)
    zx = Z if Z is not None else [None] * n
    zq = Zq if Zq is not None else [None] * m
    if n == 0:
        return np.full(m, prior_mean), np.full(m, theta)
    K = np.array([[se_kernel(theta, ls, X[i], X[j], cls, zx[i], zx[j]) for j in range(n)]
                  for i in range(n)])
    Kinv = np.linalg.inv(K + noise_var * np.eye(n))
    kq = np.array([[se_kernel(theta, ls, Q[a], X[i], cls, zq[a], zx[i]) for i in range(n)]
                   for a in range(m)])
    mean = prior_mean + kq @ Kinv @ (np.asarray(y) - prior_mean)
    var = np.array([se_kernel(theta, ls, Q[a], Q[a], cls, zq[a], zq[a]) for a in range(m)]) \
        - np.einsum("ai,ij,aj->a", kq, Kinv, kq)
    return mean, var


def dense_bounds(spec, X, y, Q, beta, Z=None, Zq=None):
    """(U, L, mean, var) on the query points via :func:`dense_posterior`."""
    mean, var = dense_posterior(spec.amplitude, spec.length_scales, spec.noise_var,
                                spec.prior_mean, X, y, Q, spec.context_length_scales, Z, Zq)
    sd = np.sqrt(np.maximum(var, 0.0))
    return mean + beta * sd, mean - beta * sd, mean, var


def expander_counts_refit(spec, X, y, grid_points, safe, beta, threshold, Z=None, zq=None):
    """e(p) for every safe p by appending (p, L(p)) to the data and refitting densely."""
    n = len(grid_points)
    Zq = None if zq is None else [zq] * n
    _, L, _, _ = dense_bounds(spec, X, y, grid_points, beta, Z, Zq)
    unsafe = [j for j in range(n) if not safe[j]]
    counts = np.zeros(n, dtype=int)
    if not unsafe:
        return counts
    for i in range(n):
        if not safe[i]:
            continue
        X2 = list(X) + [grid_points[i]]
        y2 = list(y) + [L[i]]
        Z2 = None if Z is None else list(Z) + [zq]
        Q = [grid_points[j] for j in unsafe]
        U2, _, _, _ = dense_bounds(spec, X2, y2, Q, beta, Z2,
                                   None if zq is None else [zq] * len(Q))
        counts[i] = int(sum(u < threshold for u in U2))
    return counts


def scan_argmax(score, mask):
    """First index attaining the maximum of score over mask (plain loop)."""
    best, best_i = -math.inf, None
    for i, (s, m) in enumerate(zip(score, mask)):
        if m and s > best:
            best, best_i = s, i
    return best_i


def scan_argmin(score, mask):
    best, best_i = math.inf, None
    for i, (s, m) in enumerate(zip(score, mask)):
        if m and s < best:
            best, best_i = s, i
    return best_i


def scan_next_point(Uo, Lo, safe, minim, expand, rule):
    """Acquisition rules written out directly from their set definitions."""
    if rule == "safeopt":
        cand = [m or e for m, e in zip(minim, expand)]
        return scan_argmax([u - l for u, l in zip(Uo, Lo)], cand)
    if rule == "stageopt":
        return scan_argmin(Lo, safe)
    if rule == "shrink":
        return scan_argmax([u - l for u, l in zip(Uo, Lo)], safe)
    raise ValueError(rule)


def dense_grid_minimizer(objective, constraint, lo, hi, threshold, n=200001):
    """Constrained minimizer of a 1-D function by dense evaluation."""
    p = np.linspace(lo, hi, n)
    o = objective(p)
    ok = constraint(p) < threshold
    i = np.argmin(np.where(ok, o, np.inf))
    return float(p[i]), float(o[i])
