"""Linear stability analysis of the discretized network.

With tanh and clipping replaced by the identity the one-sample update is a
linear map ``x_{k+1} = A x_k`` over every buffered quantity.  ``A`` is built
column by column by stepping unit states, so it is exact for the discrete
system that :func:`~thermosafe.network.simulate.simulate` integrates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .elements import NetworkConfigError, NetworkModel
from .kernels import AREA_JUMP, FLAME
from .simulate import NetworkState, advance


@dataclass
class EigenMapEntry:
    gain: float
    delay: float  # s
    modes: list = field(default_factory=list)  # (frequency Hz, growth rate 1/s)
    max_growth: float = float("nan")  # over all eigenvalues

    @property
    def stable(self) -> bool:
        return self.max_growth < 0


def _layout(model: NetworkModel) -> list:
    """Active state segments as (buffer name, row or None, is ring buffer).

    Unused slots (junction rows without dynamics, absent flame or zero-delay
    controller buffers) are left out; they would otherwise show up as
    spurious eigenvalues at 1.
    """
    parts = [("fbuf", None, True), ("gbuf", None, True)]
    parts += [("jst", j, False) for j, t in enumerate(model.jtype) if t in (AREA_JUMP, FLAME)]
    if model.flame is not None:
        parts.append(("ftf_buf", None, True))
    if model.controller.delay_samples(model.fs) > 0:
        parts.append(("ctl_buf", None, True))
    for idx, pole in ((0, model.upstream_pole), (1, model.downstream_pole)):
        if pole > 0:
            parts.append(("bst", idx, False))
    return parts


def _segments(model: NetworkModel, state: NetworkState):
    for name, row, is_ring in _layout(model):
        buf = getattr(state, name)
        if name in ("fbuf", "gbuf"):
            for off, d in zip(model.offsets, model.delays):
                yield buf[off:off + d], True
        elif name == "bst":
            yield buf[row:row + 1], False
        elif row is not None:
            yield buf[row], False
        else:
            yield buf, is_ring


def _pack(model: NetworkModel, state: NetworkState) -> np.ndarray:
    """Canonical state vector at sample ``state.k`` (oldest-first per ring)."""
    k = state.k
    return np.concatenate([np.roll(seg, -(k % seg.size)) if ring else seg.copy()
                           for seg, ring in _segments(model, state)])


def _unpack(model: NetworkModel, vec: np.ndarray) -> NetworkState:
    """Inverse of :func:`_pack` for a state at sample 0."""
    state = NetworkState.zeros(model)
    pos = 0
    for seg, _ in _segments(model, state):
        seg[:] = vec[pos:pos + seg.size]
        pos += seg.size
    return state


def state_dimension(model: NetworkModel) -> int:
    return sum(seg.size for seg, _ in _segments(model, NetworkState.zeros(model)))


def state_matrix(model: NetworkModel) -> np.ndarray:
    """Exact one-sample transition matrix of the linearized network."""
    dim = state_dimension(model)
    if dim > model.max_state_dim:
        raise NetworkConfigError(f"state dimension {dim} exceeds cap {model.max_state_dim}")
    A = np.empty((dim, dim))
    e = np.zeros(dim)
    for col in range(dim):
        e[col] = 1.0
        state = _unpack(model, e)
        advance(model, state, 1, linear=True)
        A[:, col] = _pack(model, state)
        e[col] = 0.0
    return A


def eigenvalues(model: NetworkModel) -> np.ndarray:
    return np.linalg.eigvals(state_matrix(model))


def modes_from_eigenvalues(lam: np.ndarray, fs: float, f_max: float = None,
                           n_modes: int = 6) -> list:
    """Convert z-plane eigenvalues to (frequency, growth rate) pairs.

    Keeps one member of each conjugate pair, drops eigenvalues at the origin
    and above ``f_max``, and returns the ``n_modes`` least damped, sorted by
    frequency.
    """
    lam = lam[np.abs(lam) > 1e-12]
    lam = lam[lam.imag >= 0]
    freq = np.angle(lam) * fs / (2 * np.pi)
    growth = np.log(np.abs(lam)) * fs
    keep = np.ones(lam.size, dtype=bool) if f_max is None else freq <= f_max
    freq, growth = freq[keep], growth[keep]
    order = np.argsort(-growth)[:n_modes]
    modes = sorted(zip(freq[order].tolist(), growth[order].tolist()))
    return modes


def analyse(model: NetworkModel, f_max: float = None, n_modes: int = 6) -> EigenMapEntry:
    lam = eigenvalues(model)
    nz = lam[np.abs(lam) > 1e-12]
    max_growth = float(np.max(np.log(np.abs(nz))) * model.fs) if nz.size else -np.inf
    f_max = model.config.get("max_mode_frequency", 500.0) * 2 if f_max is None else f_max
    ctl = model.controller
    return EigenMapEntry(ctl.gain, ctl.delay, modes_from_eigenvalues(lam, model.fs, f_max, n_modes),
                         max_growth)


def eigenvalue_map(model: NetworkModel, gains, delays, f_max: float = None,
                   n_modes: int = 6) -> list:
    """Analyse every (gain, delay) combination; delays in seconds."""
    gains = np.atleast_1d(np.asarray(gains, dtype=float))
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    if gains.size == 0 or delays.size == 0:
        raise ValueError("gain and delay ranges must be non-empty")
    return [analyse(model.with_controller(n, tau), f_max, n_modes)
            for n in gains for tau in delays]


def write_eigenmap_csv(entries, path):
    """One row per reported mode: n, tau [ms], f [Hz], growth rate [1/s]."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "tau_ms", "f_hz", "growth_rate", "stable"])
        for e in entries:
            for f, g in e.modes:
                w.writerow([f"{e.gain:.6g}", f"{e.delay * 1e3:.6g}", f"{f:.6f}",
                            f"{g:.6f}", int(e.stable)])
