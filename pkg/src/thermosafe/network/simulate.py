"""Time-domain simulation of an assembled network."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ThermosafeError
from .elements import NetworkModel
from .kernels import AREA_JUMP, FLAME, run_network


class SimulationError(ThermosafeError, RuntimeError):
    """The time-domain state became non-finite."""


@dataclass
class NetworkState:
    """All buffered quantities of a running simulation."""

    fbuf: np.ndarray
    gbuf: np.ndarray
    jst: np.ndarray
    ftf_buf: np.ndarray
    ctl_buf: np.ndarray
    bst: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, model: NetworkModel) -> "NetworkState":
        total = int(model.delays.sum())
        return cls(np.zeros(total), np.zeros(total),
                   np.zeros((max(len(model.junctions), 1), 2)),
                   np.zeros(max(model.ftf_delay_samples, 1)),
                   np.zeros(max(model.controller.delay_samples(model.fs), 1)),
                   np.zeros(2))

    def copy(self) -> "NetworkState":
        return NetworkState(self.fbuf.copy(), self.gbuf.copy(), self.jst.copy(),
                            self.ftf_buf.copy(), self.ctl_buf.copy(), self.bst.copy(), self.k)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.fbuf).all() and np.isfinite(self.gbuf).all()
                    and np.isfinite(self.jst).all() and np.isfinite(self.ftf_buf).all()
                    and np.isfinite(self.ctl_buf).all() and np.isfinite(self.bst).all())


_EMPTY = np.empty(0)


def advance(model: NetworkModel, state: NetworkState, n_steps: int, forcing=None,
            record: bool = False, linear: bool = False):
    """Advance ``state`` in place by ``n_steps`` samples.

    Returns ``(pressure, voltage)`` traces when ``record`` is set.
    """
    speaker = model.speaker
    ls_gain = speaker.gain * speaker.area_ratio if speaker is not None else 0.0
    clip = speaker.clip if speaker is not None else np.inf
    ctl = model.controller
    out_p = np.empty(n_steps) if record else _EMPTY
    out_v = np.empty(n_steps) if record else _EMPTY
    forcing = _EMPTY if forcing is None else np.ascontiguousarray(forcing, dtype=float)
    state.k = run_network(model.delays, model.offsets, state.fbuf, state.gbuf,
                          model.jtype, model.jpar, state.jst, state.ftf_buf, state.ctl_buf,
                          ctl.delay_samples(model.fs), float(ctl.gain * model.sensor_gain), float(ls_gain),
                          float(clip), model.boundary_params, state.bst, int(model.probe_duct),
                          int(state.k), int(n_steps), forcing, out_p, out_v, bool(linear))
    if not state.is_finite():
        raise SimulationError(f"non-finite network state at sample {state.k} "
                              f"(gain={ctl.gain}, delay={ctl.delay})")
    if record:
        return out_p, out_v
    return None


def step(model: NetworkModel, state: NetworkState, linear: bool = False) -> NetworkState:
    """Return the state one sample later (the input is left untouched)."""
    new = state.copy()
    advance(model, new, 1, linear=linear)
    return new


@dataclass
class SimResult:
    pressure_trace: np.ndarray  # p'/(rho c) at the probe, m/s
    voltage_trace: np.ndarray  # V
    rms_pressure: float  # Pa
    rms_voltage: float  # V
    duration: float
    fs: float
    warmup: float

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.pressure_trace.size) / self.fs

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "p_norm", "V"])
            for t, p, v in zip(self.time, self.pressure_trace, self.voltage_trace):
                w.writerow([f"{t:.6f}", repr(float(p)), repr(float(v))])


def initial_state(model: NetworkModel, seed: int, kick_std: float = None) -> NetworkState:
    """Zero state plus a small seeded broadband kick in the wave buffers."""
    kick_std = model.settings.kick_std if kick_std is None else kick_std
    state = NetworkState.zeros(model)
    rng = np.random.default_rng(seed)
    state.fbuf[:] = rng.normal(0.0, kick_std, state.fbuf.size)
    state.gbuf[:] = rng.normal(0.0, kick_std, state.gbuf.size)
    return state


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if x.size else 0.0


def simulate(model: NetworkModel, duration: float = None, seed: int = 0,
             warmup: float = None, linear: bool = False) -> SimResult:
    """Run the network from a seeded kick and report rms metrics.

    The traces cover the whole run; the rms values use only the samples after
    ``warmup`` seconds.
    """
    s = model.settings
    duration = s.duration if duration is None else duration
    warmup = s.warmup if warmup is None else warmup
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if not 0 <= warmup < duration:
        raise ValueError("warmup must lie in [0, duration)")
    n = int(round(duration * model.fs))
    state = initial_state(model, seed)
    forcing = None
    if s.forcing_std > 0:
        forcing = np.random.default_rng([seed, 1]).normal(0.0, s.forcing_std, n)
    p, v = advance(model, state, n, forcing=forcing, record=True, linear=linear)
    start = int(round(warmup * model.fs))
    return SimResult(p, v, rms(p[start:]) * model.probe_impedance, rms(v[start:]),
                     duration, model.fs, warmup)


def measure_plant(model: NetworkModel, gain: float, delay: float, duration: float = None,
                  seed: int = 0) -> tuple:
    """Objective and constraint of one controller setting.

    Returns ``(rms_pressure [Pa], rms_voltage [V])``; ``delay`` in seconds.
    """
    res = simulate(model.with_controller(gain, delay), duration, seed)
    return res.rms_pressure, res.rms_voltage
