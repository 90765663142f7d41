"""Benchmark plants and hyperparameter presets.

Plants expose ``evaluate(point, context=None) -> (objective, constraint)`` and
a ``description`` mapping.  Provided here:

* :class:`AnalyticPlant` for the two one-dimensional demo problems (and a
  context-shifted variant used to exercise knowledge transfer);
* :class:`NetworkPlant`, which runs the thermoacoustic network simulator with
  a gain-delay controller;
* :class:`ExternalPlant`, a line-protocol adapter for measurement rigs.

External plant protocol (UTF-8, one line each way)::

    request:   EVAL <p1> <p2> ... [| <z1> <z2> ...]
    response:  OK <objective> <constraint>
               ERR <message>

Coordinates are written with ``repr(float)`` so they round-trip exactly.
"""

from __future__ import annotations

import logging
import math
import os
import selectors
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, PlantError
from .gp import KernelSpec

logger = logging.getLogger(__name__)

__all__ = [
    "AnalyticPlant",
    "ExternalPlant",
    "HyperparameterPreset",
    "NetworkPlant",
    "PRESETS",
    "demo1_constraint",
    "demo1_eval",
    "demo2_constraint",
    "demo2_eval",
    "demo_objective",
    "list_presets",
    "load_preset",
    "make_demo_plant",
]

DEMO1_DOMAIN = (0.0, 10.0)
DEMO2_DOMAIN = (0.0, 16.0)


# ---------------------------------------------------------------------------
# analytic demos
# ---------------------------------------------------------------------------

def demo_objective(p):
    """Shared objective of both demos: two minima on [0, 10], a deeper one near 14."""
    p = np.asarray(p, dtype=float)
    return 100.0 * (3.0 * np.sin(2.0 * (p + 1.0) ** 0.8) - 0.4 * p + 7.0)


def demo1_constraint(p):
    p = np.asarray(p, dtype=float)
    return 10.0 / (p + 2.0) ** 0.4 + 0.1 * (p - 3.0) ** 2 - 4.0


def demo2_constraint(p):
    """Constraint with two disjoint regions below 4 on [0, 16]."""
    p = np.asarray(p, dtype=float)
    return 10.0 / (p + 2.0) ** 0.4 + 0.1 * (p - 4.0) ** 2 * (1.0 - 0.7 * np.sin(0.55 * p)) - 4.0


def _check_domain(p: float, domain: tuple, name: str):
    if not (domain[0] <= p <= domain[1]):
        raise ValueError(f"{name}: p = {p} outside the domain [{domain[0]}, {domain[1]}]")


def demo1_eval(p: float) -> tuple:
    """Noise-free ``(O, C)`` of the first demo; ``p`` must lie in [0, 10]."""
    p = float(p)
    _check_domain(p, DEMO1_DOMAIN, "demo1")
    return float(demo_objective(p)), float(demo1_constraint(p))


def demo2_eval(p: float) -> tuple:
    """Noise-free ``(O, C)`` of the second demo; ``p`` must lie in [0, 16]."""
    p = float(p)
    _check_domain(p, DEMO2_DOMAIN, "demo2")
    return float(demo_objective(p)), float(demo2_constraint(p))


@dataclass
class AnalyticPlant:
    """Closed-form plant with optional seeded Gaussian measurement noise.

    The noise of call ``i`` is drawn from ``default_rng([seed, i])``, so a
    run is reproducible from the seed and the call index alone.

    Parameters
    ----------
    objective, constraint : callable
        Noise-free functions of the point coordinates (and context, when
        ``context_shift`` is used).
    domain : list of (lo, hi)
        Per-coordinate bounds; points outside raise ``ValueError``.
    context_shift : float
        When nonzero the functions are evaluated at ``p - shift * (z - z_ref)``
        so the landscape slides with the context.
    """

    objective: Callable
    constraint: Callable
    domain: list
    noise_std_o: float = 0.0
    noise_std_c: float = 0.0
    seed: int = 0
    name: str = "analytic"
    context_shift: float = 0.0
    context_ref: float = 0.0
    calls: int = field(default=0, init=False)

    def __post_init__(self):
        if self.noise_std_o < 0 or self.noise_std_c < 0:
            raise ValueError("noise standard deviations must be >= 0")

    @property
    def description(self) -> dict:
        return {"plant": self.name, "noise_std_o": self.noise_std_o,
                "noise_std_c": self.noise_std_c, "seed": self.seed,
                "context_shift": self.context_shift, "context_ref": self.context_ref}

    def truth(self, point, context=None) -> tuple:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.size != len(self.domain):
            raise ValueError(f"{self.name}: expected {len(self.domain)} coordinates, got {p.size}")
        for v, (lo, hi) in zip(p, self.domain):
            _check_domain(float(v), (lo, hi), self.name)
        if self.context_shift and context is not None:
            p = p - self.context_shift * (float(np.atleast_1d(context)[0]) - self.context_ref)
        arg = p[0] if p.size == 1 else p
        return float(self.objective(arg)), float(self.constraint(arg))

    def evaluate(self, point, context=None) -> tuple:
        o, c = self.truth(point, context)
        if self.noise_std_o > 0 or self.noise_std_c > 0:
            rng = np.random.default_rng([self.seed, self.calls])
            o += self.noise_std_o * rng.standard_normal()
            c += self.noise_std_c * rng.standard_normal()
        self.calls += 1
        return o, c


def make_demo_plant(which: str = "demo1", noise: bool = False, seed: int = 0,
                    context_shift: float = 0.0, context_ref: float = 0.0) -> AnalyticPlant:
    """Demo plant; with ``noise`` the stds are 1 % of each preset's prior std."""
    if which not in ("demo1", "demo2"):
        raise ConfigError(f"unknown demo {which!r}")
    preset = load_preset(which)
    so = sc = 0.0
    if noise:
        so = 0.01 * math.sqrt(preset.objective.amplitude)
        sc = 0.01 * math.sqrt(preset.constraint.amplitude)
    con = demo1_constraint if which == "demo1" else demo2_constraint
    dom = DEMO1_DOMAIN if which == "demo1" else DEMO2_DOMAIN
    # the shifted landscape may be probed slightly outside the nominal domain
    if context_shift:
        dom = (dom[0] - 10.0, dom[1] + 10.0)
    return AnalyticPlant(demo_objective, con, [dom], so, sc, seed, which,
                         context_shift, context_ref)


# ---------------------------------------------------------------------------
# simulator plant
# ---------------------------------------------------------------------------

@dataclass
class NetworkPlant:
    """Gain-delay controller on the thermoacoustic network simulator.

    Grid coordinates are named by ``params``; recognised names are ``n``
    (gain) and ``tau_ms`` (delay in milliseconds).  Missing ones take the
    values in ``fixed``.  Objective is the rms probe pressure in Pa, the
    constraint the rms actuator voltage in V.  Call ``i`` starts from the
    broadband kick seeded with ``[seed, i]``.
    """

    model: object
    params: tuple = ("n", "tau_ms")
    fixed: dict = field(default_factory=dict)
    duration: Optional[float] = None
    seed: int = 0
    calls: int = field(default=0, init=False)

    def __post_init__(self):
        unknown = set(self.params) | set(self.fixed)
        unknown -= {"n", "tau_ms"}
        if unknown:
            raise ConfigError(f"unknown network plant parameters {sorted(unknown)}")
        missing = {"n", "tau_ms"} - set(self.params) - set(self.fixed)
        if missing:
            raise ConfigError(f"network plant needs values for {sorted(missing)}")

    @property
    def description(self) -> dict:
        return {"plant": "ta-network", "params": list(self.params), "fixed": dict(self.fixed),
                "duration": self.duration, "seed": self.seed}

    def controller_setting(self, point) -> tuple:
        vals = dict(self.fixed)
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.size != len(self.params):
            raise ValueError(f"expected {len(self.params)} coordinates, got {p.size}")
        vals.update(zip(self.params, p.tolist()))
        if vals["tau_ms"] < 0:
            raise ValueError("controller delay must be >= 0")
        return float(vals["n"]), float(vals["tau_ms"]) * 1e-3

    def evaluate(self, point, context=None) -> tuple:
        from .network.simulate import SimulationError, measure_plant

        gain, delay = self.controller_setting(point)
        try:
            out = measure_plant(self.model, gain, delay, self.duration, seed=[self.seed, self.calls])
        except SimulationError as exc:
            raise PlantError(str(exc)) from exc
        finally:
            self.calls += 1
        return out


# ---------------------------------------------------------------------------
# external plant
# ---------------------------------------------------------------------------

def format_request(point, context=None) -> str:
    """``EVAL p1 p2 ... [| z1 ...]`` with exactly round-tripping floats."""
    coords = " ".join(repr(float(v)) for v in np.atleast_1d(point))
    line = f"EVAL {coords}"
    if context is not None:
        line += " | " + " ".join(repr(float(v)) for v in np.atleast_1d(context))
    return line


def parse_request(line: str) -> tuple:
    """Inverse of :func:`format_request`: ``(point, context or None)``."""
    parts = line.strip().split("|")
    head = parts[0].split()
    if not head or head[0] != "EVAL":
        raise ValueError(f"not an EVAL request: {line!r}")
    point = tuple(float(v) for v in head[1:])
    context = tuple(float(v) for v in parts[1].split()) if len(parts) > 1 else None
    return point, context


def parse_response(line: str) -> tuple:
    raw = line.rstrip("\n")
    parts = raw.split()
    if len(parts) >= 1 and parts[0] == "ERR":
        raise PlantError(f"external plant reported an error: {raw[3:].strip()}", raw)
    if len(parts) != 3 or parts[0] != "OK":
        raise PlantError(f"malformed external plant response {raw!r}", raw)
    try:
        o, c = float(parts[1]), float(parts[2])
    except ValueError:
        raise PlantError(f"malformed external plant response {raw!r}", raw) from None
    if not (math.isfinite(o) and math.isfinite(c)):
        raise PlantError(f"external plant returned non-finite values {raw!r}", raw)
    return o, c


class ExternalPlant:
    """Serialized request/response adapter to an external measurement loop.

    Parameters
    ----------
    command : str or list, optional
        Long-running subprocess that reads requests on stdin and writes one
        response line per request on stdout.
    mailbox : path, optional
        Directory used instead of a subprocess: the request is written to
        ``request.txt`` and the answer expected in ``response.txt``.
    timeout : float
        Seconds to wait for each response.
    """

    def __init__(self, command=None, mailbox=None, timeout: float = 60.0,
                 poll_interval: float = 0.05):
        if (command is None) == (mailbox is None):
            raise ConfigError("external plant needs exactly one of command or mailbox")
        if timeout <= 0:
            raise ConfigError("external plant timeout must be > 0")
        self.command = shlex.split(command) if isinstance(command, str) else command
        self.mailbox = Path(mailbox) if mailbox is not None else None
        self.timeout = float(timeout)
        self.poll_interval = poll_interval
        self._proc = None

    @property
    def description(self) -> dict:
        return {"plant": "external", "command": self.command,
                "mailbox": None if self.mailbox is None else str(self.mailbox),
                "timeout": self.timeout}

    # subprocess transport
    def _ensure_proc(self):
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE,
                                              stdout=subprocess.PIPE, text=True, bufsize=1)
            except OSError as exc:
                raise PlantError(f"cannot start external plant {self.command}: {exc}") from exc
        return self._proc

    def _ask_process(self, request: str) -> str:
        proc = self._ensure_proc()
        try:
            proc.stdin.write(request + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise PlantError(f"external plant closed its input: {exc}") from exc
        sel = selectors.DefaultSelector()
        sel.register(proc.stdout, selectors.EVENT_READ)
        try:
            if not sel.select(self.timeout):
                raise PlantError(f"external plant did not answer within {self.timeout} s")
        finally:
            sel.close()
        line = proc.stdout.readline()
        if not line:
            raise PlantError("external plant exited without answering")
        return line

    # mailbox transport
    def _ask_mailbox(self, request: str) -> str:
        self.mailbox.mkdir(parents=True, exist_ok=True)
        req, resp = self.mailbox / "request.txt", self.mailbox / "response.txt"
        if resp.exists():
            resp.unlink()
        tmp = self.mailbox / "request.txt.tmp"
        tmp.write_text(request + "\n", encoding="utf-8")
        os.replace(tmp, req)
        deadline = time.monotonic() + self.timeout
        while time.monotonic() < deadline:
            if resp.exists():
                text = resp.read_text(encoding="utf-8")
                if text.endswith("\n"):
                    resp.unlink()
                    return text.splitlines()[0] if text.strip() else text
            time.sleep(self.poll_interval)
        raise PlantError(f"no response in {resp} within {self.timeout} s")

    def evaluate(self, point, context=None) -> tuple:
        request = format_request(point, context)
        line = self._ask_process(request) if self.command else self._ask_mailbox(request)
        try:
            return parse_response(line)
        except PlantError as exc:
            logger.error("external plant payload: %r", exc.payload)
            raise

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperparameterPreset:
    """Kernel settings, thresholds and grid for one optimization setting.

    ``prior_mean`` of both kernels is left unset (``None``); the campaign
    driver fills in the mean initializer objective and ``T``.
    """

    name: str
    objective: KernelSpec
    constraint: KernelSpec
    safety_threshold: float
    grid_bounds: tuple
    grid_counts: tuple
    param_names: tuple
    objective_threshold: Optional[float] = None
    fixed: dict = field(default_factory=dict)
    init_points: tuple = ()
    source: str = ""

    def grid(self, context=None):
        from .safe_bo import ParameterGrid

        return ParameterGrid.uniform(self.grid_bounds, self.grid_counts, context, self.param_names)


def _spec(theta, lengths, noise):
    return KernelSpec(theta, tuple(lengths), noise, prior_mean=None)


_SIM_1D = dict(objective=_spec(450.0, [0.2], 15.0), constraint=_spec(0.65, [0.4], 0.05),
               safety_threshold=1.0, objective_threshold=450.0,
               grid_bounds=((-1.5, 4.0),), grid_counts=(100,), param_names=("n",),
               fixed={"tau_ms": 1.55}, init_points=((-1.5,), (0.0,), (3.5,)))

_SIM_2D_INIT = ((0.0, 0.5), (0.0, 3.75), (0.0, 7.0), (2.5, 0.5), (2.5, 3.75), (2.5, 7.0),
                (1.25, 3.75), (1.0, 3.0), (1.5, 3.0), (1.0, 4.5), (1.5, 4.5))

PRESETS = {
    "demo1": HyperparameterPreset(
        "demo1", _spec(100.0 ** 2, [1.0], 1.0), _spec(2.0 ** 2, [1.5], 0.02), 4.0,
        ((0.0, 10.0),), (200,), ("p",), init_points=((1.6,), (2.0,), (2.4,)),
        source="package default for the first analytic demo"),
    "demo2": HyperparameterPreset(
        "demo2", _spec(100.0 ** 2, [1.0], 1.0), _spec(2.0 ** 2, [1.5], 0.02), 4.0,
        ((0.0, 16.0),), (321,), ("p",), init_points=((1.6,), (2.0,), (2.4,)),
        source="package default for the second analytic demo"),
    "sim-1d": HyperparameterPreset("sim-1d", **_SIM_1D, source="simulation, gain only"),
    "sim-2d": HyperparameterPreset(
        "sim-2d", _spec(450.0, [0.2, 0.4], 30.0), _spec(0.65, [0.4, 1.0], 0.05), 1.0,
        ((0.0, 2.5), (0.5, 7.0)), (50, 50), ("n", "tau_ms"), objective_threshold=450.0,
        init_points=_SIM_2D_INIT, source="simulation, gain and delay (length scales from the text)"),
    "sim-2d-table": HyperparameterPreset(
        "sim-2d-table", _spec(450.0, [0.2, 0.75], 30.0), _spec(0.65, [0.4, 0.75], 0.05), 1.0,
        ((0.0, 2.5), (0.5, 7.0)), (50, 50), ("n", "tau_ms"), objective_threshold=450.0,
        init_points=_SIM_2D_INIT, source="simulation, gain and delay (length scales from the table)"),
    "exp-1d": HyperparameterPreset(
        "exp-1d", _spec(450.0, [0.2], 15.0), _spec(0.65, [0.4], 0.05), 1.0,
        ((-1.5, 4.0),), (100,), ("n",), objective_threshold=450.0, fixed={"tau_ms": 1.5},
        init_points=((-1.5,), (0.0,), (4.5,)), source="experiment, gain only"),
    "exp-2d": HyperparameterPreset(
        "exp-2d", _spec(450.0, [0.2, 0.3], 30.0), _spec(0.65, [0.4, 1.0], 0.075), 1.0,
        ((0.0, 3.5), (0.5, 6.0)), (50, 50), ("n", "tau_ms"), objective_threshold=450.0,
        source="experiment, gain and delay"),
    "nrpd-2d": HyperparameterPreset(
        "nrpd-2d", _spec(15.0, [0.5, 2.0], 1.2), _spec(300.0, [0.5, 2.0], 20.0), 500.0,
        ((7.5, 9.0), (40.0, 56.0)), (100, 9), ("voltage_kV", "power_split_pct"),
        source="plasma discharge: NO emissions vs rms pressure"),
}


def list_presets() -> list:
    return sorted(PRESETS)


def load_preset(name: str) -> HyperparameterPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(list_presets())}") from None
