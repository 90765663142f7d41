"""Network elements, configuration parsing and assembly into kernel arrays."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from ..errors import ConfigError
from .kernels import AREA_JUMP, FLAME, PLAIN, SPEAKER

logger = logging.getLogger(__name__)


class NetworkConfigError(ConfigError):
    """Invalid network description."""


@dataclass
class Duct:
    length: float
    sound_speed: float
    density: float
    area: float = 1.0
    name: str = ""
    delay: int = 0  # samples, set by assembly

    @property
    def impedance(self) -> float:
        return self.density * self.sound_speed


@dataclass
class AreaJump:
    area_up: float
    area_down: float
    area_neck: float
    eq_length: float
    loss_coeff: float
    neck_velocity: float
    name: str = ""


@dataclass
class Flame:
    T_u: float
    T_d: float
    ftf_delay: float
    ftf_bandwidth: float
    saturation: float
    name: str = ""
    rho_c_ratio: float = 1.0  # (rho c)_d / (rho c)_u, set by assembly


@dataclass
class LoudspeakerJunction:
    """Membrane velocity ``gain * V`` (m/s per V), injected over ``area_ratio``
    of the duct cross section."""

    gain: float = -0.6
    clip: float = 5.0
    area_ratio: float = 1.0
    name: str = ""


@dataclass
class GainDelayController:
    gain: float = 0.0
    delay: float = 0.0  # seconds

    def delay_samples(self, fs: float) -> int:
        return int(round(self.delay * fs))


@dataclass
class SimulationSettings:
    duration: float = 5.0
    warmup: float = 1.0
    kick_std: float = 1e-3
    forcing_std: float = 0.0


ELEMENT_TYPES = {
    "duct": Duct,
    "area_jump": AreaJump,
    "flame": Flame,
    "loudspeaker": LoudspeakerJunction,
}


@dataclass
class NetworkModel:
    """Assembled network ready for stepping.

    ``ducts[i]`` and ``ducts[i + 1]`` are joined by ``junctions[i]``.
    """

    ducts: list
    junctions: list
    fs: float
    upstream_reflection: float
    downstream_reflection: float
    controller: GainDelayController
    probe_duct: int
    upstream_pole: float = 0.0
    downstream_pole: float = 0.0
    sensor_gain: float = 1.0  # controller input per unit p'/(rho c)
    settings: SimulationSettings = field(default_factory=SimulationSettings)
    max_state_dim: int = 4000
    config: dict = field(default_factory=dict, repr=False)

    # kernel-ready arrays
    delays: np.ndarray = field(default=None, repr=False)
    offsets: np.ndarray = field(default=None, repr=False)
    jtype: np.ndarray = field(default=None, repr=False)
    jpar: np.ndarray = field(default=None, repr=False)
    ftf_delay_samples: int = 0

    def __post_init__(self):
        self.boundary_params = np.array([self.upstream_reflection, self.upstream_pole,
                                         self.downstream_reflection, self.downstream_pole])
        self.delays = np.array([d.delay for d in self.ducts], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.delays)[:-1]]).astype(np.int64)
        self.jtype = np.zeros(len(self.junctions), dtype=np.int64)
        self.jpar = np.zeros((max(len(self.junctions), 1), 4))
        for j, elem in enumerate(self.junctions):
            up, down = self.ducts[j], self.ducts[j + 1]
            if elem is None:
                self.jtype[j] = PLAIN
                self.jpar[j, :2] = (up.impedance / down.impedance, up.area / down.area)
            elif isinstance(elem, LoudspeakerJunction):
                self.jtype[j] = SPEAKER
            elif isinstance(elem, AreaJump):
                self.jtype[j] = AREA_JUMP
                c = up.sound_speed
                au = elem.area_neck / elem.area_up
                ad = elem.area_neck / elem.area_down
                res = au + ad + elem.neck_velocity * elem.loss_coeff / c
                self.jpar[j] = (au, ad, res, elem.eq_length / c * self.fs)
            elif isinstance(elem, Flame):
                self.jtype[j] = FLAME
                # pressure continuity across the compact flame
                r = up.impedance / down.impedance
                kb = 2.0 * self.fs / elem.ftf_bandwidth
                self.jpar[j] = (r, elem.T_d / elem.T_u - 1.0, elem.saturation, kb)
                self.ftf_delay_samples = int(round(elem.ftf_delay * self.fs))

    @property
    def speaker(self) -> Optional[LoudspeakerJunction]:
        for elem in self.junctions:
            if isinstance(elem, LoudspeakerJunction):
                return elem
        return None

    @property
    def flame(self) -> Optional[Flame]:
        for elem in self.junctions:
            if isinstance(elem, Flame):
                return elem
        return None

    @property
    def probe_impedance(self) -> float:
        return self.ducts[self.probe_duct].impedance

    def with_controller(self, gain: float, delay: float) -> "NetworkModel":
        """Shallow copy with different controller settings."""
        return replace(self, controller=GainDelayController(gain, delay))

    def state_size(self) -> int:
        return int(2 * self.delays.sum() + 2 * len(self.junctions)
                   + max(self.ftf_delay_samples, 1)
                   + max(self.controller.delay_samples(self.fs), 1))


def _build_element(spec: dict):
    spec = dict(spec)
    kind = spec.pop("type", None)
    if kind not in ELEMENT_TYPES:
        raise NetworkConfigError(f"unknown element type {kind!r}")
    try:
        return ELEMENT_TYPES[kind](**spec)
    except TypeError as exc:
        raise NetworkConfigError(f"bad parameters for {kind}: {exc}") from None


def _validate(elem):
    if isinstance(elem, Duct):
        if elem.length <= 0 or elem.sound_speed <= 0 or elem.density <= 0 or elem.area <= 0:
            raise NetworkConfigError(f"duct {elem.name!r}: length, c, rho, area must be > 0")
    elif isinstance(elem, AreaJump):
        if min(elem.area_up, elem.area_down, elem.area_neck) <= 0:
            raise NetworkConfigError("area jump areas must be > 0")
        if elem.eq_length < 0 or elem.loss_coeff < 0:
            raise NetworkConfigError("area jump eq_length and loss_coeff must be >= 0")
    elif isinstance(elem, Flame):
        if not elem.T_d >= elem.T_u > 0:
            raise NetworkConfigError("flame needs T_d >= T_u > 0")
        if elem.ftf_bandwidth <= 0 or elem.ftf_delay < 0 or elem.saturation <= 0:
            raise NetworkConfigError("flame needs bandwidth > 0, delay >= 0, saturation > 0")
    elif isinstance(elem, LoudspeakerJunction):
        if elem.clip <= 0:
            raise NetworkConfigError("loudspeaker clip limit must be > 0")
        if elem.area_ratio <= 0:
            raise NetworkConfigError("loudspeaker area_ratio must be > 0")


def assemble_network(config: dict) -> NetworkModel:
    """Build a :class:`NetworkModel` from a configuration mapping.

    The element list must alternate duct / junction; two consecutive ducts are
    joined by an implicit plain junction.  Duct lengths are snapped to whole
    sample delays and each adjustment is logged.
    """
    config = copy.deepcopy(config)
    fs = float(config.get("fs", 10_000.0))
    elements = [_build_element(e) for e in config.get("elements", [])]
    for e in elements:
        _validate(e)
    if not elements or not isinstance(elements[0], Duct) or not isinstance(elements[-1], Duct):
        raise NetworkConfigError("element chain must start and end with a duct")

    ducts, junctions = [], []
    pending = None
    for elem in elements:
        if isinstance(elem, Duct):
            if ducts:
                junctions.append(pending)
            ducts.append(elem)
            pending = None
        else:
            if pending is not None or not ducts:
                raise NetworkConfigError(
                    f"junction {type(elem).__name__} is not between two ducts")
            pending = elem
    if pending is not None:
        raise NetworkConfigError("chain ends with a dangling junction")

    n_speakers = sum(isinstance(j, LoudspeakerJunction) for j in junctions)
    n_flames = sum(isinstance(j, Flame) for j in junctions)
    if n_speakers > 1 or n_flames > 1:
        raise NetworkConfigError("at most one loudspeaker and one flame are supported")

    for j, elem in enumerate(junctions):
        up, down = ducts[j], ducts[j + 1]
        if isinstance(elem, (LoudspeakerJunction, AreaJump)) and not math.isclose(
                up.impedance, down.impedance, rel_tol=1e-9):
            raise NetworkConfigError(
                f"{type(elem).__name__} must join ducts with the same rho*c")
        if isinstance(elem, Flame):
            elem.rho_c_ratio = down.impedance / up.impedance
            if round(elem.ftf_delay * fs) < 1:
                raise NetworkConfigError("flame delay must be at least one sample")

    # highest mode of interest defaults to the controller-excitable second mode
    f_max = float(config.get("max_mode_frequency", 500.0))
    if fs < 20.0 * f_max:
        raise NetworkConfigError(f"fs={fs} Hz is below 20x the highest mode of interest ({f_max} Hz)")

    for d in ducts:
        d.delay = int(round(d.length / d.sound_speed * fs))
        if d.delay < 1:
            raise NetworkConfigError(f"duct {d.name!r} shorter than one sample at fs={fs}")
        snapped = d.delay * d.sound_speed / fs
        if not math.isclose(snapped, d.length, rel_tol=1e-12):
            logger.info("duct %r length %.6g m snapped to %.6g m (%d samples)",
                        d.name, d.length, snapped, d.delay)
        d.length = snapped

    probe = config.get("probe", "after_flame")
    if probe == "after_flame":
        flame_idx = [j for j, e in enumerate(junctions) if isinstance(e, Flame)]
        probe_duct = flame_idx[0] + 1 if flame_idx else len(ducts) - 1
    else:
        probe_duct = int(probe)
        if not 0 <= probe_duct < len(ducts):
            raise NetworkConfigError(f"probe duct index {probe_duct} out of range")

    ctl = dict(config.get("controller", {}))
    sensor_gain = float(ctl.pop("sensor_gain", 1.0))
    unknown = set(ctl) - {"gain", "delay"}
    if unknown:
        raise NetworkConfigError(f"unknown controller keys {sorted(unknown)}")
    controller = GainDelayController(float(ctl.get("gain", 0.0)), float(ctl.get("delay", 0.0)))
    if controller.delay < 0:
        raise NetworkConfigError("controller delay must be >= 0")
    if not sensor_gain > 0:
        raise NetworkConfigError("controller sensor_gain must be > 0")
    settings = SimulationSettings(**config.get("simulation", {}))

    r_in = float(config.get("upstream_reflection", 1.0))
    r_out = float(config.get("downstream_reflection", -1.0))
    b_in = float(config.get("upstream_pole", 0.0))
    b_out = float(config.get("downstream_pole", 0.0))
    if not (0.0 <= b_in < 1.0 and 0.0 <= b_out < 1.0):
        raise NetworkConfigError("boundary poles must lie in [0, 1)")
    model = NetworkModel(ducts, junctions, fs, r_in, r_out, controller, probe_duct,
                         b_in, b_out, sensor_gain, settings, int(config.get("max_state_dim", 4000)), config)
    return model


def load_network_config(path: Union[str, Path, None] = None) -> dict:
    """Read a YAML network description; ``None`` loads the shipped default."""
    if path is None:
        text = resources.files("thermosafe.network").joinpath("default_network.yaml").read_text()
    else:
        path = Path(path)
        if not path.exists():
            raise NetworkConfigError(f"network config {path} not found")
        text = path.read_text()
    cfg = yaml.safe_load(text)
    if not isinstance(cfg, dict):
        raise NetworkConfigError("network config must be a mapping")
    return cfg


def default_network(**overrides) -> NetworkModel:
    cfg = load_network_config()
    cfg.update(overrides)
    return assemble_network(cfg)
