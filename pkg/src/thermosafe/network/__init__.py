"""Low-order thermoacoustic network model with a gain-delay controller."""

from .elements import (AreaJump, Duct, Flame, GainDelayController, LoudspeakerJunction,
                       NetworkConfigError, NetworkModel, assemble_network, default_network,
                       load_network_config)
from .linear import EigenMapEntry, analyse, eigenvalue_map, eigenvalues, state_matrix
from .signals import bandpass_histogram, psd
from .simulate import (NetworkState, SimResult, SimulationError, initial_state, measure_plant,
                       simulate, step)
