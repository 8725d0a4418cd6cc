"""One-shot private rate regions for classical-quantum multiple access channels."""

from importlib import resources

from .channel import (ChannelFile, ControlState, CqMacChannel, build_control_state,
                      load_channel)
from .oneshot import (INF, Bipartition, d_hypo, d_max, d_max_smooth, i_hypo,
                      i_max_smooth)
from .qla import DensityMatrix, partial_trace, tensor
from .split import FiniteDist, split_control_state, split_distribution

__version__ = "0.1.0"


def example_channel(name: str = "qubit_mac") -> ChannelFile:
    """Load one of the channel files bundled with the package."""
    path = resources.files(__package__) / "data" / f"{name}.json"
    with resources.as_file(path) as p:
        return load_channel(p)
