"""Software twin of a frequency-multiplexed massive MIMO channel sounder."""

from ._core import BACKEND as KERNEL_BACKEND
from .dataset import CsidHeader, TaggedCsiRecord, read_csid, write_csid
from .propagation import CsiMatrix, LinkBudget, Scenario
from .rfchain import ChainConfig, CombinerConfig, FilterSpec, FilterTaps
from .waveform import ComplexWaveform, OfdmConfig, SymbolGrid

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "__version__",
    "OfdmConfig", "ComplexWaveform", "SymbolGrid",
    "ChainConfig", "CombinerConfig", "FilterSpec", "FilterTaps",
    "LinkBudget", "Scenario", "CsiMatrix",
    "CsidHeader", "TaggedCsiRecord", "read_csid", "write_csid",
]
