"""Non-Markovian open-system dynamics via oscillator-chain mapping,
purified tensor-network evolution and transfer-tensor propagation."""

__version__ = "0.1.0"

from . import models, oracle, spectral, tns, ttm  # noqa: F401
