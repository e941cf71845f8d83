"""Complex-baseband chain: downconversion, step libraries, synthesis, equalization, EVM."""

from .downconvert import ComplexBaseband, Downconverter, downconvert
from .equalizer import LinearEqualizer
from .library import StepResponseLibrary, build_step_library
from .link import run_link
from .metrics import evm
from .symbols import SymbolSequence, prbs_symbols
from .synthesis import add_awgn, synthesize_response

__all__ = [
    "ComplexBaseband", "Downconverter", "LinearEqualizer", "StepResponseLibrary",
    "SymbolSequence", "add_awgn", "build_step_library", "downconvert", "evm", "prbs_symbols",
    "run_link", "synthesize_response",
]
