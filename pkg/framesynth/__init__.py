"""
JaySoft-FrameSynth - Rank-one decompositions of positive operators and frames with prescribed norms.

This package provides tools to:
- Decide whether prescribed weights admit a rank-one decomposition of an operator
- Construct such decompositions and the frames they induce
- Build tight and Parseval frames with prescribed vector norms
- Decompose the identity on l^2 block by block from a weight stream
"""

__version__ = "1.0.0"
__author__ = "JaySoft Development"
__email__ = "info@jaysoft.dev"

from framesynth.core.decomposer import decompose, decompose_operator, synthesize_frame, tight_frame
from framesynth.core.feasibility import check_ffi, check_finite
from framesynth.core.models import SymmetricMatrix, Tolerances, WeightSequence
from framesynth.core.planar import decompose_2d
from framesynth.core.spectral import assemble, eigh

__all__ = [
    "SymmetricMatrix",
    "Tolerances",
    "WeightSequence",
    "eigh",
    "assemble",
    "check_finite",
    "check_ffi",
    "decompose",
    "decompose_operator",
    "synthesize_frame",
    "tight_frame",
    "decompose_2d",
]
