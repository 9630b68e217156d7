"""tsbench: benchmark construction and evaluation for time-series forecasting.

Pipeline stages: corpus loading and window enumeration, automated quality
screening with curator decisions, structural feature extraction and binary
pattern coding, and baseline-normalized rolling-window evaluation with
multi-granular leaderboards.
"""

from tsbench._kernels import IMPLEMENTATION as kernel_implementation

__version__ = "0.1.0"

__all__ = ["kernel_implementation", "__version__"]
