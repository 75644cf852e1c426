"""Laughter-driven humour-rating toolkit.

Pipeline: detect audience laughter in audio clips, score each clip by its
normalized laughter duration, bin scores into 0-4 ratings, mute the
laughter, extract 33-dim per-frame audio features, compute agreement
statistics, and train/evaluate a softmax baseline rater with QWK.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
