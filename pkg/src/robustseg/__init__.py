"""Robust foreground/background segmentation of mixed-content images.

Smooth backgrounds are modelled as a few low-frequency basis functions
per block; pixels that do not fit the model are foreground.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .basis import BasisKind, BasisSet, make_basis, make_dct_basis, make_poly_basis, zigzag_order
from .errors import (DegenerateSampleError, FixtureError, NoModelError, NumericalDegeneracyError,
                     ParameterError, UnreachableConfidenceError)
from .fitting import Block, FitResult, evaluate_model, fit_least_squares, fit_subset
from .metrics import compute_metrics
from .ransac import RansacParams, RansacResult, adaptive_epsilon, ransac_segment, required_iterations
from .segmenter import (BlockRecord, Mode, SegConfig, flat_check, postprocess_largest_components,
                        segment_block, segment_image, text_over_constant_check)
from .sparse import SparseResult, mask_from_sparse, sparse_decompose
from .baseline import hierarchical_segment, kmeans2
