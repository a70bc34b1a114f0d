"""Privacy analysis of FANCI-style domain feature vectors.

Feature extraction, pre-image counting, a feature-to-domain reconstruction
model and the evaluation harness that compares models across sources.
"""

from .domain import DomainName, PublicSuffixList, default_psl, parse_domain
from .edit_distance import damerau_levenshtein, distance, normalized_distance
from .errors import FanciError
from .features import FEATURE_NAMES, extract_normalized, extract_raw, normalize
from .preimage import analyze_features, infer_quantities
from .reconstructor import ModelConfig, build_model, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "DomainName", "PublicSuffixList", "default_psl", "parse_domain",
    "damerau_levenshtein", "distance", "normalized_distance",
    "FanciError",
    "FEATURE_NAMES", "extract_normalized", "extract_raw", "normalize",
    "analyze_features", "infer_quantities",
    "ModelConfig", "build_model", "load_checkpoint", "save_checkpoint", "train",
]
