from .catalog import FeatureCatalog, FeatureDef, default_catalog, load_catalog, load_catalog_files
from .features import (
    FeatureVector,
    count_features,
    mean_word_length,
    tag,
    tag_corpus,
    type_token_ratio,
)
from .rules import MatchSpan

__all__ = [
    "FeatureCatalog",
    "FeatureDef",
    "FeatureVector",
    "MatchSpan",
    "count_features",
    "default_catalog",
    "load_catalog",
    "load_catalog_files",
    "mean_word_length",
    "tag",
    "tag_corpus",
    "type_token_ratio",
]
