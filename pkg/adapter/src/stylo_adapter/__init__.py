"""stylo-adapter: raw text to CoNLL-U conversion for the stylo toolkit."""

from .builtin import BuiltinPipeline
from .config import AdapterConfig
from .convert import ConversionSummary, convert_text, parse_raw

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "BuiltinPipeline",
    "ConversionSummary",
    "convert_text",
    "parse_raw",
]
