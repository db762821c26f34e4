"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True, slots=True)
class AdapterConfig:
    """Settings for one conversion run.

    ``model`` picks the backend: ``builtin`` (deterministic rule-based
    pipeline shipped with this package) or ``spacy:<model-name>`` for a
    pinned spaCy pipeline.
    """

    input_dir: Path
    output_dir: Path
    model: str = "builtin"
    batch_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.input_dir.resolve() == self.output_dir.resolve():
            raise ValueError("output directory must differ from input directory")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def doc_id_for(path: Path) -> str:
    """Document ids follow the filename-stem scheme."""
    return path.stem
