"""Out-of-distribution retrosynthesis benchmarks and remedies."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def desk_corpus_path() -> Path:
    """Location of the bundled ~500-reaction atom-mapped corpus."""
    return Path(str(resources.files("retro_ood") / "data" / "desk_corpus.tsv"))
