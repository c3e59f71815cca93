"""Hot loops with a compiled implementation and a pure-Python fallback.

The compiled extension is used when it was built at install time; setting
``RETRO_OOD_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names the
implementation in use.
"""

import os

from . import _match_py

find_embeddings_py = _match_py.find_embeddings

try:
    if os.environ.get("RETRO_OOD_PURE_PYTHON") == "1":
        raise ImportError("pure-Python backend requested")
    from ._match_cy import find_embeddings as find_embeddings_cy
except ImportError:
    find_embeddings_cy = None

if find_embeddings_cy is not None:
    find_embeddings = find_embeddings_cy
    BACKEND = "cython"
else:
    find_embeddings = find_embeddings_py
    BACKEND = "python"

__all__ = ["BACKEND", "find_embeddings", "find_embeddings_cy", "find_embeddings_py"]
