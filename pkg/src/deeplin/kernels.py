"""Backend selection for the scoring kernels.

The compiled extension is used when it was built; setting
``DEEPLIN_PURE_PYTHON=1`` forces the pure-Python version.
"""

import os

BACKEND = "python"
if not os.environ.get("DEEPLIN_PURE_PYTHON"):
    try:
        from ._ckernels import dot_pairs, score_keys  # noqa: F401
        BACKEND = "cython"
    except ImportError:
        pass
if BACKEND == "python":
    from ._pykernels import dot_pairs, score_keys  # noqa: F401
