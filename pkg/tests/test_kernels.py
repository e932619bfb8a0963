import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deeplin import _pykernels, kernels

ckernels = pytest.importorskip("deeplin._ckernels", reason="compiled kernel not built")

FEATS = [f"f{i}" for i in range(8)]
KEYS = ["LA", "RA", "SH", "SH:x:NN", "IN"]
weight = st.floats(-100, 100, allow_nan=False)
tables = st.dictionaries(st.sampled_from(FEATS), st.dictionaries(st.sampled_from(KEYS), weight), max_size=8)


@settings(max_examples=300, deadline=None)
@given(tables, st.lists(st.sampled_from(FEATS + ["unseen"]), max_size=12),
       st.lists(st.sampled_from(KEYS + ["ID"]), max_size=6))
def test_score_keys_parity(weights, feats, keys):
    assert ckernels.score_keys(weights, feats, keys) == pytest.approx(_pykernels.score_keys(weights, feats, keys))


@settings(max_examples=300, deadline=None)
@given(tables, st.lists(st.tuples(st.sampled_from(FEATS + ["unseen"]), st.sampled_from(KEYS)), max_size=12))
def test_dot_pairs_parity(weights, pairs):
    assert ckernels.dot_pairs(weights, pairs) == pytest.approx(_pykernels.dot_pairs(weights, pairs))


def test_empty_inputs():
    for mod in (ckernels, _pykernels):
        assert mod.score_keys({}, [], []) == []
        assert mod.score_keys({"a": {"K": 1.0}}, ["a", "a"], ["K", "J"]) == [2.0, 0.0]
        assert mod.dot_pairs({}, []) == 0.0


def test_backend_flag():
    assert kernels.BACKEND == ("python" if os.environ.get("DEEPLIN_PURE_PYTHON") else "cython")
    env = dict(os.environ, DEEPLIN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from deeplin import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
