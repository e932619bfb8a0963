# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled scoring kernels, same contract as ``_pykernels``."""

from cpython.dict cimport PyDict_GetItem
from cpython.object cimport PyObject
from libc.stdlib cimport calloc, free


def score_keys(dict weights, list feats, list keys):
    cdef Py_ssize_t nk = len(keys), i
    cdef PyObject* row
    cdef PyObject* w
    cdef double* acc = <double*>calloc(nk if nk > 0 else 1, sizeof(double))
    if acc is NULL:
        raise MemoryError()
    try:
        for f in feats:
            row = PyDict_GetItem(weights, f)
            if row is NULL:
                continue
            for i in range(nk):
                w = PyDict_GetItem(<dict>row, keys[i])
                if w is not NULL:
                    acc[i] += <double>(<object>w)
        return [acc[i] for i in range(nk)]
    finally:
        free(acc)


def dot_pairs(dict weights, list pairs):
    cdef double total = 0.0
    cdef PyObject* row
    cdef PyObject* w
    for f, k in pairs:
        row = PyDict_GetItem(weights, f)
        if row is not NULL:
            w = PyDict_GetItem(<dict>row, k)
            if w is not NULL:
                total += <double>(<object>w)
    return total
