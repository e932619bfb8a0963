"""Pure-Python scoring kernels; the reference implementation for the compiled ones."""


def score_keys(weights, feats, keys):
    """Sum ``weights[f][k]`` over ``feats`` for each key in ``keys``."""
    out = [0.0] * len(keys)
    get = weights.get
    for f in feats:
        row = get(f)
        if row is None:
            continue
        for idx, k in enumerate(keys):
            w = row.get(k)
            if w is not None:
                out[idx] += w
    return out


def dot_pairs(weights, pairs):
    total = 0.0
    for f, k in pairs:
        row = weights.get(f)
        if row is not None:
            w = row.get(k)
            if w is not None:
                total += w
    return total
