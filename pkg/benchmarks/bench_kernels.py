"""Compare the compiled and pure-Python scoring kernels.

    python3 benchmarks/bench_kernels.py [--sentences 60] [--repeat 5]

Part one times the two kernel functions on feature lists taken from real
decoder states.  Part two times whole beam decodes in a fresh interpreter per
backend, switched with DEEPLIN_PURE_PYTHON.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

from deeplin import _pykernels
from deeplin.constraints import legal_actions
from deeplin.features import Extractor
from deeplin.learner import train
from deeplin.morphology import Lexicon
from deeplin.synth import SynthSpec, generate
from deeplin.transition import JOINT, apply, initial_state

try:
    from deeplin import _ckernels
except ImportError:
    _ckernels = None

DECODE = """
import json, sys, time
from deeplin import kernels
from deeplin.learner import beam_decode, train
from deeplin.morphology import Lexicon
from deeplin.synth import SynthSpec, generate
lex = Lexicon.bundled()
data = generate(SynthSpec(sentences={n}, seed=7), lex)
model = train(data, k=4, iterations=2, lexicon=lex)
start = time.perf_counter()
for g, _ in data:
    beam_decode(g, model, k={k}, lexicon=lex)
print(json.dumps({{"backend": kernels.BACKEND, "seconds": time.perf_counter() - start}}))
"""


def workload(n):
    lex = Lexicon.bundled()
    data = generate(SynthSpec(sentences=n, seed=7), lex)
    model = train(data, k=4, iterations=2, lexicon=lex)
    ex = Extractor()
    calls, pairs = [], []
    for g, _ in data:
        s = initial_state(g, JOINT, lex)
        while True:
            acts = legal_actions(s)
            if not acts:
                break
            feats, _ = ex.state(s)
            calls.append((feats, list(dict.fromkeys(a.key for a in acts))))
            pairs.extend(ex.pairs(s, acts[0]))
            s = apply(s, acts[0])
    return model.weights, calls, pairs


def bench(mod, weights, calls, pairs, repeat):
    def run_score():
        for feats, keys in calls:
            mod.score_keys(weights, feats, keys)

    def run_dot():
        mod.dot_pairs(weights, pairs)

    return (min(timeit.repeat(run_score, number=1, repeat=repeat)),
            min(timeit.repeat(run_dot, number=1, repeat=repeat)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=60)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--beam", type=int, default=16)
    args = ap.parse_args()

    weights, calls, pairs = workload(args.sentences)
    print(f"{len(calls)} score_keys calls, {len(pairs)} dot_pairs entries")
    py = bench(_pykernels, weights, calls, pairs, args.repeat)
    print(f"python  score_keys {py[0] * 1e3:8.2f} ms   dot_pairs {py[1] * 1e3:8.2f} ms")
    if _ckernels is None:
        print("cython  (not built)")
    else:
        cy = bench(_ckernels, weights, calls, pairs, args.repeat)
        print(f"cython  score_keys {cy[0] * 1e3:8.2f} ms   dot_pairs {cy[1] * 1e3:8.2f} ms")
        print(f"speedup score_keys {py[0] / cy[0]:.2f}x   dot_pairs {py[1] / cy[1]:.2f}x")

    print(f"\nfull decode, {args.sentences} sentences, beam {args.beam}")
    code = DECODE.format(n=args.sentences, k=args.beam)
    for pure in ("1", ""):
        env = dict(os.environ, DEEPLIN_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        res = json.loads(out.stdout.strip().splitlines()[-1])
        print(f"{res['backend']:7s} {res['seconds']:.2f} s")


if __name__ == "__main__":
    main()
