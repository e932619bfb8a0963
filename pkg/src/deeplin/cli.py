"""Command-line interface: ``deeplin <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import kernels
from .evaluation import bleu, corpus_stats, format_report, fw_fmeasure
from .features import registry
from .graph import (CorpusError, GoldRealization, format_gold, filter_instance, iter_blocks,
                    load_corpus, parse_instance, read_gold, write_deep, write_gold)
from .learner import (DEFAULT_BEAM, DEFAULT_ITERATIONS, DEFAULT_SEED, DecodeError, OracleError,
                      averaged_copy, beam_decode, oracle_derivation, same_tree, train)
from .morphology import Lexicon
from .perceptron import Model, ModelFormatError
from .pipeline import PipelineModels, run_pipeline, shallow_instance, train_pipeline
from .synth import SynthSpec, generate
from .transition import JOINT, SHALLOW, format_trace, realization

log = logging.getLogger("deeplin")

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _prob(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a probability in [0, 1], got {text}")
    return v


def _lexicon(path: str | None) -> Lexicon:
    return Lexicon.load(path) if path else Lexicon.bundled()


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DEEPLIN_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# decoding with an optional worker pool

_worker: dict = {}


def _init_worker(mode, model, lex, beam):
    _worker.update(mode=mode, model=model, lex=lex, beam=beam)


def _decode_one(g) -> GoldRealization:
    w = _worker
    if w["mode"] == "pipeline":
        return run_pipeline(g, w["model"], w["lex"], w["beam"])
    return realization(beam_decode(g, w["model"], JOINT, w["beam"], lexicon=w["lex"]))


def decode_all(graphs: Sequence, mode: str, model, lex: Lexicon, beam: int,
               threads: int | None = None) -> list[GoldRealization]:
    """Decode every graph; output order always follows input order."""
    threads = _threads() if threads is None else threads
    if threads <= 1 or len(graphs) < 2:
        _init_worker(mode, model, lex, beam)
        return [_decode_one(g) for g in graphs]
    with ProcessPoolExecutor(threads, initializer=_init_worker,
                             initargs=(mode, model, lex, beam)) as pool:
        return list(pool.map(_decode_one, graphs, chunksize=max(1, len(graphs) // (4 * threads))))


def _load_model(mode: str, path: str):
    if mode == "pipeline":
        return PipelineModels.load(path)
    model = Model.load(path)
    if model.mode != JOINT:
        raise UsageError(f"{path}: expected a joint model, found mode {model.mode!r}")
    return model


def _dev_bleu(mode, model, dev, lex, beam) -> float:
    preds = decode_all([g for g, _ in dev], mode, model, lex, beam)
    return bleu([p.words for p in preds], [gold.words for _, gold in dev]).bleu


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args) -> int:
    spec = SynthSpec(args.sentences, args.vocabulary, args.max_nodes, args.p_reentrancy,
                     args.p_tothat, args.p_comma, args.seed)
    lex = _lexicon(args.lexicon)
    data = generate(spec, lex)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_deep(out.with_suffix(".deep"), [g for g, _ in data])
    write_gold(out.with_suffix(".gold"), [gold for _, gold in data])
    lex.dump(out.with_suffix(".lexicon.tsv"))
    print(f"wrote {len(data)} instances to {out.with_suffix('.deep')}, "
          f"{out.with_suffix('.gold')} and {out.with_suffix('.lexicon.tsv')}")
    return OK


def _train_model(mode, corpus, lex, beam, iterations, seed,
                 on_iteration: Callable[[int, object], None] | None = None):
    if mode == "pipeline":
        cb = None if on_iteration is None else (lambda it, models: on_iteration(it, models))
        return train_pipeline(corpus, beam, iterations, seed, lex, on_iteration=cb)
    cb = None if on_iteration is None else (lambda it, m, counts: on_iteration(it, averaged_copy(m)))
    return train(corpus, JOINT, beam, iterations, seed, lex, on_iteration=cb)


def cmd_train(args) -> int:
    lex = _lexicon(args.lexicon)
    corpus = load_corpus(args.corpus, args.gold)
    kept = [(g, gold) for g, gold in corpus if filter_instance(g, gold).kept]
    if len(kept) < len(corpus):
        print(f"discarded {len(corpus) - len(kept)} of {len(corpus)} instances", file=sys.stderr)
    dev = load_corpus(args.dev_corpus, args.dev_gold) if args.dev_corpus else None
    start = time.perf_counter()

    def report(it, model):
        line = f"iteration {it}"
        if dev is not None:
            line += f"\tdev BLEU={_dev_bleu(args.mode, model, dev, lex, args.beam):.2f}"
        print(f"{line}\t{time.perf_counter() - start:.1f}s", flush=True)

    model = _train_model(args.mode, kept, lex, args.beam, args.iterations, args.seed, report)
    model.save(args.model)
    print(f"saved {args.mode} model to {args.model}")
    return OK


def _read_graphs(path: str) -> list:
    """Parse each block separately so one bad instance does not sink the file."""
    text = Path(path).read_text(encoding="utf-8")
    out = []
    for lineno, block in iter_blocks(text):
        try:
            out.append(parse_instance(block, lineno))
        except CorpusError as exc:
            out.append(exc)
    return out


def cmd_generate(args) -> int:
    lex = _lexicon(args.lexicon)
    model = _load_model(args.mode, args.model)
    items = _read_graphs(args.corpus)
    graphs = [g for g in items if not isinstance(g, Exception)]
    preds = iter(decode_all(graphs, args.mode, model, lex, args.beam))
    status = OK
    lines, trees = [], []
    for i, item in enumerate(items, 1):
        if isinstance(item, Exception):
            print(f"instance {i}: {item}", file=sys.stderr)
            lines.append("")
            trees.append("")
            status = FAILED
            continue
        pred = next(preds)
        lines.append(" ".join(pred.words))
        trees.append(format_gold(pred))
    text = "".join(line + "\n" for line in lines)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.trees:
        Path(args.trees).write_text("".join(t + "\n" for t in trees), encoding="utf-8")
    return status


def cmd_evaluate(args) -> int:
    refs = read_gold(args.gold)
    if args.pred:
        preds = read_gold(args.pred)
        hyps = [p.words for p in preds]
    else:
        preds = None
        hyps = [line.split() for line in Path(args.hyp).read_text(encoding="utf-8").splitlines()]
    if len(hyps) != len(refs):
        raise UsageError(f"{len(hyps)} hypotheses but {len(refs)} references")
    report = bleu(hyps, [r.words for r in refs])
    print(format_report(report, fw_fmeasure(preds, refs) if preds is not None else None))
    if args.verbose:
        print(report)
    return OK


def _check_one(g, gold, mode, lex) -> tuple[int, str]:
    final = oracle_derivation(g, gold, mode, lexicon=lex, check=True)
    if not same_tree(realization(final), gold, labels=True):
        raise OracleError("replay does not reproduce the gold tree", final.step)
    return sum(1 for a in final.actions() if a.kind != "ID"), format_trace(final)


def cmd_oracle_check(args) -> int:
    lex = _lexicon(args.lexicon)
    corpus = load_corpus(args.corpus, args.gold)
    modes = [JOINT, SHALLOW] if args.mode == "both" else [args.mode]
    failures = 0
    for i, (g, gold) in enumerate(corpus, 1):
        verdict = filter_instance(g, gold)
        if not verdict.kept:
            print(f"{i}\t{verdict}")
            continue
        parts = [f"{i}\t{verdict}"]
        traces = []
        for mode in modes:
            try:
                if mode == SHALLOW:
                    n, trace = _check_one(*shallow_instance(g, gold), SHALLOW, lex)
                else:
                    n, trace = _check_one(g, gold, JOINT, lex)
                parts.append(f"{mode}={n} actions, replay OK")
                traces.append((mode, trace))
            except (OracleError, ValueError) as exc:
                failures += 1
                step = getattr(exc, "step", None)
                parts.append(f"{mode}=FAILED" + (f" at step {step}" if step is not None else "") + f": {exc}")
        print("\t".join(parts))
        if args.trace:
            for mode, trace in traces:
                print(f"# {mode} derivation")
                print(trace)
    print(f"{len(corpus)} instances, {failures} failures")
    return FAILED if failures else OK


def cmd_ablate_beam(args) -> int:
    lex = _lexicon(args.lexicon)
    dev = load_corpus(args.dev_corpus, args.dev_gold)
    frozen = _load_model(JOINT, args.model) if args.model else None
    corpus = load_corpus(args.corpus, args.gold) if args.corpus else None
    if frozen is None and corpus is None:
        raise UsageError("ablate-beam needs --model or --corpus/--gold")
    print("beam\tBLEU\tmean_score\tseconds")
    for k in args.beams:
        start = time.perf_counter()
        model = frozen or train(corpus, JOINT, k, args.iterations, args.seed, lex)
        finals = [beam_decode(g, model, JOINT, k, lexicon=lex) for g, _ in dev]
        report = bleu([realization(s).words for s in finals], [gold.words for _, gold in dev])
        mean = sum(s.score for s in finals) / max(len(finals), 1)
        print(f"{k}\t{report.bleu:.2f}\t{mean:.4f}\t{time.perf_counter() - start:.1f}", flush=True)
    return OK


def cmd_inspect(args) -> int:
    if args.templates:
        for t in registry():
            print(f"{t.group}\t{t.tid}\t{'+'.join(t.atoms)}")
    if args.model:
        path = Path(args.model)
        if path.is_dir():
            m = PipelineModels.load(path)
            print(f"pipeline bundle: linear={len(m.linear)} weights, {len(m.morph)} morphology classifiers")
        else:
            m = Model.load(path)
            print(f"mode={m.mode} weights={len(m)} meta={sorted(m.meta)}")
    if args.corpus:
        if not args.gold:
            raise UsageError("inspect --corpus also needs --gold")
        for key, value in corpus_stats(load_corpus(args.corpus, args.gold)).items():
            print(f"{key}\t{value:.2f}" if isinstance(value, float) else f"{key}\t{value}")
    if args.backend:
        print(f"backend={kernels.BACKEND}")
    return OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deeplin", description="Deep-graph surface realization.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def corpus_args(sp, required=True):
        sp.add_argument("--corpus", required=required, help="deep graph file")
        sp.add_argument("--gold", required=required, help="gold realization file")
        sp.add_argument("--lexicon", help="lexicon TSV (default: bundled toy lexicon)")

    s = sub.add_parser("synth", help="generate a synthetic corpus")
    s.add_argument("--sentences", type=int, default=100)
    s.add_argument("--vocabulary", type=_positive, default=200)
    s.add_argument("--max-nodes", type=_positive, default=16)
    s.add_argument("--p-reentrancy", type=_prob, default=0.3)
    s.add_argument("--p-tothat", type=_prob, default=0.4)
    s.add_argument("--p-comma", type=_prob, default=0.3)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--lexicon")
    s.add_argument("-o", "--output", default="synth", help="output prefix")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train a joint model or a pipeline bundle")
    corpus_args(s)
    s.add_argument("--mode", choices=["joint", "pipeline"], default="joint")
    s.add_argument("--beam", type=_positive, default=DEFAULT_BEAM)
    s.add_argument("--iterations", type=_positive, default=DEFAULT_ITERATIONS)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--dev-corpus")
    s.add_argument("--dev-gold")
    s.add_argument("--model", required=True, help="output model file (joint) or directory (pipeline)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("generate", help="realize deep graphs with a trained model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--lexicon")
    s.add_argument("--mode", choices=["joint", "pipeline"], default="joint")
    s.add_argument("--model", required=True)
    s.add_argument("--beam", type=_positive, default=DEFAULT_BEAM)
    s.add_argument("-o", "--output", help="sentences, one per line (default: stdout)")
    s.add_argument("--trees", help="also write predicted trees in gold format")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("evaluate", help="BLEU and function-word F-measure")
    s.add_argument("--gold", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--hyp", help="tokenized sentences, one per line")
    g.add_argument("--pred", help="predicted trees in gold format (enables F-measure)")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("oracle-check", help="filter instances and verify oracle derivations")
    corpus_args(s)
    s.add_argument("--mode", choices=["joint", "shallow", "both"], default="both")
    s.add_argument("--trace", action="store_true", help="print derivation tables")
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("ablate-beam", help="dev BLEU as a function of beam size")
    corpus_args(s, required=False)
    s.add_argument("--dev-corpus", required=True)
    s.add_argument("--dev-gold", required=True)
    s.add_argument("--model", help="frozen joint model; otherwise one model is trained per beam")
    s.add_argument("--beams", type=lambda t: [_positive(x) for x in t.split(",")], default=[1, 4, 16, 64])
    s.add_argument("--iterations", type=_positive, default=DEFAULT_ITERATIONS)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=cmd_ablate_beam)

    s = sub.add_parser("inspect", help="show templates, model or corpus summaries")
    s.add_argument("--templates", action="store_true")
    s.add_argument("--model")
    s.add_argument("--corpus")
    s.add_argument("--gold")
    s.add_argument("--backend", action="store_true", help="show the scoring kernel in use")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, CorpusError, ModelFormatError, OSError, ValueError, DecodeError) as exc:
        print(f"deeplin: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
