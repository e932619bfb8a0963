"""BLEU, function-word F-measure and corpus statistics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .graph import FW_TAGS, DeepGraph, GoldRealization

MAX_N = 4


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _matches(hyp: Sequence[str], ref: Sequence[str], n: int) -> tuple[int, int]:
    h, r = ngrams(hyp, n), ngrams(ref, n)
    return sum(min(c, r[g]) for g, c in h.items()), max(len(hyp) - n + 1, 0)


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    if hyp_len > ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def sentence_bleu(hyp: Sequence[str], ref: Sequence[str]) -> float:
    """BLEU-4 of one sentence, add-one smoothing on 2..4-gram precisions."""
    if not hyp:
        return 0.0
    logp = 0.0
    for n in range(1, MAX_N + 1):
        m, t = _matches(hyp, ref, n)
        if n > 1:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        logp += math.log(m / t) / MAX_N
    return 100.0 * brevity_penalty(len(hyp), len(ref)) * math.exp(logp)


@dataclass
class BleuReport:
    bleu: float
    precisions: list[Fraction]
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    sentences: list[float] = field(default_factory=list)

    def __str__(self) -> str:
        ps = " ".join(f"{float(p) * 100:.2f}" for p in self.precisions)
        return (f"BLEU={self.bleu:.2f} BP={self.brevity_penalty:.4f} "
                f"ratio={self.hyp_length}/{self.ref_length} p1-4={ps}")


def bleu(hyps: Sequence[Sequence[str]], refs: Sequence[Sequence[str]]) -> BleuReport:
    """Corpus BLEU-4 (single reference, case-sensitive tokens), on a 0-100 scale."""
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses but {len(refs)} references")
    match = [0] * MAX_N
    total = [0] * MAX_N
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, MAX_N + 1):
            m, t = _matches(h, r, n)
            match[n - 1] += m
            total[n - 1] += t
    precisions = [Fraction(m, t) if t else Fraction(0) for m, t in zip(match, total)]
    bp = brevity_penalty(hyp_len, ref_len)
    if bp == 0.0 or any(p == 0 for p in precisions):
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / MAX_N)
    return BleuReport(score, precisions, bp, hyp_len, ref_len,
                      [sentence_bleu(h, r) for h, r in zip(hyps, refs)])


# ---------------------------------------------------------------------------
# function words

@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f: float
    predicted: int
    gold: int
    correct: int

    @classmethod
    def from_counts(cls, correct: int, predicted: int, gold: int) -> "PRF":
        if predicted == 0 and gold == 0:
            return cls(100.0, 100.0, 100.0, 0, 0, 0)
        p = 100.0 * correct / predicted if predicted else 0.0
        r = 100.0 * correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f, predicted, gold, correct)


def fw_occurrences(real: GoldRealization) -> Counter:
    """Multiset of (class, head node) over the function-word tokens of a realization."""
    out: Counter = Counter()
    for tok in real.tokens:
        if tok.is_fw:
            head = real.tokens[tok.head - 1].src if tok.head else 0
            out[(tok.src, head)] += 1
    return out


def fw_fmeasure(preds: Iterable[GoldRealization], golds: Iterable[GoldRealization]) -> dict[str, PRF]:
    """Per-class P/R/F (0-100) for TO, THAT and COMMA, pooled over the corpus."""
    correct, predicted, gold = Counter(), Counter(), Counter()
    for p, g in zip(preds, golds, strict=True):
        po, go = fw_occurrences(p), fw_occurrences(g)
        for (cls, _), c in po.items():
            predicted[cls] += c
        for (cls, _), c in go.items():
            gold[cls] += c
        for key, c in po.items():
            correct[key[0]] += min(c, go.get(key, 0))
    return {cls: PRF.from_counts(correct[cls], predicted[cls], gold[cls]) for cls in FW_TAGS}


def format_report(report: BleuReport, fw: dict[str, PRF] | None = None) -> str:
    lines = [f"BLEU={report.bleu:.2f}"]
    for cls in FW_TAGS:
        if fw is not None:
            s = fw[cls]
            lines.append(f"F[{cls}]={s.f:.2f} P={s.precision:.2f} R={s.recall:.2f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# corpus statistics

def corpus_stats(corpus: Sequence[tuple[DeepGraph, GoldRealization]]) -> dict[str, float]:
    nodes = fw = reentrant = 0
    classes: Counter = Counter()
    for g, gold in corpus:
        nodes += len(g.nodes)
        reentrant += sum(1 for n in g.nodes if len(g.parents[n]) > 1)
        for tok in gold.tokens:
            if tok.is_fw:
                fw += 1
                classes[tok.src] += 1
    n = max(len(corpus), 1)
    out = {"sentences": len(corpus), "nodes": nodes, "mean_nodes": nodes / n,
           "reentrant_nodes": reentrant, "function_words": fw}
    for cls in FW_TAGS:
        out[cls] = classes[cls]
    return out
