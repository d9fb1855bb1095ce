"""Baseline text-similarity metrics: sentence-level BLEU-4 and ROUGE-1/2/L.

Both use the same tokenizer: lower-case, split on whitespace and punctuation
(a token is a maximal run of word characters).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from enum import Enum

#: Smoothing for n-gram precisions whose match count is zero.
EPS = 1e-9

_TOKEN = re.compile(r"\w+")


class RougeVariant(str, Enum):
    R1 = "R1"
    R2 = "R2"
    RL = "RL"


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str) -> float:
    """Sentence BLEU-4 with uniform weights, brevity penalty, and eps smoothing.

    Zero-match precisions are replaced by EPS; orders longer than the
    candidate are dropped from the geometric mean (so identical strings score
    exactly 1.0 regardless of length).
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0

    log_sum = 0.0
    orders = 0
    for n in range(1, 5):
        cand_ngrams = _ngrams(cand, n)
        total = sum(cand_ngrams.values())
        if total == 0:
            continue
        matched = sum((cand_ngrams & _ngrams(ref, n)).values())
        precision = matched / total if matched else EPS
        log_sum += math.log(precision)
        orders += 1
    if orders == 0:
        return 0.0
    geo_mean = math.exp(log_sum / orders)

    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return brevity * geo_mean


def _f1(overlap: float, cand_total: int, ref_total: int) -> float:
    if cand_total == 0 or ref_total == 0:
        return 0.0
    precision = overlap / cand_total
    recall = overlap / ref_total
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _lcs_length(xs: list[str], ys: list[str]) -> int:
    # single-row DP
    row = [0] * (len(ys) + 1)
    for x in xs:
        prev = 0
        for j, y in enumerate(ys, start=1):
            keep = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = keep
    return row[-1]


def rouge(candidate: str, reference: str, variant: RougeVariant) -> float:
    """ROUGE F1: unigram (R1) or bigram (R2) overlap, or LCS length (RL)."""
    variant = RougeVariant(variant)
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    if variant is RougeVariant.RL:
        lcs = _lcs_length(cand, ref)
        return _f1(lcs, len(cand), len(ref))
    n = 1 if variant is RougeVariant.R1 else 2
    cand_ngrams = _ngrams(cand, n)
    ref_ngrams = _ngrams(ref, n)
    overlap = sum((cand_ngrams & ref_ngrams).values())
    return _f1(overlap, sum(cand_ngrams.values()), sum(ref_ngrams.values()))
