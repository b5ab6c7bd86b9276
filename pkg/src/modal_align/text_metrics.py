"""From-scratch BLEU and ROUGE-L for scoring generated protein descriptions.

Pinned conventions:
  * tokens: lowercase, split on runs of non-alphanumeric characters
  * ROUGE-L: F1 over the LCS (beta = 1)
  * BLEU: up to 4-gram, uniform weights; orders with no candidate n-grams
    are dropped from the geometric mean; a zero precision at order n >= 2
    is smoothed to 1 / (2 * candidate n-gram count); zero unigram precision
    or an empty candidate scores 0; brevity penalty exp(1 - |ref|/|cand|)
    when the candidate is shorter.
"""

from __future__ import annotations

import math
import re
from collections import Counter

_SPLIT_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return [tok for tok in _SPLIT_RE.split(text.lower()) if tok]


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: list[str], reference: list[str], max_n: int = 4) -> float:
    if not candidate:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        cand_ngrams = _ngrams(candidate, n)
        total = sum(cand_ngrams.values())
        if total == 0:
            continue  # vacuous order: candidate too short for any n-gram
        ref_ngrams = _ngrams(reference, n)
        matched = sum(min(count, ref_ngrams[gram]) for gram, count in cand_ngrams.items())
        if matched == 0:
            if n == 1:
                return 0.0
            precision = 1.0 / (2.0 * total)
        else:
            precision = matched / total
        log_sum += math.log(precision)
        orders += 1
    geo_mean = math.exp(log_sum / orders)
    bp = 1.0 if len(candidate) >= len(reference) else math.exp(1.0 - len(reference) / len(candidate))
    return bp * geo_mean


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence length by the standard DP recurrence."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> float:
    if not candidate or not reference:
        return 0.0
    lcs = lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_pair(candidate_text: str, reference_text: str) -> dict[str, float]:
    cand = tokenize(candidate_text)
    ref = tokenize(reference_text)
    return {"rouge_l_f1": rouge_l(cand, ref), "bleu": bleu(cand, ref)}


def score_corpus(
    candidates: dict[str, str],
    references: dict[str, str],
) -> dict[str, float]:
    """Macro-averaged scores over the IDs present in both collections."""
    shared = sorted(set(candidates) & set(references))
    if not shared:
        return {"rouge": 0.0, "bleu": 0.0, "n": 0}
    rouge_total = 0.0
    bleu_total = 0.0
    for pid in shared:
        scores = score_pair(candidates[pid], references[pid])
        rouge_total += scores["rouge_l_f1"]
        bleu_total += scores["bleu"]
    n = len(shared)
    return {"rouge": rouge_total / n, "bleu": bleu_total / n, "n": n}
