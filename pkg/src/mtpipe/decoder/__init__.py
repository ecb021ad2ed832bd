"""Decoding over a pluggable step-scoring model: greedy, beam, top-k sampling."""

from .models import CharVocab, StepModel, ToyCipherModel, rotation_cipher
from .search import Hypothesis, decode_beam, decode_greedy, decode_topk_sample, score_tokens

__all__ = [
    "CharVocab",
    "StepModel",
    "ToyCipherModel",
    "rotation_cipher",
    "Hypothesis",
    "decode_beam",
    "decode_greedy",
    "decode_topk_sample",
    "score_tokens",
]
