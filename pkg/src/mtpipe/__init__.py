"""Machine-translation pipeline toolkit.

Library plus CLI covering the non-training stages of a low-resource
Chinese/Vietnamese translation pipeline: corpus statistics and filtering,
BPE subword models, checkpoint averaging and embedding pruning, sampling
backtranslation, numeric/date post-editing, and BLEU scoring.
"""

__version__ = "0.1.0"
