"""Toolkit for evaluating open-ended VQA systems on Vietnamese corpora.

Provides corpus-level text metrics (BLEU, ROUGE-L, METEOR, CIDEr),
inter-annotator agreement statistics, dependency-tree complexity and
linguistic-level analysis, dataset/prediction analysis procedures, and
numerically verified forward/backward fusion kernels, all tied together
by the `vqakit` command-line tool.
"""

__version__ = "0.1.0"

from .text import TokenSeq, clipped_counts, ngrams, normalize, tokenize

__all__ = [
    "__version__",
    "TokenSeq",
    "normalize",
    "tokenize",
    "ngrams",
    "clipped_counts",
]
