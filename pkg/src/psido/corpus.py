"""Named regression symbols used by tests, the oracle check and the CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import SymbolDescriptor, describe

__all__ = ["CorpusEntry", "CORPUS", "corpus_symbol", "sample_corpus", "strongly_elliptic"]


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    m: float
    strongly_elliptic: bool = False
    rho: float = 1.0

    def descriptor(self, dim: int = 1) -> SymbolDescriptor:
        return describe(self.text, self.m, self.rho, "bracket", dim)


CORPUS = {e.name: e for e in [
    CorpusEntry("constant", "2", 0.0, True),
    CorpusEntry("bracket", "jb(xi)", 1.0, True),
    CorpusEntry("bracket_sq", "jb(xi)^2", 2.0, True),
    CorpusEntry("bracket_inv_half", "jb(xi)^(-1/2)", -0.5, True),
    CorpusEntry("two_plus_sin", "2 + sin(x1)", 0.0, True),
    CorpusEntry("garding_mix", "jb(xi)^2 + 5*sin(x1)*jb(xi)", 2.0, True),
    CorpusEntry("variable_coeff", "(2 + cos(x1))*jb(xi)^2 + i*xi1", 2.0, True),
    CorpusEntry("modulated", "jb(xi)*(1 + cos(x1)/2)", 1.0, True),
    CorpusEntry("sin_bracket", "sin(x1)*jb(xi)", 1.0),
    CorpusEntry("sin_x", "sin(x1)", 0.0),
    CorpusEntry("angular", "sin(x1)*(2 + cos(atan(xi1)))", 0.0),
    CorpusEntry("gauss_bracket", "exp(-x1^2)*jb(xi)", 1.0),
    CorpusEntry("arctan", "atan(xi1)", 0.0),
    CorpusEntry("odd_localized", "x1*exp(-x1^2)*xi1/jb(xi)", 0.0),
    CorpusEntry("phase", "exp(i*x1)/jb(xi)", -1.0),
    CorpusEntry("smoothing", "cos(x1)*jb(xi)^(-2)", -2.0),
]}


def corpus_symbol(name: str, dim: int = 1) -> SymbolDescriptor:
    return CORPUS[name].descriptor(dim)


def sample_corpus(k: int, seed: int = 0) -> list:
    """k distinct corpus names drawn with a seeded generator."""
    names = sorted(CORPUS)
    rng = np.random.default_rng(seed)
    return [names[i] for i in rng.choice(len(names), size=k, replace=False)]


def strongly_elliptic() -> list:
    return [name for name, e in sorted(CORPUS.items()) if e.strongly_elliptic]
