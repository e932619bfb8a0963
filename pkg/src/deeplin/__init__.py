"""Transition-based realization of deep dependency graphs."""

from .graph import (DeepGraph, GoldRealization, Node, Token, Verdict, filter_instance,
                    is_projective, load_corpus, parse_instance, serialize_instance)
from .morphology import Lexicon, candidate_inflections
from .transition import JOINT, SHALLOW

__version__ = "0.1.0"
