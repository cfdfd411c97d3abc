"""Multiset-rewriting engine and a rule-authored model of small-talk conversation."""

__version__ = "0.1.0"
