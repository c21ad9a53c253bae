"""Metaheuristic hyperparameter search for a from-scratch Vision Transformer."""

__version__ = "0.1.0"
