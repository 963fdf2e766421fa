"""Identify path-planning adversarial examples on grid worlds.

Generate original/adversarial map pairs, plan both maps, label each path pair
UrP/FP/DP/UcP and train a linear SVM on path images to separate forks from
detours.
"""
from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
