"""Agnostic ReLU regression: surrogate-loss gradient descent and a three-region PTAS refinement."""

from .data import Dataset, GroundTruth, LabelModel, MarginalSpec, generate, read_csv, write_csv
from .poly_approx import UniPoly, chebyshev_relu_approx, remez_relu_approx
from .ptas import PiecewiseHypothesis, PtasConfig, ptas_train
from .surrogate import Activation, LinearModel, SolverConfig, pgd_train, select_min_gradient

__version__ = "0.1.0"
