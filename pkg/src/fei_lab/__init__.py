"""Biased Fourier analysis of Boolean functions.

Spectral entropy, total influence, FEI/FEI+ ratios, composition identities
and amplification, plus a small read-once formula language.
"""

__version__ = "0.1.0"

from fei_lab.boolfn import (
    BiasVector,
    RealTable,
    TruthTable,
    discrete_derivative,
    evaluate,
    iterated_derivative,
    mean,
    restrict,
)
from fei_lab.compose import (
    AmplifyStats,
    CompositionSpec,
    amplify_closed_form,
    amplify_ratio_limit,
    compose,
    composition_identities,
    paper_g,
)
from fei_lab.fei import fei_plus_ratio, fei_ratio, product_fei_constant
from fei_lab.formula import analyze_read_once, formula_to_table, parse
from fei_lab.fourier import Spectrum, biased_transform, inverse_transform
from fei_lab.kernels import BACKEND
from fei_lab.measures import (
    measure_report,
    spectral_entropy_ge1,
    total_influence,
    uniform_entropy,
    variance,
)

__all__ = [
    "AmplifyStats",
    "BACKEND",
    "BiasVector",
    "CompositionSpec",
    "RealTable",
    "Spectrum",
    "TruthTable",
    "amplify_closed_form",
    "amplify_ratio_limit",
    "analyze_read_once",
    "biased_transform",
    "compose",
    "composition_identities",
    "discrete_derivative",
    "evaluate",
    "fei_plus_ratio",
    "fei_ratio",
    "formula_to_table",
    "inverse_transform",
    "iterated_derivative",
    "mean",
    "measure_report",
    "paper_g",
    "parse",
    "product_fei_constant",
    "restrict",
    "spectral_entropy_ge1",
    "total_influence",
    "uniform_entropy",
    "variance",
]
