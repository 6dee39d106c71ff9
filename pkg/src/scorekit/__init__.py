"""scorekit: score-based generative modelling for binary classification.

Learn score functions by score matching (plain or sliced), reconstruct
densities from score fields by anchored line integration, sample with
Langevin dynamics, oversample minority classes (SMOTE / ADASYN / score
generation), and classify with generative and discriminative rules backed
by closed-form Gaussian boundary analytics.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    augment,
    classify,
    data,
    density,
    gaussians,
    langevin,
    metrics,
    numerics,
    score_net,
)
