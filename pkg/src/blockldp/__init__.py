"""Block empirical measures, empirical SCGFs and large-deviation diagnostics.

The package cuts long stationary sequences into k(n) blocks of length n,
estimates the scaled-cumulant generating function and its Legendre-Fenchel
conjugate from one sample path, classifies block-count schedules into
supercritical / critical / subcritical regimes, and ships the experiment
pipelines (digit statistics, Gaussian increments, word frequencies) plus a
CLI with deterministic CSV outputs.
"""

__version__ = "0.1.0"

from ._errors import DataError, NumericalError, UsageError
from .sources import (MarkovSpec, SeriesSource, bernoulli_source, digit_source,
                      file_source, gaussian_increment, gaussian_source,
                      markov_path, markov_source, next_digit, pi_fixture_path,
                      read_digit_file)
from .blockstats import (BlockStats, SampledFunction, ball_mass, block_means,
                         empirical_scgf, local_rate, pairwise_sum, scgf_values)
from .models import (ScgfModel, bernoulli_model, digit_indicator_model,
                     exact_prefix_scgf, gaussian_model, markov_model)
from .convex import (ConjugateResult, find_level_points, grad_estimate,
                     legendre, solve_slope)
from .regimes import (EmptinessPrediction, EnvelopeResult, RegimeReport,
                      Schedule, classify, envelope, predict_empty)
from .experiments import (BrownianResult, ExperimentConfig, Fig1Result,
                          FrequencyResult, RegimeEvidence, RunManifest,
                          brownian_experiment, fig1_pipeline, frequency_test,
                          regime_experiment)

__all__ = [
    "__version__",
    "DataError", "NumericalError", "UsageError",
    "MarkovSpec", "SeriesSource", "bernoulli_source", "digit_source",
    "file_source", "gaussian_increment", "gaussian_source", "markov_path",
    "markov_source", "next_digit", "pi_fixture_path", "read_digit_file",
    "BlockStats", "SampledFunction", "ball_mass", "block_means",
    "empirical_scgf", "local_rate", "pairwise_sum", "scgf_values",
    "ScgfModel", "bernoulli_model", "digit_indicator_model",
    "exact_prefix_scgf", "gaussian_model", "markov_model",
    "ConjugateResult", "find_level_points", "grad_estimate", "legendre",
    "solve_slope",
    "EmptinessPrediction", "EnvelopeResult", "RegimeReport", "Schedule",
    "classify", "envelope", "predict_empty",
    "BrownianResult", "ExperimentConfig", "Fig1Result", "FrequencyResult",
    "RegimeEvidence", "RunManifest", "brownian_experiment", "fig1_pipeline",
    "frequency_test", "regime_experiment",
]
