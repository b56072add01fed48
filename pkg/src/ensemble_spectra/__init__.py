"""Exact mean spectral densities, moment generating functions and convergent
1/n^2 expansions for the Gaussian orthogonal, unitary and symplectic ensembles."""

__version__ = "0.1.0"

from .densities import EnsembleSpec, DensityQuery, density_eval, density_ode_residual, integrate_against
from .expansion import ExpansionReport, TruncatedSeries, gse_goe_expand, gue_expand, op_S, op_T
from .mgf import MGFConvention, PowerSeriesInS, mgf_eval, mgf_expansion_1n, moments_from_mgf
from .poly import Poly
from .sampler import SampleConfig, TraceStats, convention_probe, empirical_trace_mean
from .specialfn import PrecisionPolicy, hermite_fn_eval, hermite_poly_eval, hyp1f1

__all__ = [
    "__version__",
    "EnsembleSpec",
    "DensityQuery",
    "density_eval",
    "density_ode_residual",
    "integrate_against",
    "ExpansionReport",
    "TruncatedSeries",
    "gse_goe_expand",
    "gue_expand",
    "op_S",
    "op_T",
    "MGFConvention",
    "PowerSeriesInS",
    "mgf_eval",
    "mgf_expansion_1n",
    "moments_from_mgf",
    "Poly",
    "SampleConfig",
    "TraceStats",
    "convention_probe",
    "empirical_trace_mean",
    "PrecisionPolicy",
    "hermite_fn_eval",
    "hermite_poly_eval",
    "hyp1f1",
]
