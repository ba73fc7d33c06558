"""Geometry-aware Bayesian optimization on spheres, SPD matrices and their products."""
__version__ = "0.1.0"

from .domains import EigenvalueBox, ProductDomain, SphereBox, project_to_domain
from .manifolds import SPD, Euclidean, Product, Sphere, parse_manifold, sample_wrapped_gaussian
from .kernels import KernelParams, estimate_beta_min, geodesic_se_kernel, kernel_matrix
from .gp import GPModel, fit_mle, gp_posterior, log_marginal_likelihood
from .acquisition import AcquisitionProblem, expected_improvement, riemannian_gradient
from .optimizer import CGConfig, cg_minimize, linesearch, maximize_acquisition
from .bo import BOConfig, BOTrace, aggregate, run_bo, simple_regret
from .benchmarks import ackley, make_benchmark
