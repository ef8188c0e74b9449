"""Classical simulator and benchmark harness for constraint-oriented biased quantum search."""

from .problem import (Constraint, Polynomial, ProblemInstance, ProductTerm, eval_objective, eval_polynomial,
                      eval_product_part, is_feasible, load_instance, remaining_capacities, shift_of, violation)
from .sampler import BiasProfile, Sample, SamplerConfig, exact_support, sample
from .search import SearchConfig, SearchTrace, qmaxsearch, qmaxsearch_two_stage, qsearch

__version__ = "0.1.0"
