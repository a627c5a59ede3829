"""Discretization-based MILP models for the pooling problem.

Submodules: ``instance`` (data, generator, JSON), ``nlp`` (bilinear model
checks), ``milp`` (model container, MPS/LP), ``discretize`` (SB, PQ, SBN
builders), ``cuts`` (hull cuts and bounds), ``solve`` (simplex, enumeration,
external adapter), ``bench`` (matrices, profiles, gaps), ``cli``.
"""
from .bench import BenchRecord, ProfileCurve, filter_instances, format_gap, gap, performance_profile, run_matrix
from .cuts import (
    HullDescription,
    HullParams,
    brute_force_hull,
    hull_facets,
    hull_params,
    lti_cuts,
    lti_strengthened,
    p_dependent_bounds,
    rounding_cuts,
)
from .discretize import VariantSpec, build, build_pq, build_sb, build_sbn, grid_values, parse_cuts, parse_variant
from .instance import PoolingInstance, generate_instance, load_instance, read_instance, save_instance, validate_instance
from .milp import MilpModel, lp_relaxation, read_mps, write_lp, write_mps
from .nlp import FeasibilityReport, FlowSolution, evaluate_pq, evaluate_sb, lift_milp_solution
from .solve import SolverConfig, enumerate_milp, simplex_solve, solve

__version__ = "0.1.0"
