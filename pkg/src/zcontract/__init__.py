"""Simulation functions, Z-contractions and Picard iteration on discretised metric spaces."""

from .contraction import (
    ClassificationResult,
    ContractionInstance,
    brute_force_fixed_points,
    check_remark1,
    classify,
    verify_z,
)
from .exprparse import CompiledExpr, evaluate, parse, to_source
from .metric_core import Domain, MappingSpec, MetricSpec, build_domain, check_closure, verify_metric
from .picard import (
    IterationTrace,
    cauchy_modulus,
    check_asymptotic_regularity,
    check_boundedness,
    check_cauchy_modulus,
    iterate,
)
from .report import CheckEntry, VerificationReport
from .simfun import (
    SequenceFamily,
    SimulationFunction,
    catalogue,
    check_axioms,
    make_banach,
    make_boyd_wong,
    make_custom,
    make_geraghty,
    make_integral,
    make_psi_phi,
    make_ratio,
    make_rhoades,
)

__version__ = "0.1.0"
