"""Generalized harmonic functions on weighted trees.

Exact finite-depth constructions of universal harmonic functions and their
frequent and generic variants, each with a certificate that can be re-checked."""

from .boundary import Ball, StepFunction, dense_target, prob_distance, slice_at, perturb_nonisolated, refine
from .constructors import build_spanning_family, build_universal, near_target, verify_certificate, verify_span
from .errors import (AssumptionViolated, DepthExhausted, FieldMismatch, HtlabError, ResourceLimit,
                     ValidationError, ZeroInverse)
from .fields import FieldElement, FieldSpec
from .frequency import build_frequent, build_frequent_on_levels, build_upper_dense, extend_into_ball
from .harmonic import (TreeFunction, brute_force_extensions, extend_constant, solve_extension, free_slots,
                       is_harmonic, tree_distance)
from .schedule import Schedule, count_stage_target, density, stage_level, stage_target
from .space import ValueSpace
from .tree import TreeConfig, Vertex, WeightedTree, build_tree, collapse, uniform_tree

__version__ = "0.1.0"
