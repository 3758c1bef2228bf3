"""Dual fixed-point machinery for power-minimizing downlink beamforming."""

from .algorithms import (ApigFpConfig, PsgTrace, apig_fp_a, apig_fp_r,
                         apig_fp_run, pg_baseline, psg_run, reference_config)
from .dual import (dual_gradient_tilde, dual_reference, dual_value_tilde,
                   evaluate_dual, recover_primal)
from .fixed_point import (FpDivergence, beamformer_u, mapping_I, mapping_J,
                          solve_fp_stage1, solve_fp_stage2, thompson_metric)
from .network import InfiniteCapacity, NetworkInstance, random_instance
