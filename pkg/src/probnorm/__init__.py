"""Probabilistic normed spaces: distribution functions, triangle functions, quotients and completeness checks."""

__version__ = "0.1.0"

from .distfn import (EPS0, EPS_INF, DistFn, df_equiv, df_leq, df_pointwise_sup, from_steps, parse_df, read_df,
                     sibley, sibley_to_eps0, unit_step, weak_convergence_check, write_df)
from .pnspace import (PNSpace, c00_space, check_axioms, check_serstnev, check_strongly_bounded,
                      serstnev_simple_space, simple_space)
from .quotient import (QuotientSpace, Subspace, c00_sum_kernel, closedness_probe, coset_equal, dist_to_subspace,
                       quotient_norm, span)
from .report import Inconclusive, VerificationReport
from .trifn import (LUKASIEWICZ, MIN, PRODUCT, TAU_M, TAU_M_STAR, TAU_PI, TAU_PI_STAR, TAU_W, TAU_W_STAR, TNorm,
                    TriangleFn, check_dominates)
from .complete import (PointSequence, build_delta_schedule, is_strong_cauchy, lift_cauchy_sequence,
                       lift_representative, lift_with_floor, sigma_product, strong_limit_check,
                       two_of_three_experiment)
