"""Causal optimal transport and timelike curvature checks on finite spacetimes."""

from __future__ import annotations

import os as _os

__version__ = "0.1.0"


def _cap_threads():
    # Must run before numpy loads its BLAS; the CLI imports this package first.
    raw = _os.environ.get("CAUSAL_OT_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"CAUSAL_OT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"CAUSAL_OT_THREADS must be a positive integer, got {raw!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ[var] = str(n)


_cap_threads()

from .curvature import (TCDReport, check_pathwise, check_tcd_infty, check_tcde, check_tmcp, entropy,  # noqa: E402
                        u_n)
from .distortion import Potential, generalized_sin, sigma, sin_profile, tau  # noqa: E402
from .errors import CausalOTError, InputError  # noqa: E402
from .inequalities import (InequalityReport, VolumeProfile, bishop_gromov, bonnet_myers_diameter,  # noqa: E402
                           brunn_minkowski, hawking_check, hawking_threshold, schneider,
                           schneider_hypothesis, sin_kappa_zeros)
from .localization import (check_cd_needle, coarea, decompose, localize_mean_zero,  # noqa: E402
                           segment_inequality)
from .measures import Coupling, Measure, Plan  # noqa: E402
from .spacetime import (DiscreteSpacetime, causal_set, generate, longest_chain, minkowski,  # noqa: E402
                        time_separation, verify_axioms, warped_sqrt)
from .transport import kantorovich_dual_l1, lp_cost, lp_geodesic, solve_lp  # noqa: E402
