"""Control layers: feedback-linearizing tracker, planner, estimator."""

from .estimator import Estimator, estimate
from .fbl import (
    Envelope, FBLGains, NotHurwitz, TrajectoryExpired, fbl_control, gains_to_envelope,
    matrix_envelope,
)
from .mpc import MPC, Infeasible, MPCConfig, MPCSolution
from .qp import QPResult, kkt_residuals, solve_qp
from .trajectory import Trajectory


def mpc_solve(xhat, cfg: MPCConfig, plant):
    """One-shot solve; raises Infeasible."""
    return MPC(cfg, plant).solve(xhat)


__all__ = [
    "Estimator", "estimate", "Envelope", "FBLGains", "NotHurwitz", "TrajectoryExpired",
    "fbl_control", "gains_to_envelope", "matrix_envelope", "MPC", "Infeasible", "MPCConfig", "MPCSolution",
    "QPResult", "kkt_residuals", "solve_qp", "Trajectory", "mpc_solve",
]
