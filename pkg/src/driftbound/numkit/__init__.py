"""Self-contained dense numerical kernel."""
from .hinf import freq_response_gain, hinf_norm
from .linalg import (
    SymEig,
    as_matrix,
    eigvals,
    inv_spd,
    is_controllable,
    is_hurwitz,
    logdet_spd,
    lyapunov_residual,
    solve_lyapunov,
    sqrtm_spd,
    sym_eig,
)
from .quad import integrate_adaptive
from .rng import GaussianStream, gaussian_stream, next_normal
from .roots import find_root_increasing

__all__ = [
    "GaussianStream",
    "SymEig",
    "as_matrix",
    "eigvals",
    "find_root_increasing",
    "freq_response_gain",
    "gaussian_stream",
    "hinf_norm",
    "integrate_adaptive",
    "inv_spd",
    "is_controllable",
    "is_hurwitz",
    "logdet_spd",
    "lyapunov_residual",
    "next_normal",
    "solve_lyapunov",
    "sqrtm_spd",
    "sym_eig",
]
