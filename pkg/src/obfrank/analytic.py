"""Closed-form and quadrature-based per-beam SINR outage.

Every function returns ``F*(eta)``, the probability that the best of ``K``
users on a beam falls at or below the threshold. Internally everything is
carried as the log of the single-user survival term so that ``(1 - q)**K``
stays accurate when ``q`` is tiny or ``K`` is large.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import RectGrid
from .quadrature import QuadResult, integrate_2d_split
from .special_fn import lower_incomplete_gamma

__all__ = [
    "OutageLhs",
    "log1mexp",
    "cdf_single_cell_conditional",
    "outage_single_cell_homogeneous",
    "outage_single_cell_heterogeneous",
    "single_user_survival_heterogeneous",
    "cdf_multicell_conditional",
    "outage_wyner",
    "omega_integral",
    "omega_integrand",
    "outage_two_cell_heterogeneous",
    "DEFAULT_OMEGA_TOL",
]

log = logging.getLogger(__name__)

DEFAULT_OMEGA_TOL = 1e-8


@dataclass(frozen=True)
class OutageLhs:
    value: float
    context: str


def log1mexp(z: float) -> float:
    """``log(1 - exp(z))`` for ``z <= 0``, accurate at both ends."""
    if z > 0.0:
        raise ValueError(f"log1mexp needs z <= 0, got {z}")
    if z == 0.0:
        return -math.inf
    if z > -math.log(2.0):
        return math.log(-math.expm1(z))
    return math.log1p(-math.exp(z))


def _outage_from_log_survival(log_surv: float, K: int) -> float:
    """``(1 - exp(log_surv))**K`` evaluated through logs."""
    if log_surv == -math.inf:
        return 1.0
    return math.exp(K * log1mexp(min(log_surv, 0.0)))


def _check_rank(L: float, name: str = "L") -> None:
    if not L >= 1.0:
        raise ValueError(f"{name} must be >= 1, got {L}")


def _check_K(K: int) -> None:
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")


def cdf_single_cell_conditional(x: float, L: float, g: float, noise: float) -> float:
    """Single-user per-beam SINR CDF given path gain ``g`` (no other cells)."""
    _check_rank(L)
    if not g > 0:
        raise ValueError(f"gain must be positive, got {g}")
    if not x >= 0:
        raise ValueError(f"x must be >= 0, got {x}")
    log_surv = -x * noise * L / g - (L - 1.0) * math.log1p(x)
    return -math.expm1(log_surv)


def outage_single_cell_homogeneous(eta: float, L: float, g: float, noise: float, K: int) -> float:
    _check_K(K)
    _check_rank(L)
    if not g > 0:
        raise ValueError(f"gain must be positive, got {g}")
    log_surv = -eta * noise * L / g - (L - 1.0) * math.log1p(eta)
    return _outage_from_log_survival(log_surv, K)


def single_user_survival_heterogeneous(eta: float, L: float, D: float, alpha: float, noise: float) -> float:
    """Disk-averaged ``1 - F(eta)`` for one user, via the incomplete gamma form."""
    _check_rank(L)
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    if eta == 0.0:
        return 1.0
    c = eta * noise * L
    shape = 2.0 / alpha
    gam = lower_incomplete_gamma(shape, c * D**alpha)
    log_q = (
        math.log(2.0 * gam)
        - math.log(alpha)
        - 2.0 * math.log(D)
        - (L - 1.0) * math.log1p(eta)
        - shape * math.log(c)
    )
    q = math.exp(log_q)
    if q > 1.0:
        log.debug("clamped disk-averaged survival %.17g to 1", q)
        q = 1.0
    return q


def outage_single_cell_heterogeneous(
    eta: float, L: float, D: float, alpha: float, noise: float, K: int
) -> float:
    """Per-beam outage with users uniform in a disk of radius ``D``."""
    _check_K(K)
    q = single_user_survival_heterogeneous(eta, L, D, alpha, noise)
    if q <= 0.0:
        return 1.0
    return _outage_from_log_survival(math.log(q), K)


def cdf_multicell_conditional(
    x: float, i: int, ranks: Sequence[float], g_vec: Sequence[float], noise: float
) -> float:
    """Single-user per-beam SINR CDF in cell ``i`` given gains to every BS.

    ``g_vec[j]`` is the path gain from BS ``j``; ``g_vec[i]`` is the serving
    gain. Reduces to :func:`cdf_single_cell_conditional` for one cell.
    """
    ranks = [float(r) for r in ranks]
    g_vec = [float(v) for v in g_vec]
    if len(ranks) != len(g_vec):
        raise ValueError("ranks and g_vec must have the same length")
    for r in ranks:
        _check_rank(r)
    if any(not v > 0 for v in g_vec):
        raise ValueError("all gains must be positive")
    if not x >= 0:
        raise ValueError(f"x must be >= 0, got {x}")
    Li = ranks[i]
    gi = g_vec[i]
    log_surv = -x * noise * Li / gi - (Li - 1.0) * math.log1p(x)
    for j, (Lj, gj) in enumerate(zip(ranks, g_vec)):
        if j != i:
            log_surv -= Lj * math.log1p(x * (gj / gi) * (Li / Lj))
    return -math.expm1(log_surv)


def outage_wyner(eta: float, L_own: float, L_other: float, g: float, noise: float, K: int) -> float:
    """Two-cell Wyner outage for the cell using ``L_own`` beams.

    The other cell's outage is this same function with the ranks swapped.
    """
    _check_K(K)
    _check_rank(L_own, "L_own")
    _check_rank(L_other, "L_other")
    if not g >= 0:
        raise ValueError(f"cross gain must be >= 0, got {g}")
    log_surv = (
        -eta * noise * L_own
        - (L_own - 1.0) * math.log1p(eta)
        - L_other * math.log1p((L_own / L_other) * g * eta)
    )
    return _outage_from_log_survival(log_surv, K)


def _two_cell_layout(geometry: RectGrid, cell: int):
    if not isinstance(geometry, RectGrid) or geometry.n_cells != 2:
        raise NotImplementedError("the area-averaged constraint is only available for two RectGrid cells")
    if cell not in (0, 1):
        raise ValueError(f"cell must be 0 or 1, got {cell}")
    own = geometry.bs_x[cell]
    other = geometry.bs_x[1 - cell]
    return own, other, geometry.cell_rect(cell)


def omega_integrand(eta, L_own, L_other, bs_own, bs_other, alpha, noise):
    """Vectorised integrand of the area-averaged survival term."""
    half_alpha = 0.5 * alpha
    c = eta * noise * L_own
    k = (L_own / L_other) * eta

    def f(x, y):
        r1 = (x - bs_own) ** 2 + y**2
        r2 = (x - bs_other) ** 2 + y**2
        ratio = np.power(r1 / r2, half_alpha)
        return np.exp(-c * np.power(r1, half_alpha) - L_other * np.log1p(ratio * k))

    return f


def omega_integral(
    eta: float,
    L1: float,
    L2: float,
    geometry: RectGrid,
    alpha: float,
    noise: float,
    cell: int = 0,
    tol: float = DEFAULT_OMEGA_TOL,
) -> QuadResult:
    """Integral over cell ``cell``'s square of the location-conditional survival.

    ``L1`` and ``L2`` are the ranks of cells 0 and 1; for ``cell=1`` their
    roles are interchanged. The square is split at the serving BS so the
    non-smooth point lands on panel corners.
    """
    _check_rank(L1, "L1")
    _check_rank(L2, "L2")
    own, other, rect = _two_cell_layout(geometry, cell)
    L_own, L_other = (L1, L2) if cell == 0 else (L2, L1)
    f = omega_integrand(eta, L_own, L_other, own, other, alpha, noise)
    return integrate_2d_split(f, rect, (own, 0.0), tol=tol)


def outage_two_cell_heterogeneous(
    eta: float,
    L1: float,
    L2: float,
    geometry: RectGrid,
    alpha: float,
    noise: float,
    K: int,
    cell: int = 0,
    tol: float = DEFAULT_OMEGA_TOL,
) -> float:
    """Area-averaged two-cell outage ``[1 - Omega / (A (eta+1)^(L_own-1))]^K``."""
    _check_K(K)
    L_own = L1 if cell == 0 else L2
    omega = omega_integral(eta, L1, L2, geometry, alpha, noise, cell, tol).value
    area = geometry.cell_area
    q = omega / area * math.exp(-(L_own - 1.0) * math.log1p(eta))
    if q > 1.0:
        log.debug("clamped area-averaged survival %.17g to 1", q)
        q = 1.0
    if q <= 0.0:
        return 1.0
    return _outage_from_log_survival(math.log(q), K)
