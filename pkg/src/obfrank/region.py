"""Achievable transmission ranks and two-cell rank regions.

Closed forms exist for identical path gains (single cell and the Wyner
two-cell model). Everything else is inverted numerically through
:func:`max_rank_monotone`, which relies on outage being nondecreasing in the
rank of every cell.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import analytic
from .model import DEFAULT_NT, QosSpec, RectGrid
from .special_fn import lambert_w0_of_exp

__all__ = [
    "MaxRank",
    "RegionBoundary",
    "MonotonicityError",
    "BISECTION_TOL",
    "qos_rhs",
    "max_rank_homogeneous",
    "max_rank_wyner",
    "wyner_coefficients",
    "equal_rank_wyner",
    "max_rank_monotone",
    "max_rank_heterogeneous_single",
    "max_rank_two_cell_heterogeneous",
    "equal_rank_two_cell_heterogeneous",
    "boundary_wyner",
    "boundary_heterogeneous",
    "boundary_from_outages",
    "wyner_outages",
    "heterogeneous_outages",
]

BISECTION_TOL = 1e-10
_PROBE_POINTS = 10
_PROBE_SLACK = 1e-12


class MonotonicityError(RuntimeError):
    """An outage function decreased in rank, which the models never allow."""


@dataclass(frozen=True)
class MaxRank:
    """Largest relaxed rank meeting the QoS target; ``relaxed is None`` if even one beam fails."""

    relaxed: Optional[float]
    integer: Optional[int]
    method: str
    outage: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.relaxed is not None

    @classmethod
    def infeasible(cls, method: str, outage: Optional[float] = None) -> "MaxRank":
        return cls(None, None, method, outage)

    @classmethod
    def from_relaxed(cls, value: float, Nt: int, method: str, outage=None) -> "MaxRank":
        if not value >= 1.0:
            return cls.infeasible(method, outage)
        integer = int(min(Nt, math.floor(value))) if math.isfinite(value) else int(Nt)
        return cls(float(value), integer, method, outage)


def qos_rhs(qos: QosSpec, K: int) -> float:
    """``log(1+eta) - log(1 - p**(1/K))``, the right-hand side shared by the closed forms."""
    return math.log1p(qos.eta) - analytic.log1mexp(math.log(qos.p) / K)


def max_rank_homogeneous(qos: QosSpec, g: float, noise: float, K: int, Nt: int = DEFAULT_NT) -> MaxRank:
    """Closed-form maximum rank for one cell with identical user gains ``g``."""
    value = qos_rhs(qos, K) / (qos.eta * noise / g + math.log1p(qos.eta))
    return MaxRank.from_relaxed(value, Nt, "closed-form")


def wyner_coefficients(qos: QosSpec, L_other: float, g: float, noise: float, K: int):
    """``(a, b, c, d)`` such that the Wyner constraint reads ``a L + b log(1 + c L) <= d``."""
    a = qos.eta * noise + math.log1p(qos.eta)
    b = float(L_other)
    c = g * qos.eta / L_other
    d = qos_rhs(qos, K)
    return a, b, c, d


def max_rank_wyner(
    qos: QosSpec, L_other: float, g: float, noise: float, K: int, Nt: int = DEFAULT_NT
) -> MaxRank:
    """Closed-form maximum rank of one Wyner cell with the other cell's rank fixed.

    Solves ``a L + b log(1 + c L) = d`` through ``W0``: with
    ``s = a / (b c)``, ``L = (b / a) W0(s exp(s + d / b)) - 1 / c``.
    """
    if L_other < 1:
        raise ValueError(f"L_other must be >= 1, got {L_other}")
    if g == 0:
        return max_rank_homogeneous(qos, 1.0, noise, K, Nt)
    a, b, c, d = wyner_coefficients(qos, L_other, g, noise, K)
    if a + b * math.log1p(c) > d:
        return MaxRank.infeasible("closed-form")
    s = a / (b * c)
    w = lambert_w0_of_exp(math.log(s) + s + d / b)
    value = (b / a) * (w - s)
    return MaxRank.from_relaxed(max(value, 1.0), Nt, "closed-form")


def equal_rank_wyner(qos: QosSpec, g: float, noise: float, K: int, Nt: int = DEFAULT_NT) -> MaxRank:
    """Largest common rank ``L1 = L2`` of the Wyner model, closed form."""
    value = qos_rhs(qos, K) / (qos.eta * noise + math.log1p(qos.eta) + math.log1p(g * qos.eta))
    return MaxRank.from_relaxed(value, Nt, "closed-form")


def max_rank_monotone(
    outage_fn: Callable[[float], float],
    qos: QosSpec,
    L_hi: float,
    Nt: int = DEFAULT_NT,
    tol: float = BISECTION_TOL,
) -> MaxRank:
    """Largest ``L`` in ``[1, L_hi]`` with ``outage_fn(L) <= qos.p``, by bisection.

    Returns ``L_hi`` when the whole interval is feasible and an infeasible
    marker when ``L = 1`` already fails. The returned point is always on the
    feasible side of the bracket.
    """
    if not L_hi >= 1.0:
        raise ValueError(f"L_hi must be >= 1, got {L_hi}")
    probe = np.linspace(1.0, L_hi, _PROBE_POINTS)
    values = [outage_fn(float(x)) for x in probe]
    for (x0, v0), (x1, v1) in zip(zip(probe, values), zip(probe[1:], values[1:])):
        if v1 < v0 - _PROBE_SLACK:
            raise MonotonicityError(
                f"outage decreased from {v0:.12g} at L={x0:.6g} to {v1:.12g} at L={x1:.6g}"
            )
    p = qos.p
    if values[0] > p:
        return MaxRank.infeasible("bisection", values[0])
    if values[-1] <= p:
        return MaxRank.from_relaxed(float(L_hi), Nt, "bisection", values[-1])

    # tighten the bracket with the probe before bisecting
    k = next(i for i, v in enumerate(values) if v > p)
    lo, hi = float(probe[k - 1]), float(probe[k])
    f_lo = values[k - 1]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = outage_fn(mid)
        if f_mid <= p:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return MaxRank.from_relaxed(lo, Nt, "bisection", f_lo)


def max_rank_heterogeneous_single(
    qos: QosSpec, D: float, alpha: float, noise: float, K: int, L_hi: float = DEFAULT_NT, Nt: int = DEFAULT_NT
) -> MaxRank:
    """Maximum rank of a disk cell with uniformly dropped users."""
    return max_rank_monotone(
        lambda L: analytic.outage_single_cell_heterogeneous(qos.eta, L, D, alpha, noise, K),
        qos, L_hi, Nt,
    )


def max_rank_two_cell_heterogeneous(
    qos: QosSpec,
    L_other: float,
    geometry: RectGrid,
    alpha: float,
    noise: float,
    K: int,
    L_hi: float = DEFAULT_NT,
    Nt: int = DEFAULT_NT,
    cell: int = 0,
    tol: float = analytic.DEFAULT_OMEGA_TOL,
) -> MaxRank:
    """Maximum rank of ``cell`` with the other square cell's rank fixed at ``L_other``."""

    def outage(L):
        L1, L2 = (L, L_other) if cell == 0 else (L_other, L)
        return analytic.outage_two_cell_heterogeneous(qos.eta, L1, L2, geometry, alpha, noise, K, cell, tol)

    return max_rank_monotone(outage, qos, L_hi, Nt)


def equal_rank_two_cell_heterogeneous(
    qos: QosSpec,
    geometry: RectGrid,
    alpha: float,
    noise: float,
    K: int,
    L_hi: float = DEFAULT_NT,
    Nt: int = DEFAULT_NT,
    tol: float = analytic.DEFAULT_OMEGA_TOL,
) -> MaxRank:
    """Largest common rank meeting both square cells' constraints."""
    outages = heterogeneous_outages(qos, geometry, alpha, noise, K, tol)
    return max_rank_monotone(lambda L: max(outages(L, L)), qos, L_hi, Nt)


@dataclass
class RegionBoundary:
    """Sampled Pareto boundary; ``L2_max`` is ``None`` where ``L1`` itself is infeasible."""

    samples: list
    model: str
    L_hi: float
    config: dict = field(default_factory=dict)
    diagonal: Optional[float] = None

    @property
    def empty(self) -> bool:
        return all(v is None for _, v in self.samples)

    def feasible_samples(self) -> list:
        return [(a, b) for a, b in self.samples if b is not None]


OutagePair = Callable[[float, float], tuple]


def wyner_outages(qos: QosSpec, g: float, noise: float, K: int) -> OutagePair:
    def outages(L1, L2):
        return (
            analytic.outage_wyner(qos.eta, L1, L2, g, noise, K),
            analytic.outage_wyner(qos.eta, L2, L1, g, noise, K),
        )

    return outages


def heterogeneous_outages(
    qos: QosSpec, geometry: RectGrid, alpha: float, noise: float, K: int, tol: float = analytic.DEFAULT_OMEGA_TOL
) -> OutagePair:
    def outages(L1, L2):
        return tuple(
            analytic.outage_two_cell_heterogeneous(qos.eta, L1, L2, geometry, alpha, noise, K, cell, tol)
            for cell in (0, 1)
        )

    return outages


def boundary_from_outages(
    outages: OutagePair,
    qos: QosSpec,
    grid: Sequence[float],
    model: str,
    L_hi: float = DEFAULT_NT,
    threads: int = 1,
    config: Optional[dict] = None,
) -> RegionBoundary:
    """Sweep ``L1`` over ``grid`` and find the largest jointly feasible ``L2``.

    Both cells' outages are nondecreasing in ``L2`` (own rank for one,
    interferer rank for the other), so their maximum is inverted directly.
    """
    grid = [float(v) for v in grid]
    if any(v < 1.0 for v in grid):
        raise ValueError("grid values must be >= 1")

    def solve(L1):
        res = max_rank_monotone(lambda L2: max(outages(L1, L2)), qos, L_hi)
        return (L1, res.relaxed)

    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(solve, grid))
    else:
        samples = [solve(L1) for L1 in grid]

    diag = max_rank_monotone(lambda L: max(outages(L, L)), qos, L_hi)
    return RegionBoundary(samples, model, float(L_hi), dict(config or {}), diag.relaxed)


def boundary_wyner(
    qos: QosSpec, g: float, noise: float, K: int, grid: Sequence[float], L_hi: float = DEFAULT_NT, threads: int = 1
) -> RegionBoundary:
    cfg = {"eta": qos.eta, "p": qos.p, "g": g, "noise_power": noise, "K": K}
    return boundary_from_outages(wyner_outages(qos, g, noise, K), qos, grid, "wyner", L_hi, threads, cfg)


def boundary_heterogeneous(
    qos: QosSpec,
    geometry: RectGrid,
    alpha: float,
    noise: float,
    K: int,
    grid: Sequence[float],
    L_hi: float = DEFAULT_NT,
    threads: int = 1,
    tol: float = analytic.DEFAULT_OMEGA_TOL,
) -> RegionBoundary:
    cfg = {"eta": qos.eta, "p": qos.p, "D": geometry.D, "alpha": alpha, "noise_power": noise, "K": K}
    return boundary_from_outages(
        heterogeneous_outages(qos, geometry, alpha, noise, K, tol), qos, grid, "two-hetero", L_hi, threads, cfg
    )
