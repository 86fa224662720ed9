"""Scenario description shared by every other module.

All quantities are linear (no dB). Total transmit power per base station is
fixed at one, so each of the ``L`` beams of a BS carries power ``1/L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "QosSpec",
    "PathLossModel",
    "Disk",
    "RectGrid",
    "Wyner",
    "Homogeneous",
    "CellGeometry",
    "SystemConfig",
    "RankTuple",
    "integerize",
    "validate",
    "ConfigError",
    "TOTAL_POWER",
    "DEFAULT_NT",
]

TOTAL_POWER = 1.0
DEFAULT_NT = 8


class ConfigError(ValueError):
    """Raised when a scenario violates one of its invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class QosSpec:
    """Per-beam QoS target: ``Pr{max-user SINR <= eta} <= p``."""

    eta: float
    p: float


@dataclass(frozen=True)
class PathLossModel:
    alpha: float

    def gain(self, distance):
        """Path gain ``d**-alpha``; distance may be an array."""
        return np.power(distance, -self.alpha)


@dataclass(frozen=True)
class Disk:
    """Single cell: users uniform in a disk of radius ``D`` around the BS."""

    D: float

    @property
    def n_cells(self) -> int:
        return 1

    @property
    def area(self) -> float:
        return math.pi * self.D**2


@dataclass(frozen=True)
class RectGrid:
    """Square cells of side ``2D`` centred on BSs at ``(bs_x[i], 0)``.

    Users associate with the closest BS; with the default abscissae
    ``(2i - 1) D`` neighbouring squares share an edge.
    """

    D: float
    bs_x: tuple = ()

    def __post_init__(self):
        if not self.bs_x:
            object.__setattr__(self, "bs_x", (self.D, 3.0 * self.D))
        else:
            object.__setattr__(self, "bs_x", tuple(float(v) for v in self.bs_x))

    @classmethod
    def adjacent(cls, D: float, n_cells: int = 2) -> "RectGrid":
        return cls(D, tuple((2 * i - 1) * D for i in range(1, n_cells + 1)))

    @property
    def n_cells(self) -> int:
        return len(self.bs_x)

    @property
    def cell_area(self) -> float:
        return (2.0 * self.D) ** 2

    def cell_rect(self, cell: int) -> tuple[float, float, float, float]:
        """``(x0, x1, y0, y1)`` of the square served by BS ``cell``."""
        xc = self.bs_x[cell]
        return (xc - self.D, xc + self.D, -self.D, self.D)


@dataclass(frozen=True)
class Wyner:
    """Two cells with unit own-cell gain and cross gain ``g`` for every user."""

    g: float

    @property
    def n_cells(self) -> int:
        return 2


@dataclass(frozen=True)
class Homogeneous:
    """Single cell where every user has the same path gain ``g``."""

    g: float = 1.0

    @property
    def n_cells(self) -> int:
        return 1


CellGeometry = Union[Disk, RectGrid, Wyner, Homogeneous]


@dataclass(frozen=True)
class SystemConfig:
    M: int
    K: int
    Nt: int
    noise_power: float
    geometry: CellGeometry
    qos: QosSpec
    pl: PathLossModel | None = None

    @property
    def snr(self) -> float:
        return TOTAL_POWER / self.noise_power


def integerize(relaxed: Sequence[float], Nt: int) -> list[int]:
    """Map relaxed ranks to beam counts, ``min(Nt, floor(L))`` element-wise."""
    out = []
    for value in relaxed:
        value = float(value)
        if not value >= 1.0:
            raise ValueError(f"relaxed rank must be >= 1, got {value}")
        out.append(int(min(Nt, math.floor(value))))
    return out


@dataclass(frozen=True)
class RankTuple:
    relaxed: tuple
    Nt: int
    integer: tuple = field(init=False)

    def __post_init__(self):
        relaxed = tuple(float(v) for v in self.relaxed)
        object.__setattr__(self, "relaxed", relaxed)
        object.__setattr__(self, "integer", tuple(integerize(relaxed, self.Nt)))


def _geometry_violations(geom) -> list[str]:
    out = []
    if isinstance(geom, Disk):
        if not geom.D > 0:
            out.append("geometry D must be positive")
    elif isinstance(geom, RectGrid):
        if not geom.D > 0:
            out.append("geometry D must be positive")
        xs = geom.bs_x
        if any(b <= a for a, b in zip(xs, xs[1:])):
            out.append("bs_x must be strictly increasing")
        elif geom.D > 0 and any(
            not math.isclose(b - a, 2 * geom.D, rel_tol=1e-12) for a, b in zip(xs, xs[1:])
        ):
            out.append("bs_x spacing must equal 2D so squares tile the plane")
    elif isinstance(geom, Wyner):
        if not geom.g >= 0:
            out.append("Wyner cross gain g must be non-negative")
    elif isinstance(geom, Homogeneous):
        if not geom.g > 0:
            out.append("homogeneous gain g must be positive")
    else:
        out.append(f"unknown geometry type {type(geom).__name__}")
    return out


def validate(config: SystemConfig) -> list[str]:
    """Return every invariant violation of ``config``; empty list means valid."""
    out = []
    if not (isinstance(config.M, int) and config.M >= 1):
        out.append("M must be an integer >= 1")
    if not (isinstance(config.K, int) and config.K >= 1):
        out.append("K must be an integer >= 1")
    if not (isinstance(config.Nt, int) and config.Nt >= 1):
        out.append("Nt must be an integer >= 1")
    if not config.noise_power > 0:
        out.append("noise_power must be positive")
    if not config.qos.eta > 0:
        out.append("eta must be positive")
    if not 0 < config.qos.p < 1:
        out.append("p in open interval (0,1)")

    geom = config.geometry
    out.extend(_geometry_violations(geom))
    if isinstance(geom, (Disk, RectGrid)):
        if config.pl is None:
            out.append("path-loss model required for Disk/RectGrid geometry")
        elif not config.pl.alpha > 2:
            out.append("alpha must exceed 2")
    elif config.pl is not None and not config.pl.alpha > 2:
        out.append("alpha must exceed 2")
    if hasattr(geom, "n_cells") and config.M != geom.n_cells:
        out.append(f"M={config.M} does not match geometry ({geom.n_cells} cells)")
    return out


def check(config: SystemConfig) -> SystemConfig:
    """Raise :class:`ConfigError` listing all violations, else return config."""
    problems = validate(config)
    if problems:
        raise ConfigError(problems)
    return config
