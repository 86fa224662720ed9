"""JSON scenario files.

Layout::

    {
      "model": "wyner",
      "geometry": {"D": 2.0, "g": 0.1},
      "qos": {"eta": 4.0, "p": 0.1},
      "channel": {"K": 10, "Nt": 8, "noise_power": 0.01, "alpha": 3.0},
      "solver": {"l_max": 8.0, "quad_tol": 1e-8},
      "montecarlo": {"trials": 100000, "seed": 1, "ranks": [2, 2]}
    }

``eta_db`` and ``snr_db`` (SNR = 1 / noise power) are accepted in place of
``eta`` and ``noise_power`` and converted here; everything downstream is
linear. Serialization always writes linear values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Optional

from .model import (
    DEFAULT_NT,
    ConfigError,
    Disk,
    Homogeneous,
    PathLossModel,
    QosSpec,
    RectGrid,
    SystemConfig,
    Wyner,
    validate,
)

MODELS = ("single-homo", "single-hetero", "wyner", "two-hetero")
TWO_CELL_MODELS = ("wyner", "two-hetero")

_SECTIONS = {
    "geometry": {"D", "g", "bs_x", "gain"},
    "qos": {"eta", "eta_db", "p"},
    "channel": {"K", "Nt", "noise_power", "snr_db", "alpha"},
    "solver": {"l_max", "quad_tol", "l_other", "grid"},
    "montecarlo": {"trials", "seed", "ranks"},
}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Scenario:
    """Everything a command needs; ``system`` builds the model's SystemConfig."""

    model: str
    eta: float
    p: float
    K: int
    noise_power: float
    Nt: int = DEFAULT_NT
    D: float = 2.0
    g: float = 0.1
    gain: float = 1.0
    alpha: float = 3.0
    bs_x: tuple = ()
    l_max: float = float(DEFAULT_NT)
    quad_tol: float = 1e-8
    l_other: Optional[float] = None
    grid: Optional[str] = None
    trials: int = 100_000
    seed: int = 1
    ranks: Optional[tuple] = None

    @property
    def qos(self) -> QosSpec:
        return QosSpec(self.eta, self.p)

    @property
    def geometry(self):
        if self.model == "single-homo":
            return Homogeneous(self.gain)
        if self.model == "single-hetero":
            return Disk(self.D)
        if self.model == "wyner":
            return Wyner(self.g)
        return RectGrid(self.D, tuple(self.bs_x)) if self.bs_x else RectGrid.adjacent(self.D)

    @property
    def system(self) -> SystemConfig:
        geom = self.geometry
        pl = PathLossModel(self.alpha) if isinstance(geom, (Disk, RectGrid)) else None
        return SystemConfig(geom.n_cells, self.K, self.Nt, self.noise_power, geom, self.qos, pl)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def default_ranks(self) -> tuple:
        if self.ranks is not None:
            return tuple(self.ranks)
        return tuple(min(2, self.Nt) for _ in range(self.system.M))


def violations(sc: Scenario) -> list[str]:
    out = []
    if sc.model not in MODELS:
        out.append(f"model must be one of {', '.join(MODELS)}, got {sc.model!r}")
        return out
    out.extend(validate(sc.system))
    if not sc.l_max >= 1:
        out.append("solver.l_max must be >= 1")
    if not sc.quad_tol > 0:
        out.append("solver.quad_tol must be positive")
    if sc.l_other is not None and not sc.l_other >= 1:
        out.append("solver.l_other must be >= 1")
    if not (isinstance(sc.trials, int) and sc.trials >= 1):
        out.append("montecarlo.trials must be an integer >= 1")
    if not (isinstance(sc.seed, int) and 0 <= sc.seed < 2**64):
        out.append("montecarlo.seed must be a 64-bit unsigned integer")
    return out


def _number(section: str, key: str, value: Any, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError([f"{section}.{key} must be a number, got {value!r}"])
    if kind is int:
        if int(value) != value:
            raise ConfigError([f"{section}.{key} must be an integer, got {value!r}"])
        return int(value)
    if not math.isfinite(value):
        raise ConfigError([f"{section}.{key} must be finite"])
    return float(value)


def from_dict(doc: dict) -> Scenario:
    """Build a validated :class:`Scenario`; raises :class:`ConfigError` naming the field."""
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    unknown = set(doc) - set(_SECTIONS) - {"model"}
    if unknown:
        raise ConfigError([f"unknown top-level key {k!r}" for k in sorted(unknown)])
    for section in _SECTIONS:
        body = doc.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError([f"{section} must be an object"])
        extra = set(body) - _SECTIONS[section]
        if extra:
            raise ConfigError([f"unknown key {section}.{k}" for k in sorted(extra)])

    geo = doc.get("geometry", {})
    qos = doc.get("qos", {})
    ch = doc.get("channel", {})
    sol = doc.get("solver", {})
    mc = doc.get("montecarlo", {})

    missing = []
    if "model" not in doc:
        missing.append("model is required")
    if "eta" not in qos and "eta_db" not in qos:
        missing.append("qos.eta (or qos.eta_db) is required")
    if "p" not in qos:
        missing.append("qos.p is required")
    if "K" not in ch:
        missing.append("channel.K is required")
    if "noise_power" not in ch and "snr_db" not in ch:
        missing.append("channel.noise_power (or channel.snr_db) is required")
    if "eta" in qos and "eta_db" in qos:
        missing.append("give only one of qos.eta and qos.eta_db")
    if "noise_power" in ch and "snr_db" in ch:
        missing.append("give only one of channel.noise_power and channel.snr_db")
    if missing:
        raise ConfigError(missing)

    kw: dict = {"model": doc["model"]}
    kw["eta"] = (
        _number("qos", "eta", qos["eta"]) if "eta" in qos else db_to_linear(_number("qos", "eta_db", qos["eta_db"]))
    )
    kw["p"] = _number("qos", "p", qos["p"])
    kw["K"] = _number("channel", "K", ch["K"], int)
    if "noise_power" in ch:
        kw["noise_power"] = _number("channel", "noise_power", ch["noise_power"])
    else:
        kw["noise_power"] = 1.0 / db_to_linear(_number("channel", "snr_db", ch["snr_db"]))
    if "Nt" in ch:
        kw["Nt"] = _number("channel", "Nt", ch["Nt"], int)
    if "alpha" in ch:
        kw["alpha"] = _number("channel", "alpha", ch["alpha"])
    for key in ("D", "g", "gain"):
        if key in geo:
            kw[key] = _number("geometry", key, geo[key])
    if "bs_x" in geo:
        if not isinstance(geo["bs_x"], list):
            raise ConfigError(["geometry.bs_x must be a list of numbers"])
        kw["bs_x"] = tuple(_number("geometry", "bs_x", v) for v in geo["bs_x"])
    for key in ("l_max", "quad_tol", "l_other"):
        if sol.get(key) is not None:
            kw[key] = _number("solver", key, sol[key])
    if sol.get("grid") is not None:
        if not isinstance(sol["grid"], str):
            raise ConfigError(["solver.grid must be a string START:STOP:STEP"])
        kw["grid"] = sol["grid"]
    if "trials" in mc:
        kw["trials"] = _number("montecarlo", "trials", mc["trials"], int)
    if "seed" in mc:
        kw["seed"] = _number("montecarlo", "seed", mc["seed"], int)
    if mc.get("ranks") is not None:
        if not isinstance(mc["ranks"], list):
            raise ConfigError(["montecarlo.ranks must be a list of integers"])
        kw["ranks"] = tuple(_number("montecarlo", "ranks", v, int) for v in mc["ranks"])

    sc = Scenario(**kw)
    problems = violations(sc)
    if problems:
        raise ConfigError(problems)
    return sc


def to_dict(sc: Scenario) -> dict:
    """Canonical, linear-unit document; ``from_dict(to_dict(s)) == s``."""
    doc = {
        "model": sc.model,
        "geometry": {"D": sc.D, "g": sc.g, "gain": sc.gain},
        "qos": {"eta": sc.eta, "p": sc.p},
        "channel": {"K": sc.K, "Nt": sc.Nt, "noise_power": sc.noise_power, "alpha": sc.alpha},
        "solver": {"l_max": sc.l_max, "quad_tol": sc.quad_tol},
        "montecarlo": {"trials": sc.trials, "seed": sc.seed},
    }
    if sc.bs_x:
        doc["geometry"]["bs_x"] = list(sc.bs_x)
    if sc.l_other is not None:
        doc["solver"]["l_other"] = sc.l_other
    if sc.grid is not None:
        doc["solver"]["grid"] = sc.grid
    if sc.ranks is not None:
        doc["montecarlo"]["ranks"] = list(sc.ranks)
    return doc


def dumps(sc: Scenario) -> str:
    return json.dumps(to_dict(sc), indent=2, sort_keys=True) + "\n"


def load(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
    return from_dict(doc)


def digest(sc: Scenario) -> str:
    """SHA-256 of the canonical compact JSON form."""
    blob = json.dumps(to_dict(sc), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
