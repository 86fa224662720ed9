"""Monte-Carlo simulator of the opportunistic beamforming downlink.

One trial: drop ``K`` users in every cell (fresh locations for the geometric
models), draw i.i.d. CN(0, 1) channels from every BS to every user, draw
Haar-random orthonormal beams at every BS, compute per-beam SINR and let
each BS pick the best user on its first beam. A trial is an outage for
cell ``i`` when that best SINR is at or below ``eta``.

Trials are grouped in fixed-size blocks. Block ``b`` draws from a Philox
stream keyed by ``(seed, b)``, so the estimate does not depend on the number
of worker threads or the order in which blocks finish.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Disk, Homogeneous, RankTuple, RectGrid, SystemConfig, Wyner

__all__ = [
    "TrialConfig",
    "OutageEstimate",
    "ConsistencyError",
    "BLOCK_SIZE",
    "block_rng",
    "draw_beams",
    "draw_users",
    "path_gains",
    "draw_channels",
    "sinr_sample",
    "estimate_outage",
]

BLOCK_SIZE = 2048
CONSISTENCY_RTOL = 1e-12


class ConsistencyError(AssertionError):
    """The two SINR evaluations disagreed."""


@dataclass(frozen=True)
class TrialConfig:
    system: SystemConfig
    ranks: Sequence[int]
    trials: int
    seed: int = 0

    def __post_init__(self):
        ranks = self.ranks.integer if isinstance(self.ranks, RankTuple) else self.ranks
        ranks = tuple(int(r) for r in ranks)
        object.__setattr__(self, "ranks", ranks)
        if len(ranks) != self.system.M:
            raise ValueError(f"need {self.system.M} ranks, got {len(ranks)}")
        if any(r < 1 or r > self.system.Nt for r in ranks):
            raise ValueError(f"ranks must lie in [1, Nt={self.system.Nt}], got {ranks}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class OutageEstimate:
    """Binomial estimate of per-beam outage for the observed cell.

    ``per_cell`` holds the estimate for every cell from the same trials and
    ``single_user`` the fraction of trials where user 0 alone is in outage.
    """

    p_hat: float
    std_err: float
    trials: int
    per_cell: tuple = field(default_factory=tuple)
    single_user: tuple = field(default_factory=tuple)

    @staticmethod
    def binomial_se(p_hat: float, trials: int) -> float:
        return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for trial block ``block``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),))))


def _complex_normal(rng, shape):
    # CN(0, 1): real and imaginary parts each with variance 1/2
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def draw_beams(Nt: int, L: int, rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
    """``L`` orthonormal beams in ``C^Nt`` (columns), Haar-distributed.

    QR of an ``Nt x L`` complex Gaussian matrix with the phases of ``R``'s
    diagonal moved into ``Q``. Returns shape ``size + (Nt, L)``.
    """
    if not 1 <= L <= Nt:
        raise ValueError(f"need 1 <= L <= Nt, got L={L}, Nt={Nt}")
    z = _complex_normal(rng, tuple(size) + (Nt, L))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return q * phase[..., None, :]


def draw_users(geometry, K: int, rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
    """User coordinates, shape ``size + (M, K, 2)``.

    Disk: BS at the origin, radius ``D sqrt(u)``. RectGrid: uniform in each
    cell's square.
    """
    size = tuple(size)
    if isinstance(geometry, Disk):
        u = rng.random(size + (1, K))
        theta = rng.uniform(0.0, 2.0 * math.pi, size + (1, K))
        r = geometry.D * np.sqrt(u)
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    if isinstance(geometry, RectGrid):
        M = geometry.n_cells
        u = rng.uniform(-1.0, 1.0, size + (M, K, 2)) * geometry.D
        u[..., 0] += np.asarray(geometry.bs_x)[:, None]
        return u
    raise TypeError(f"{type(geometry).__name__} geometry has no user locations")


def _bs_positions(geometry) -> np.ndarray:
    if isinstance(geometry, Disk):
        return np.zeros((1, 2))
    return np.stack([np.asarray(geometry.bs_x), np.zeros(geometry.n_cells)], axis=-1)


def path_gains(system: SystemConfig, rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
    """Large-scale gains ``g[..., i, k, j]`` from BS ``j`` to user ``k`` of cell ``i``."""
    geom = system.geometry
    K = system.K
    size = tuple(size)
    if isinstance(geom, Homogeneous):
        return np.full(size + (1, K, 1), float(geom.g))
    if isinstance(geom, Wyner):
        g = np.array([[1.0, geom.g], [geom.g, 1.0]])
        return np.broadcast_to(g[:, None, :], size + (2, K, 2)).copy()
    pos = draw_users(geom, K, rng, size)
    bs = _bs_positions(geom)
    diff = pos[..., :, :, None, :] - bs
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    return system.pl.gain(dist)


def draw_channels(M: int, K: int, Nt: int, rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
    """Small-scale fading ``h[..., i, k, j, :]`` from BS ``j`` to user ``k`` of cell ``i``."""
    return _complex_normal(rng, tuple(size) + (M, K, M, Nt))


def sinr_sample(beams, channels, gains, ranks, noise, both: bool = False):
    """Per-beam SINR of every user.

    Parameters
    ----------
    beams : list of arrays
        ``beams[j]`` has shape ``(..., Nt, L_j)``.
    channels : array
        ``(..., M, K, M, Nt)`` as returned by :func:`draw_channels`.
    gains : array
        ``(..., M, K, M)`` as returned by :func:`path_gains`.
    ranks, noise
        Beam counts per BS and noise power.
    both : bool
        Also return the SINR built from received signal powers with
        per-beam power ``1/L``; the two must agree to rounding.

    Returns
    -------
    list of arrays
        Entry ``i`` has shape ``(..., K, L_i)``. With ``both`` a pair of
        such lists.
    """
    M = len(ranks)
    ranks = [int(r) for r in ranks]
    # |h^T w|^2 for every (cell, user, bs, beam)
    proj = [
        [np.abs(np.einsum("...kn,...nl->...kl", channels[..., i, :, j, :], beams[j])) ** 2 for j in range(M)]
        for i in range(M)
    ]
    out, direct = [], []
    for i in range(M):
        Li = ranks[i]
        g_own = gains[..., i, :, i][..., None]
        own = proj[i][i]
        signal = g_own * own
        intra = g_own * (own.sum(axis=-1, keepdims=True) - own)
        inter = np.zeros_like(signal)
        inter_pw = np.zeros_like(signal)
        for j in range(M):
            if j == i:
                continue
            total_j = proj[i][j].sum(axis=-1, keepdims=True)
            inter = inter + gains[..., i, :, j][..., None] * (Li / ranks[j]) * total_j
            inter_pw = inter_pw + gains[..., i, :, j][..., None] / ranks[j] * total_j
        out.append(signal / (noise * Li + intra + inter))
        if both:
            rho = 1.0 / Li
            direct.append(rho * signal / (noise + rho * intra + inter_pw))
    if both:
        return out, direct
    return out


def _block_counts(tc: TrialConfig, eta: float, n: int, block: int, beam: str, check: bool):
    sysc = tc.system
    M, K, Nt = sysc.M, sysc.K, sysc.Nt
    rng = block_rng(tc.seed, block)
    size = (n,)
    gains = path_gains(sysc, rng, size)
    channels = draw_channels(M, K, Nt, rng, size)
    beams = [draw_beams(Nt, L, rng, size) for L in tc.ranks]
    if beam == "random":
        idx = [rng.integers(0, L, n) for L in tc.ranks]
    else:
        idx = [np.zeros(n, dtype=int) for _ in tc.ranks]
    if check:
        sinr, direct = sinr_sample(beams, channels, gains, tc.ranks, sysc.noise_power, both=True)
        for a, b in zip(sinr, direct):
            if not np.allclose(a, b, rtol=CONSISTENCY_RTOL, atol=0.0):
                worst = float(np.max(np.abs(a - b) / np.abs(b)))
                raise ConsistencyError(f"SINR evaluations disagree (relative gap {worst:.3g})")
    else:
        sinr = sinr_sample(beams, channels, gains, tc.ranks, sysc.noise_power)
    rows = np.arange(n)
    best, single = [], []
    for i in range(M):
        on_beam = sinr[i][rows, :, idx[i]]
        best.append(int(np.count_nonzero(on_beam.max(axis=-1) <= eta)))
        single.append(int(np.count_nonzero(on_beam[:, 0] <= eta)))
    return best, single


def estimate_outage(
    tc: TrialConfig,
    eta: float,
    cell: int = 0,
    threads: int = 1,
    beam: str = "first",
    check: bool = __debug__,
) -> OutageEstimate:
    """Empirical ``Pr{best SINR on a beam <= eta}``.

    ``beam="random"`` observes a uniformly chosen beam per trial instead of
    the first one. ``check`` recomputes every SINR from signal powers and
    raises :class:`ConsistencyError` on disagreement.
    """
    if beam not in ("first", "random"):
        raise ValueError(f"beam must be 'first' or 'random', got {beam!r}")
    if not 0 <= cell < tc.system.M:
        raise ValueError(f"cell {cell} out of range for M={tc.system.M}")
    n_blocks = -(-tc.trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, tc.trials - b * BLOCK_SIZE) for b in range(n_blocks)]

    def run(b):
        return _block_counts(tc, eta, sizes[b], b, beam, check)

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(n_blocks)))
    else:
        results = [run(b) for b in range(n_blocks)]

    M = tc.system.M
    best = [sum(r[0][i] for r in results) for i in range(M)]
    single = [sum(r[1][i] for r in results) for i in range(M)]
    per_cell = tuple(c / tc.trials for c in best)
    p_hat = per_cell[cell]
    return OutageEstimate(
        p_hat=p_hat,
        std_err=OutageEstimate.binomial_se(p_hat, tc.trials),
        trials=tc.trials,
        per_cell=per_cell,
        single_user=tuple(c / tc.trials for c in single),
    )
