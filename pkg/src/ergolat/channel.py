"""Ergodic fading processes, noise, and the complex-to-real embedding.

Fading is i.i.d. across time (the memoryless instantiation of a stationary
ergodic process); every expectation in the rate formulas depends on the
marginal only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REAL = "real"
COMPLEX = "complex"


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class FadingModel:
    """Marginal distribution of the channel matrix at one time instant.

    kinds: ``rayleigh`` (i.i.d. CN(0,1) entries), ``nakagami`` (per-entry
    Nakagami-m envelope with unit power and uniform phase), ``fixed``
    (deterministic matrix).
    """

    kind: str
    m: float = 1.0
    matrix: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in ("rayleigh", "nakagami", "fixed"):
            raise ChannelError(f"unknown fading model {self.kind!r}")
        if self.kind == "nakagami" and self.m <= 0:
            raise ChannelError("nakagami shape m must be > 0")
        if self.kind == "fixed" and self.matrix is None:
            raise ChannelError("fixed model needs a matrix")

    def key(self) -> str:
        if self.kind == "nakagami":
            return f"nakagami:m={self.m:g}"
        if self.kind == "fixed":
            return f"fixed:{hash(self.matrix) & 0xFFFFFFFF:08x}"
        return self.kind

    def fixed_matrix(self) -> np.ndarray:
        return np.array(self.matrix, dtype=complex)


def rayleigh() -> FadingModel:
    return FadingModel("rayleigh")


def nakagami(m: float) -> FadingModel:
    return FadingModel("nakagami", m=m)


def fixed(matrix) -> FadingModel:
    arr = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return FadingModel("fixed", matrix=tuple(map(tuple, arr)))


def parse_model(spec: str) -> FadingModel:
    """Config key: ``rayleigh``, ``nakagami:m=<val>`` or ``fixed:<file>``."""
    spec = spec.strip()
    if spec == "rayleigh":
        return rayleigh()
    if spec.startswith("nakagami"):
        _, _, arg = spec.partition(":")
        key, _, val = arg.partition("=")
        if key.strip() != "m":
            raise ChannelError(f"bad nakagami spec {spec!r}")
        return nakagami(float(val))
    if spec.startswith("fixed:"):
        path = spec.split(":", 1)[1]
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([complex(tok) for tok in line.split()])
        return fixed(rows)
    raise ChannelError(f"unknown fading model spec {spec!r}")


def sample_channels(model: FadingModel, count: int, n_r: int, n_t: int, rng) -> np.ndarray:
    """``count`` i.i.d. draws of the complex channel matrix, shape (count, n_r, n_t)."""
    rng = np.random.default_rng(rng)
    if model.kind == "fixed":
        h = model.fixed_matrix()
        if h.shape != (n_r, n_t):
            raise ChannelError(f"fixed matrix shape {h.shape} != ({n_r}, {n_t})")
        return np.broadcast_to(h, (count, n_r, n_t)).copy()
    if model.kind == "rayleigh":
        re = rng.standard_normal((count, n_r, n_t))
        im = rng.standard_normal((count, n_r, n_t))
        return (re + 1j * im) / np.sqrt(2.0)
    # nakagami: |h|^2 ~ Gamma(m, 1/m) so E|h|^2 = 1, phase uniform
    power = rng.gamma(model.m, 1.0 / model.m, size=(count, n_r, n_t))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(count, n_r, n_t))
    return np.sqrt(power) * np.exp(1j * phase)


def sample_channel(model: FadingModel, n_r: int, n_t: int, rng) -> np.ndarray:
    """One draw of the channel matrix."""
    return sample_channels(model, 1, n_r, n_t, rng)[0]


def realify(h) -> np.ndarray:
    """[[Re, -Im], [Im, Re]] embedding; works on batches (..., r, c)."""
    h = np.asarray(h, dtype=complex)
    scalar = h.ndim == 0
    if scalar:
        h = h.reshape(1, 1)
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def sample_noise(dim: int, rng) -> np.ndarray:
    """Unit-variance real Gaussian noise vector."""
    if dim < 1:
        raise ChannelError("dim must be >= 1")
    return np.random.default_rng(rng).standard_normal(dim)


@dataclass(frozen=True)
class LinkConfig:
    """Point-to-point link: antennas, per-antenna SNR, block length, mode.

    In complex mode the pipeline runs on the realified channel: each channel
    use carries 2*n_t real dimensions with unit-variance real noise, and the
    coarse lattice second moment per real dimension equals rho.
    """

    n_t: int
    n_r: int
    rho: float
    block_len: int
    mode: str = COMPLEX

    def __post_init__(self):
        if self.rho <= 0:
            raise ChannelError("rho must be > 0")
        if self.mode not in (REAL, COMPLEX):
            raise ChannelError(f"mode must be 'real' or 'complex', got {self.mode!r}")
        if self.n_t < 1 or self.n_r < 1 or self.block_len < 1:
            raise ChannelError("antenna counts and block length must be positive")

    @property
    def expand(self) -> int:
        return 2 if self.mode == COMPLEX else 1

    @property
    def tx_dim(self) -> int:
        """Real transmit dimensions per channel use."""
        return self.expand * self.n_t

    @property
    def rx_dim(self) -> int:
        return self.expand * self.n_r

    @property
    def lattice_dim(self) -> int:
        """Total real dimension of one codeword."""
        return self.tx_dim * self.block_len


def channel_uses(config: LinkConfig, model: FadingModel, rng) -> np.ndarray:
    """Per-use real channel matrices, shape (block_len, rx_dim, tx_dim).

    Complex mode draws complex matrices and realifies them; real mode draws
    real matrices (real parts scaled to unit per-entry power for rayleigh /
    nakagami, or the fixed matrix taken as real).
    """
    rng = np.random.default_rng(rng)
    if config.mode == COMPLEX:
        h = sample_channels(model, config.block_len, config.n_r, config.n_t, rng)
        return realify(h)
    if model.kind == "fixed":
        h = model.fixed_matrix()
        if np.max(np.abs(h.imag)) > 0:
            raise ChannelError("real mode needs a real fixed matrix")
        return np.broadcast_to(h.real, (config.block_len, config.n_r, config.n_t)).copy()
    if model.kind == "rayleigh":
        return rng.standard_normal((config.block_len, config.n_r, config.n_t))
    power = rng.gamma(model.m, 1.0 / model.m, size=(config.block_len, config.n_r, config.n_t))
    sign = rng.integers(0, 2, size=power.shape) * 2 - 1
    return np.sqrt(power) * sign
