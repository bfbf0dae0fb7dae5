"""Monte Carlo ruin estimates for the scaled model.

Only claim instants are simulated: the surplus rises linearly between
claims, so ruin can only happen right after a claim.  The infinite horizon
is cut by an upper barrier ``x + kappa / R_n``; by the Lundberg bound a path
reaching it is ruined later with probability at most ``exp(-kappa)``, which
is reported as the truncation bias bound.

Each path draws from its own Philox substream keyed by ``(seed, path)``,
so estimates do not depend on how paths are split across workers.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .claims import ClaimDistribution, DiscreteEmpirical, Exponential, GammaTwo
from .errors import CapExceeded, ConfigError, UnsupportedDistribution
from .scaling import ScaledModel, rn_scaled

CAP_TOLERANCE = 1e-3
_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    paths: int = 100_000
    seed: int = 0
    kappa: float = 23.0
    max_claims: int = 10_000_000
    workers: int | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError("paths must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if self.max_claims < 1:
            raise ConfigError("max_claims must be positive")


@dataclass(frozen=True)
class SimEstimate:
    p_hat: float
    stderr: float
    bias_bound: float
    paths: int
    seed: int
    capped: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def check_cap(self, tolerance: float = CAP_TOLERANCE) -> "SimEstimate":
        """Raise :class:`CapExceeded` when more than ``tolerance`` of the paths were discarded."""
        total = self.paths + self.capped
        if self.capped > tolerance * total:
            raise CapExceeded(f"{self.capped} of {total} paths hit the claim cap")
        return self


def _kernel_args(dist: ClaimDistribution):
    if isinstance(dist, Exponential):
        return kernels.KIND_EXPONENTIAL, np.array([dist.beta]), np.zeros(1), 1
    if isinstance(dist, GammaTwo):
        return kernels.KIND_GAMMA2, np.array([dist.beta]), np.zeros(1), 2
    if isinstance(dist, DiscreteEmpirical):
        y, p = dist.atoms
        return kernels.KIND_DISCRETE, np.array(y), np.cumsum(p)[:-1], 1
    raise UnsupportedDistribution(f"cannot simulate {type(dist).__name__}")


def simulate_ruin(model: ScaledModel, x: float, config: SimConfig = SimConfig()) -> SimEstimate:
    """Estimate ``psi_n(x)`` by simulating rate ``n lam`` claims of size ``Y/sqrt(n)``."""
    if not x >= 0:
        raise ConfigError("initial surplus must be nonnegative")
    params = model.as_params()
    kind, values, cum, upc = _kernel_args(params.dist)
    barrier = x + config.kappa / rn_scaled(model)
    lam, c = params.lam, params.premium_rate

    def run(bounds):
        return kernels.simulate_paths(kind, values, cum, upc, lam, c, float(x), barrier,
                                      config.seed, bounds[0], bounds[1], config.max_claims)

    chunks = [(s, min(s + _CHUNK, config.paths)) for s in range(0, config.paths, _CHUNK)]
    workers = config.workers or min(len(chunks), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(ch) for ch in chunks]
    ruined, survived, capped = (sum(col) for col in zip(*results))

    used = ruined + survived
    if used == 0:
        raise CapExceeded("every path hit the claim cap")
    p = ruined / used
    return SimEstimate(
        p_hat=p,
        stderr=math.sqrt(p * (1.0 - p) / used),
        bias_bound=math.exp(-config.kappa),
        paths=used,
        seed=config.seed,
        capped=capped,
    )
