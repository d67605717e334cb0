"""Counter-based random streams.

Every stochastic entity (classical particle, quantum trajectory, probe
orbit) owns a stream derived from (master seed, domain, entity index)
through a Philox counter-based generator, so results do not depend on
scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep streams for different entity kinds disjoint even when
# their indices collide.
DOMAIN_PARTICLE = 1
DOMAIN_TRAJECTORY = 2
DOMAIN_PROBE = 3
DOMAIN_INIT = 4

_MASK64 = (1 << 64) - 1


def stream(seed: int, domain: int, index: int) -> np.random.Generator:
    """Independent, reproducible generator for one entity."""
    if index < 0:
        raise ValueError("entity index must be >= 0")
    key = (seed & _MASK64) | ((domain & 0xFF) << 64) | (index << 72)
    return np.random.Generator(np.random.Philox(key=key))


def particle_stream(seed: int, index: int) -> np.random.Generator:
    return stream(seed, DOMAIN_PARTICLE, index)


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    return stream(seed, DOMAIN_TRAJECTORY, index)


def probe_stream(seed: int, index: int) -> np.random.Generator:
    return stream(seed, DOMAIN_PROBE, index)


def init_stream(seed: int) -> np.random.Generator:
    """Stream used to draw initial ensembles (one per run)."""
    return stream(seed, DOMAIN_INIT, 0)
