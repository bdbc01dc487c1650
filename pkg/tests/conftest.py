import math

import numpy as np
import pytest

from dublaser.model import State, SystemParams

# seed of the randomized oracle sweep used by the acceptance suite
SWEEP_SEED = 20261015
OMEGAS = (0.01, 0.3, 2.0)


def random_scenarios(n, seed, box=5.0, omegas=OMEGAS):
    """Starts uniform in [-box, box]^2 outside the unit disk, angles uniform,
    omega_max cycling through `omegas`; r = rho = 1."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x, y = rng.uniform(-box, box, 2)
        th, ps = rng.uniform(0, 2 * math.pi, 2)
        w = omegas[len(out) % len(omegas)]
        if x * x + y * y <= 1.0:
            continue
        out.append((SystemParams(1.0, 1.0, w), State(x, y, th, ps)))
    return out


FIGURES = {
    "fig7": (SystemParams(1.0, 1.0, 0.3), State(2.0, 2.0, math.pi / 2, math.pi)),
    "fig9": (SystemParams(1.0, 1.0, 0.01), State(2.0, 2.0, math.pi / 2, 4 * math.pi / 3)),
    "fig8": (SystemParams(1.0, 1.0, 0.01), State(0.6, 0.9, math.pi / 2, math.pi)),
    "fig8_alt": (SystemParams(1.0, 1.0, 0.01), State(0.5, 0.5, math.pi / 2, math.pi)),
}


@pytest.fixture
def figures():
    return FIGURES
