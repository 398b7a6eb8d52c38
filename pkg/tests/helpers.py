"""Shared test fixtures: a family that genuinely satisfies the selection
inequality at small indices, and dyadic-valued random functions for which
all block arithmetic is exact in binary floating point."""

import numpy as np

from ergodecay import MeasureFamily, ResourceCapError, make_measure, point_mass


def uniform_dyadic_family() -> MeasureFamily:
    """mu_n = uniform on {1..2^n}: the decay functional is exactly 2/2^n."""

    def measure(n):
        M = 1 << n
        if M > 1 << 22:
            raise ResourceCapError("test family capped")
        return make_measure((j, 1.0 / M) for j in range(1, M + 1))

    return MeasureFamily("uniform-dyadic", measure, lambda n: 1 << n)


def dyadic_phi(rng, span=256, n=24):
    """Random signed function whose values are integers / 256."""
    sites = rng.integers(-span, span, size=n)
    vals = rng.integers(-(1 << 16), 1 << 16, size=n) / 256.0
    phi = make_measure(zip(sites.tolist(), vals))
    return phi if phi.n_atoms else point_mass(0)
