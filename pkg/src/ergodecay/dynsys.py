"""Concrete dynamical systems and weighted ergodic averages.

Two systems keep tau^j an O(1) computation even for sites of size ~1e9:
irrational rotation of the torus (the angle held as an exact rational
surrogate with denominator 2^61, so orbits are exact integer arithmetic)
and the cyclic shift on Z_M.  Almost-everywhere convergence is reported as
tail-oscillation statistics over sampled starting points, never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError
from .measures import WeightedMeasure

__all__ = [
    "System",
    "rotation_system",
    "golden_rotation",
    "cyclic_system",
    "ObservedFunction",
    "indicator_function",
    "trig_function",
    "table_function",
    "weighted_average",
    "convergence_trace",
]

_DEN = 1 << 61


@dataclass(frozen=True)
class System:
    kind: str  # "rotation" | "cyclic"
    alpha_num: int = 0  # rotation angle alpha_num / alpha_den
    alpha_den: int = 1
    modulus: int = 0  # cyclic shift on Z_modulus

    @property
    def descriptor(self) -> str:
        if self.kind == "rotation":
            return f"rotation:{self.alpha_num}/{self.alpha_den}"
        return f"cyclic:{self.modulus}"


def rotation_system(alpha) -> System:
    """Torus rotation by an exact rational surrogate of alpha."""
    a = Fraction(alpha) if not isinstance(alpha, Fraction) else alpha
    a %= 1
    return System("rotation", alpha_num=a.numerator, alpha_den=a.denominator)


def golden_rotation() -> System:
    """Rotation by the fractional part of the golden ratio, as an odd
    numerator over 2^61 (denominator kept above 2^60 by construction)."""
    num = round((math.sqrt(5.0) - 1.0) / 2.0 * _DEN)
    if num % 2 == 0:
        num += 1
    return System("rotation", alpha_num=num, alpha_den=_DEN)


def cyclic_system(M: int) -> System:
    if M < 1:
        raise ConfigError("cyclic modulus must be >= 1")
    return System("cyclic", modulus=M)


@dataclass(frozen=True)
class ObservedFunction:
    kind: str  # "indicator" | "trig" | "table"
    a: float = 0.0  # indicator interval [a, b) on the torus
    b: float = 0.0
    m: int = 0  # trig frequency
    table: tuple = ()  # values on Z_M

    @property
    def descriptor(self) -> str:
        if self.kind == "indicator":
            return f"indicator:{self.a}:{self.b}"
        if self.kind == "trig":
            return f"trig:{self.m}"
        return f"table[{len(self.table)}]"

    def mean(self) -> complex:
        """Closed-form space average."""
        if self.kind == "indicator":
            return (self.b - self.a) % 1.0
        if self.kind == "trig":
            return 1.0 if self.m == 0 else 0.0
        return complex(np.mean(np.asarray(self.table)))


def indicator_function(a: float, b: float) -> ObservedFunction:
    return ObservedFunction("indicator", a=float(a) % 1.0, b=float(b) % 1.0)


def trig_function(m: int) -> ObservedFunction:
    return ObservedFunction("trig", m=int(m))


def table_function(values) -> ObservedFunction:
    return ObservedFunction("table", table=tuple(complex(v) for v in values))


def _rotation_fractions(sys: System, x: Fraction, sites, mult: int = 1) -> np.ndarray:
    """Exact fractional parts of mult*(x + j*alpha) for each site j."""
    an, ad = sys.alpha_num, sys.alpha_den
    xn, xd = x.numerator, x.denominator
    den = ad * xd
    base = xn * ad
    step = an * xd
    out = np.empty(len(sites), dtype=np.float64)
    for i, j in enumerate(sites):
        out[i] = (mult * (base + int(j) * step)) % den / den
    return out


def weighted_average(sys: System, f: ObservedFunction, mu: WeightedMeasure, x) -> complex:
    """sum_j f(tau^j x) mu(j): the weighted ergodic average at x."""
    if mu.n_atoms == 0:
        return 0.0
    sites = mu.sites.tolist()
    if sys.kind == "rotation":
        xf = Fraction(x) if not isinstance(x, Fraction) else x
        if f.kind == "trig":
            fr = _rotation_fractions(sys, xf, sites, mult=f.m)
            values = np.exp(2j * math.pi * fr)
        elif f.kind == "indicator":
            pts = _rotation_fractions(sys, xf, sites)
            if f.a <= f.b:
                values = ((pts >= f.a) & (pts < f.b)).astype(np.complex128)
            else:  # wrap-around interval
                values = ((pts >= f.a) | (pts < f.b)).astype(np.complex128)
        else:
            raise ConfigError("table observables need a cyclic system")
        return complex(np.dot(mu.weights, values))
    if sys.kind == "cyclic":
        M = sys.modulus
        pos = (int(x) + mu.sites) % M
        if f.kind == "table":
            if len(f.table) != M:
                raise ConfigError(f"table length {len(f.table)} != modulus {M}")
            values = np.asarray(f.table, dtype=np.complex128)[pos]
        elif f.kind == "trig":
            values = np.exp(2j * math.pi * ((f.m * pos) % M) / M)
        elif f.kind == "indicator":
            lo = int(f.a * M) % M
            hi = int(f.b * M) % M
            if lo <= hi:
                values = ((pos >= lo) & (pos < hi)).astype(np.complex128)
            else:
                values = ((pos >= lo) | (pos < hi)).astype(np.complex128)
        return complex(np.dot(mu.weights, values))
    raise ConfigError(f"unknown system kind {sys.kind!r}")


def convergence_trace(
    sys: System,
    f: ObservedFunction,
    measures,
    indices=None,
    x_samples: int = 16,
    seed: int = 0,
) -> dict:
    """Weighted averages along a measure list at sampled starting points.

    Per sample x and position k, ``osc_tail`` is the diameter of the averages
    from position k to the end; the summary reports the median and max of the
    mid-sequence oscillation over samples (the desk-scale convergence shadow).
    """
    measures = list(measures)
    K = len(measures)
    if K == 0:
        raise ValueError("need at least one measure")
    if indices is None:
        indices = list(range(1, K + 1))
    rng = np.random.default_rng(seed)
    rows = []
    mid_oscs = []
    for xi in range(x_samples):
        if sys.kind == "rotation":
            x = Fraction(int(rng.integers(0, 1 << 32)), 1 << 32)
            x_repr = float(x)
        else:
            x = int(rng.integers(0, sys.modulus))
            x_repr = x
        avgs = [weighted_average(sys, f, mu, x) for mu in measures]
        for k in range(K):
            tail = avgs[k:]
            osc = max(
                (abs(u - v) for i, u in enumerate(tail) for v in tail[i + 1 :]),
                default=0.0,
            )
            rows.append(
                {
                    "k": k + 1,
                    "n_k": indices[k],
                    "x": x_repr,
                    "value": avgs[k],
                    "osc_tail": osc,
                }
            )
            if k == K // 2:
                mid_oscs.append(osc)
    return {
        "rows": rows,
        "median_osc": float(np.median(mid_oscs)),
        "max_osc": float(np.max(mid_oscs)),
    }
