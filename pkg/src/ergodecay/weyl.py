"""Quadratic exponential sums and exact rational approximation.

Diophantine checks run on an exact rational surrogate of the input frequency
(the precise dyadic value of the float64), so every certificate is verified by
integer arithmetic rather than floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .measures import _csum, _unit_phases

__all__ = [
    "ApproxCertificate",
    "exact_frequency",
    "convergents",
    "dirichlet_approx",
    "weyl_sum",
    "gauss_sum",
    "weyl_bound_audit",
    "WeylAuditRow",
    "smallest_denominator",
    "qn_escape_trace",
]


def exact_frequency(beta) -> Fraction:
    """Exact rational surrogate of a frequency (dyadic value of the float)."""
    return beta if isinstance(beta, Fraction) else Fraction(beta)


def convergents(x: Fraction):
    """Continued-fraction convergents p/q of x >= 0, in increasing-q order."""
    num, den = x.numerator, x.denominator
    p_prev, q_prev = 1, 0
    p, q = num // den, 1
    yield Fraction(p, q)
    num, den = den, num - (num // den) * den
    while den != 0:
        a = num // den
        num, den = den, num - a * den
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        yield Fraction(p, q)


@dataclass(frozen=True)
class ApproxCertificate:
    """A rational p/q with q <= q_max and |beta - p/q| <= 1/(q*q_max),
    all inequalities verified exactly."""

    beta: Fraction
    q_max: Fraction
    rational: Fraction
    error: Fraction

    @property
    def p(self) -> int:
        return self.rational.numerator

    @property
    def q(self) -> int:
        return self.rational.denominator

    def verify(self) -> bool:
        return self.q <= self.q_max and self.error * self.q * self.q_max <= 1


def dirichlet_approx(beta, q_max) -> ApproxCertificate:
    """Dirichlet-quality rational approximation via continued fractions.

    Returns the deepest convergent with denominator <= q_max; the classical
    inequality |x - p_i/q_i| <= 1/(q_i q_{i+1}) with q_{i+1} > q_max supplies
    the guarantee, re-verified exactly before returning.
    """
    qm = q_max if isinstance(q_max, Fraction) else Fraction(q_max)
    if qm < 1:
        raise ValueError("q_max must be >= 1")
    b = exact_frequency(beta)
    best = None
    for conv in convergents(b):
        if conv.denominator > qm:
            break
        best = conv
    cert = ApproxCertificate(b, qm, best, abs(b - best))
    if not cert.verify():
        raise AssertionError(f"Dirichlet guarantee failed: {cert}")  # unreachable
    return cert


def smallest_denominator(beta, N: int) -> Fraction:
    """Smallest-denominator p/q with q <= N^(4/3), |beta - p/q| <= 1/(q N^(4/3)).

    The minimizer is the first convergent with |q*beta - p| <= N^(-4/3): by the
    best-approximation property no smaller q can do better than the preceding
    convergent's record.  Both inequalities are tested exactly via cubes
    (q^3 <= N^4 and |q*beta - p|^3 * N^4 <= 1).
    """
    b = exact_frequency(beta)
    N4 = N**4
    last = None
    for conv in convergents(b):
        p, q = conv.numerator, conv.denominator
        if q**3 > N4:
            break
        last = conv
        if abs(b * q - p) ** 3 * N4 <= 1:
            return conv
    return last  # Dirichlet makes this branch unreachable for real inputs


def weyl_sum(N: int, beta: float) -> complex:
    """(1/N) sum_{j=1}^{N} e(j^2 beta), compensated direct summation."""
    if N < 1:
        raise ValueError("N must be >= 1")
    j = np.arange(1, N + 1, dtype=np.int64)
    return _csum(_unit_phases(j * j, float(beta) % 1.0)) / N


def gauss_sum(p: int, q: int | None = None) -> complex:
    """Normalized complete quadratic Gauss sum (1/q) sum_{n<q} e(n^2 p/q)."""
    if q is None:
        frac = Fraction(p)
        p, q = frac.numerator, frac.denominator
    if q < 1:
        raise ValueError("denominator must be positive")
    if math.gcd(p, q) != 1:
        raise ValueError("p/q must be in lowest terms")
    n = np.arange(q, dtype=np.int64)
    residues = (n * n % q) * (p % q) % q
    return _csum(np.exp((2j * math.pi) * (residues / q))) / q


@dataclass(frozen=True)
class WeylAuditRow:
    N: int
    beta: float
    p: int
    q: int
    err: float
    value: float
    bound_shape: float
    ratio: float


def weyl_bound_audit(N: int, beta: float) -> WeylAuditRow:
    """Compare |weyl_sum| against the shape 1/sqrt(q) + sqrt(log N)/N^(1/3)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    cert = dirichlet_approx(beta, float(N) ** (4.0 / 3.0))
    value = abs(weyl_sum(N, beta))
    shape = 1.0 / math.sqrt(cert.q) + math.sqrt(math.log(N)) / N ** (1.0 / 3.0)
    return WeylAuditRow(
        N, float(beta), cert.p, cert.q, float(cert.error), value, shape, value / shape
    )


def qn_escape_trace(gamma: float, N_list) -> list[tuple[int, int, int]]:
    """For each N, the smallest denominator q_N approximating gamma + N^(-1/2)
    at quality N^(-4/3); rows (N, q_N, p_N)."""
    out = []
    for N in N_list:
        beta = (float(gamma) + 1.0 / math.sqrt(N)) % 1.0
        conv = smallest_denominator(beta, int(N))
        out.append((int(N), conv.denominator, conv.numerator))
    return out
