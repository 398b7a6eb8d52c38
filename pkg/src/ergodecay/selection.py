"""Greedy subsequence selection driven by certified Fourier-decay bounds.

The selection rule: indices n_1 < n_2 < ... with S(n_k) strictly increasing
and, for k >= 2, a certified bound

    sup_gamma |(1 - e(gamma)) mu_hat_{n_k}(gamma)|  <=  2^(-2*S(n_{k-1}) - 2k),

where S(n) is the cumulative dyadic support exponent.  The first index is
unconstrained (greedy takes n_1 = 1); its bound column is reported with the
convention S(n_0) = 0 but not enforced.  Admissibility always uses the
rigorous upper end of a sup bracket, so a returned selection satisfies the
inequalities by construction, not merely numerically.

Candidates whose functional cannot be bracketed tightly enough within the
grid cap are counted as inadmissible ("uncertifiable") rather than silently
accepted; for the families this library targets, stalls are themselves the
negative-result diagnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ResourceCapError, SelectionStalled, VerificationError
from .families import MeasureFamily
from .measures import (
    DEFAULT_GRID_CAP,
    WeightedMeasure,
    certify_sup_below,
    make_measure,
    triviality_sup,
)

__all__ = [
    "SelectionState",
    "s_of",
    "n_of_s",
    "tail_split",
    "select_subsequence",
    "verify_selection",
    "selection_to_json",
    "selection_from_json",
]


def _exponent_for(radius: int) -> int:
    """Minimal s >= 0 with radius <= 2^s."""
    return 0 if radius <= 1 else (radius - 1).bit_length()


def s_of(family: MeasureFamily, n: int) -> int:
    """S(n): minimal s with supp mu_m inside [-2^s, 2^s] for every m <= n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    radius = max(family.support_radius(m) for m in range(1, n + 1))
    return _exponent_for(radius)


def n_of_s(family: MeasureFamily, s: int, search_cap: int = 10**6) -> int:
    """N(s): minimal n with S(n) > s."""
    radius = 0
    for n in range(1, search_cap + 1):
        radius = max(radius, family.support_radius(n))
        if _exponent_for(radius) > s:
            return n
    raise ResourceCapError(
        f"n_of_s: no n <= {search_cap} with S(n) > {s}; family supports may be bounded"
    )


def tail_split(
    mu: WeightedMeasure, radius: int
) -> tuple[WeightedMeasure, WeightedMeasure]:
    """Split mu into (compact, tail): atoms inside [-radius, radius] and the rest."""
    inside = (mu.sites >= -radius) & (mu.sites <= radius)
    compact = make_measure(zip(mu.sites[inside].tolist(), mu.weights[inside]))
    tail = make_measure(zip(mu.sites[~inside].tolist(), mu.weights[~inside]))
    return compact, tail


@dataclass(frozen=True)
class SelectionState:
    family: str
    chosen: list
    S_values: list
    achieved_sups: list  # certified upper brackets of the triviality functional
    bounds: list  # 2^(-2 S(n_{k-1}) - 2k), with S(n_0) := 0

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "chosen": list(self.chosen),
            "S_values": list(self.S_values),
            "achieved_sups": list(self.achieved_sups),
            "bounds": list(self.bounds),
        }


def selection_to_json(state: SelectionState) -> str:
    return json.dumps(state.to_dict(), indent=2)


def selection_from_json(text: str) -> SelectionState:
    d = json.loads(text)
    return SelectionState(
        d["family"], d["chosen"], d["S_values"], d["achieved_sups"], d["bounds"]
    )


def select_subsequence(
    family: MeasureFamily,
    count: int,
    search_cap: int,
    sup_tol: float = 1e-6,
    grid_cap: int = DEFAULT_GRID_CAP,
    coarse_grid: int = 4096,
) -> SelectionState:
    """Greedy smallest-admissible selection of ``count`` indices.

    Deterministic: same family and parameters give the same state.  Raises
    SelectionStalled when some stage exhausts the cap; the report carries the
    smallest certified lower bound seen at that stage.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    chosen: list[int] = []
    S_values: list[int] = []
    achieved: list[float] = []
    bounds: list[float] = []

    cum_radius = 0
    cum_for: int = 0  # index up to which cum_radius is current

    def S_at(n: int) -> int:
        nonlocal cum_radius, cum_for
        for m in range(cum_for + 1, n + 1):
            r = family.support_radius(m)
            if r > cum_radius:
                cum_radius = r
        cum_for = max(cum_for, n)
        return _exponent_for(cum_radius)

    for k in range(1, count + 1):
        S_prev = S_values[-1] if S_values else 0
        bound = 2.0 ** (-2 * S_prev - 2 * k)
        start = chosen[-1] + 1 if chosen else 1
        if k == 1:
            # the first step is unconstrained; bound column is informational
            n = 1
            mu = family.measure(n)
            bracket = triviality_sup(mu, max(sup_tol, 1e-9), grid_cap=grid_cap)
            chosen.append(n)
            S_values.append(S_at(n))
            achieved.append(bracket.upper)
            bounds.append(bound)
            continue

        best_lower = float("inf")
        n_rejected = 0
        n_uncertifiable = 0
        n_skipped_S = 0
        accepted = None
        for n in range(start, search_cap + 1):
            S_n = S_at(n)
            if S_n <= S_values[-1]:
                n_skipped_S += 1
                continue
            mu = family.measure(n)
            verdict, lower, upper, _grid = certify_sup_below(
                mu, bound, grid_cap=grid_cap, coarse_grid=coarse_grid
            )
            best_lower = min(best_lower, lower)
            if verdict is True:
                accepted = (n, S_n, upper)
                break
            elif verdict is False:
                n_rejected += 1
            else:
                n_uncertifiable += 1
        if accepted is None:
            report = {
                "family": family.descriptor,
                "stage": k,
                "bound": bound,
                "best_sup_lower": best_lower,
                "rejected": n_rejected,
                "uncertifiable": n_uncertifiable,
                "skipped_support": n_skipped_S,
                "search_cap": search_cap,
                "chosen_so_far": list(chosen),
            }
            raise SelectionStalled(
                f"selection stalled at stage {k}/{count} for {family.descriptor}: "
                f"no admissible index <= {search_cap}; bound {bound:.3g}, best "
                f"certified sup lower bound {best_lower:.4g} "
                f"({n_rejected} rejected, {n_uncertifiable} uncertifiable at grid cap)",
                report,
            )
        n, S_n, upper = accepted
        chosen.append(n)
        S_values.append(S_n)
        achieved.append(upper)
        bounds.append(bound)

    return SelectionState(family.descriptor, chosen, S_values, achieved, bounds)


def verify_selection(family: MeasureFamily, state: SelectionState) -> list[dict]:
    """Independently recompute supports and sup brackets for a selection.

    Returns one report row per index with the margin of each inequality;
    raises VerificationError naming the first failing index.
    """
    rows = []
    cum_radius = 0
    prev_S = None
    last_n = 0
    for k, n in enumerate(state.chosen, start=1):
        for m in range(last_n + 1, n + 1):
            cum_radius = max(cum_radius, family.support_radius(m))
        last_n = n
        S_n = _exponent_for(cum_radius)
        if S_n != state.S_values[k - 1]:
            raise VerificationError(
                f"verification failed at k={k}: recomputed S={S_n} != stored "
                f"{state.S_values[k - 1]}"
            )
        if prev_S is not None and S_n <= prev_S:
            raise VerificationError(
                f"verification failed at k={k}: S(n_k) not strictly increasing"
            )
        bound = 2.0 ** (-2 * (prev_S if prev_S is not None else 0) - 2 * k)
        row = {"k": k, "n": n, "S": S_n, "bound": bound}
        if k >= 2:
            verdict, lower, upper, grid = certify_sup_below(family.measure(n), bound)
            row.update(
                {"sup_upper": upper, "sup_lower": lower, "margin": bound - upper}
            )
            if verdict is not True:
                raise VerificationError(
                    f"verification failed at k={k}: certified sup bracket "
                    f"[{lower:.6g}, {upper:.6g}] does not sit below bound {bound:.6g}"
                )
            if state.achieved_sups[k - 1] > bound:
                raise VerificationError(
                    f"verification failed at k={k}: stored achieved sup "
                    f"{state.achieved_sups[k - 1]:.6g} exceeds bound {bound:.6g}"
                )
        else:
            row.update({"sup_upper": state.achieved_sups[0], "margin": float("nan")})
        rows.append(row)
        prev_S = S_n
    return rows
