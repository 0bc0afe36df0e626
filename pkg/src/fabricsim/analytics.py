"""Closed-form reliability formulas and simulation-vs-theory cross-checks.

End-to-end chain delivery, worst-link dominance, triangle redundancy, and
retry amplification, each as a direct formula evaluation; plus a discrepancy
table that scores simulated quantities against their formula values in units
of the estimator's standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ChainSpec:
    """Per-link success probabilities of a path, in hop order."""

    successes: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.successes) < 1:
            raise ValueError("chain needs at least one link")
        for s in self.successes:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"success probability {s} outside [0, 1]")


def chain_success(spec: ChainSpec) -> float:
    """One-attempt end-to-end delivery probability: the product of the links.

    Evaluated in the log domain when the direct product would underflow.
    """
    prod = 1.0
    for s in spec.successes:
        prod *= s
    if prod > 1e-300 or any(s == 0.0 for s in spec.successes):
        return prod
    return math.exp(math.fsum(math.log(s) for s in spec.successes))


def chain_with_bad_link(p: float, q: float, length: int) -> tuple[float, float, float]:
    """(P_bad, ratio to all-healthy, average failure probability).

    One link fails with probability q, the other length-1 links with p. The
    ratio to the all-healthy chain is (1-q)/(1-p): the path is dominated by
    its worst link, while the average probability moves only by (q-p)/L.
    """
    if length < 1:
        raise ValueError("chain needs at least one link")
    for name, v in (("p", p), ("q", q)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    healthy = ChainSpec((1.0 - p,) * length)
    bad = ChainSpec(((1.0 - p),) * (length - 1) + (1.0 - q,))
    p_bad = chain_success(bad)
    p_healthy = chain_success(healthy)
    ratio = (1.0 - q) / (1.0 - p) if p < 1.0 else 1.0
    avg_p = p + (q - p) / length
    return p_bad, ratio, avg_p


def triangle_success(s_direct: float, s_hop1: float, s_hop2: float) -> float:
    """Delivery probability with a two-hop detour parallel to the direct edge."""
    for s in (s_direct, s_hop1, s_hop2):
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"success probability {s} outside [0, 1]")
    s_alt = s_hop1 * s_hop2
    return 1.0 - (1.0 - s_direct) * (1.0 - s_alt)


def retry_success(p_chain: float, retries: int) -> float:
    """Eventual delivery probability after R independent end-to-end attempts."""
    if retries < 1:
        raise ValueError("needs at least one attempt")
    if not 0.0 <= p_chain <= 1.0:
        raise ValueError("p_chain outside [0, 1]")
    return 1.0 - (1.0 - p_chain) ** retries


@dataclass(frozen=True)
class CheckRow:
    quantity: str
    theory: float
    simulated: float
    std_error: float  # of the simulated estimator
    sigma_tolerance: float

    @property
    def sigma(self) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.simulated == self.theory else math.inf
        return abs(self.simulated - self.theory) / self.std_error

    @property
    def rel_error(self) -> float:
        if self.theory == 0.0:
            return abs(self.simulated)
        return abs(self.simulated - self.theory) / abs(self.theory)

    @property
    def passed(self) -> bool:
        return self.sigma <= self.sigma_tolerance


CROSS_CHECK_HEADER = ["quantity", "theory", "simulated", "rel-error", "sigma", "pass"]


def cross_check_csv(rows: list[CheckRow]) -> str:
    lines = [",".join(CROSS_CHECK_HEADER)]
    lines.extend(",".join(r) for r in cross_check_report(rows))
    return "\n".join(lines) + "\n"


def cross_check_report(rows: list[CheckRow]) -> list[list[str]]:
    """Discrepancy table (CSV-shaped rows) for matched theory/simulation pairs."""
    names = [r.quantity for r in rows]
    if len(set(names)) != len(names):
        raise ValueError("duplicate quantity names in cross-check pairing")
    out = []
    for r in rows:
        out.append(
            [
                r.quantity,
                f"{r.theory:.10g}",
                f"{r.simulated:.10g}",
                f"{r.rel_error:.4g}",
                f"{r.sigma:.3f}",
                "pass" if r.passed else "FAIL",
            ]
        )
    return out
