"""
Closed-form approximation-error bounds between the N-agent and mean-field optima.

The difference 1/(1 - gamma*S) - 1/(1 - gamma) is always evaluated in its fused form
gamma*(S - 1) / ((1 - gamma*S) * (1 - gamma)).
"""

from dataclasses import dataclass
import math
from typing import Dict, List, Literal, Optional, Sequence

from mfc_system.exceptions import ArgumentError, BoundValidityError, DegenerateBoundError
from mfc_system.models.schemas import LipschitzConstants
from mfc_system.utils.helpers import check_gamma

DegenerateMode = Literal["raise", "limit"]


@dataclass(frozen=True)
class Theorem1Constants:
    S_P: float
    S_R: float
    S_G: float
    C_P: float


@dataclass(frozen=True)
class Theorem2Constants:
    Q_P: float
    Q_R: float


def theorem1_constants(c: LipschitzConstants) -> Theorem1Constants:
    return Theorem1Constants(
        S_P=1.0 + 2.0 * c.L_P + c.L_Q * (1.0 + c.L_P),
        S_R=c.M + 2.0 * c.L_R + c.L_Q * (c.M + c.L_R),
        S_G=c.L_G * (2.0 + c.L_Q),
        C_P=2.0 + c.L_P,
    )


def theorem2_constants(c: LipschitzConstants) -> Theorem2Constants:
    return Theorem2Constants(
        Q_P=1.0 + c.L_P + c.L_Q,
        Q_R=c.M * (1.0 + c.L_Q) + c.L_R,
    )


def error_scale(N: int, x_size: int, u_size: int) -> float:
    """e = (sqrt|X| + sqrt|U|) / sqrt(N)"""
    _check_sizes(N, x_size, u_size)
    return (math.sqrt(x_size) + math.sqrt(u_size)) / math.sqrt(N)


def error_scale_special(N: int, x_size: int) -> float:
    """sqrt|X| / sqrt(N), the scale when r, P and P_G ignore the action distribution"""
    _check_sizes(N, x_size, 1)
    return math.sqrt(x_size) / math.sqrt(N)


def _check_sizes(N: int, x_size: int, u_size: int):
    if N < 1 or x_size < 1 or u_size < 1:
        raise ArgumentError(f"N={N}, |X|={x_size}, |U|={u_size} must all be >= 1")


def _check_validity(gamma: float, growth: float, label: str):
    check_gamma(gamma)
    if not gamma * growth < 1.0:
        raise BoundValidityError(
            f"bound requires gamma*{label} < 1, got gamma*{label} = {gamma} * {growth} = {gamma * growth}"
        )


def _growth_term(gamma: float, growth: float, drift: float, coupling: float, scale: float,
                 lead: float, label: str, degenerate: DegenerateMode) -> float:
    """
    lead/(S-1) * [(coupling/(S-1) + drift) * diff - gamma*coupling/(1-gamma)^2] * scale,
    with diff the fused difference; at S = 1 the analytic limit is used when asked for.
    """
    if growth == 1.0:
        if degenerate != "limit":
            raise DegenerateBoundError(
                f"{label} = 1 makes the bound singular; pass degenerate='limit' for the analytic limit"
            )
        inner = drift / (1.0 - gamma) ** 2 + coupling * gamma / (1.0 - gamma) ** 3
        return lead * gamma * inner * scale
    gap = growth - 1.0
    diff = gamma * gap / ((1.0 - gamma * growth) * (1.0 - gamma))
    bracket = (coupling / gap + drift) * diff - gamma * coupling / (1.0 - gamma) ** 2
    return (lead / gap) * bracket * scale


def theorem1_bound(k: Theorem1Constants, gamma: float, N: int, x_size: int, u_size: int,
                   M: float, L_R: float, L_G: float,
                   degenerate: DegenerateMode = "raise") -> float:
    """Upper bound on |max V_N - max V_inf| with action-dependent dynamics"""
    _check_validity(gamma, k.S_P, "S_P")
    _check_sizes(N, x_size, u_size)
    root_n = math.sqrt(N)
    first = (M + L_R * math.sqrt(u_size)) / (1.0 - gamma) / root_n
    second = math.sqrt(u_size / N) * M * L_G * gamma / (1.0 - gamma) ** 2
    third = _growth_term(gamma, k.S_P, k.S_R, M * k.S_G, error_scale(N, x_size, u_size),
                         k.C_P, "S_P", degenerate)
    return first + second + third


def theorem2_bound(k: Theorem2Constants, gamma: float, N: int, x_size: int, M: float,
                   L_G: float, degenerate: DegenerateMode = "raise") -> float:
    """Bound when r, P and P_G do not depend on the action distribution; free of |U|"""
    _check_validity(gamma, k.Q_P, "Q_P")
    _check_sizes(N, x_size, 1)
    first = M / (1.0 - gamma) / math.sqrt(N)
    second = _growth_term(gamma, k.Q_P, k.Q_R, M * L_G, error_scale_special(N, x_size),
                          2.0, "Q_P", degenerate)
    return first + second


def bound_rows(c: LipschitzConstants, gamma: float, n_grid: Sequence[int], x_size: int,
               u_size: int, degenerate: DegenerateMode = "raise",
               skip_invalid: bool = False) -> List[Dict[str, Optional[float]]]:
    """
    Both bounds over a grid of N. A bound outside its validity region raises, or with
    skip_invalid is reported as None; the other bound is still evaluated.
    """
    k1 = theorem1_constants(c)
    k2 = theorem2_constants(c)
    evaluators = {
        "theorem1": lambda N: theorem1_bound(k1, gamma, N, x_size, u_size, c.M, c.L_R, c.L_G,
                                             degenerate),
        "theorem2": lambda N: theorem2_bound(k2, gamma, N, x_size, c.M, c.L_G, degenerate),
    }
    rows = []
    for N in n_grid:
        row: Dict[str, Optional[float]] = {"N": N, "error_scale": error_scale(N, x_size, u_size)}
        for key, evaluate in evaluators.items():
            try:
                row[key] = evaluate(N)
            except BoundValidityError:
                if not skip_invalid:
                    raise
                row[key] = None
        rows.append(row)
    return rows


def validity_failures(c: LipschitzConstants, gamma: float) -> Dict[str, str]:
    """Messages for the bounds whose validity condition fails at gamma, keyed like bound_rows"""
    failures = {}
    for key, growth, label in (("theorem1", theorem1_constants(c).S_P, "S_P"),
                               ("theorem2", theorem2_constants(c).Q_P, "Q_P")):
        try:
            _check_validity(gamma, growth, label)
        except BoundValidityError as e:
            failures[key] = str(e)
    return failures
