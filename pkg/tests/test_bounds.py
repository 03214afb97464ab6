import math

import pytest

from mfc_system.core.bounds import (
    Theorem1Constants,
    Theorem2Constants,
    bound_rows,
    error_scale,
    error_scale_special,
    theorem1_bound,
    theorem1_constants,
    theorem2_bound,
    theorem2_constants,
    validity_failures,
)
from mfc_system.exceptions import ArgumentError, BoundValidityError, DegenerateBoundError
from mfc_system.models.schemas import LipschitzConstants

CONSTANTS = LipschitzConstants(M=1.0, L_R=1.0, L_P=0.5, L_G=0.5, L_Q=0.5)


def unfused_growth(gamma, S, drift, coupling, lead):
    """Growth term written with the plain difference of geometric sums"""
    diff = 1.0 / (1.0 - gamma * S) - 1.0 / (1.0 - gamma)
    return lead / (S - 1.0) * ((coupling / (S - 1.0) + drift) * diff
                               - gamma * coupling / (1.0 - gamma) ** 2)


def test_derived_constants():
    k1 = theorem1_constants(CONSTANTS)
    assert (k1.S_P, k1.S_R, k1.S_G, k1.C_P) == pytest.approx((2.75, 4.0, 1.25, 2.5))
    k2 = theorem2_constants(CONSTANTS)
    assert (k2.Q_P, k2.Q_R) == pytest.approx((2.0, 2.5))


def test_error_scales():
    assert error_scale(100, 9, 4) == pytest.approx(0.5)
    assert error_scale_special(100, 9) == pytest.approx(0.3)
    with pytest.raises(ArgumentError):
        error_scale(0, 2, 2)


def test_theorem1_matches_direct_evaluation():
    gamma, N, X, U = 0.3, 100, 10, 2
    c = CONSTANTS
    k = theorem1_constants(c)
    e = (math.sqrt(X) + math.sqrt(U)) / math.sqrt(N)
    expected = (
        (c.M + c.L_R * math.sqrt(U)) / (1 - gamma) / math.sqrt(N)
        + math.sqrt(U / N) * c.M * c.L_G * gamma / (1 - gamma) ** 2
        + unfused_growth(gamma, k.S_P, k.S_R, c.M * k.S_G, k.C_P) * e
    )
    assert theorem1_bound(k, gamma, N, X, U, c.M, c.L_R, c.L_G) == pytest.approx(expected, rel=1e-12)


def test_theorem2_matches_direct_evaluation():
    gamma, N, X = 0.3, 100, 10
    c = CONSTANTS
    k = theorem2_constants(c)
    expected = (
        c.M / (1 - gamma) / math.sqrt(N)
        + unfused_growth(gamma, k.Q_P, k.Q_R, c.M * c.L_G, 2.0) * math.sqrt(X) / math.sqrt(N)
    )
    assert theorem2_bound(k, gamma, N, X, c.M, c.L_G) == pytest.approx(expected, rel=1e-12)


def test_validity_condition():
    k = theorem1_constants(CONSTANTS)
    with pytest.raises(BoundValidityError, match=r"gamma\*S_P < 1"):
        theorem1_bound(k, 0.5, 100, 10, 2, 1.0, 1.0, 0.5)
    with pytest.raises(BoundValidityError, match=r"gamma\*Q_P < 1"):
        theorem2_bound(theorem2_constants(CONSTANTS), 0.5, 100, 10, 1.0, 0.5)


def test_degenerate_growth():
    k = Theorem1Constants(S_P=1.0, S_R=2.0, S_G=1.0, C_P=2.0)
    with pytest.raises(DegenerateBoundError):
        theorem1_bound(k, 0.5, 100, 4, 2, 1.0, 0.0, 0.5)
    limit = theorem1_bound(k, 0.5, 100, 4, 2, 1.0, 0.0, 0.5, degenerate="limit")
    near = theorem1_bound(Theorem1Constants(S_P=1.0 + 1e-6, S_R=2.0, S_G=1.0, C_P=2.0),
                          0.5, 100, 4, 2, 1.0, 0.0, 0.5)
    assert limit == pytest.approx(near, rel=1e-4)


def test_degenerate_special_case():
    k = Theorem2Constants(Q_P=1.0, Q_R=1.0)
    with pytest.raises(DegenerateBoundError):
        theorem2_bound(k, 0.9, 100, 4, 1.0, 0.0)
    # no coupling and unit growth: the growth term reduces to 2*gamma*Q_R/(1-gamma)^2 * scale
    value = theorem2_bound(k, 0.9, 100, 4, 1.0, 0.0, degenerate="limit")
    assert value == pytest.approx(1.0 / 0.1 / 10 + 2 * 0.9 * 1.0 / 0.01 * 0.2)


def test_bounds_scale_as_inverse_root_n():
    k1 = theorem1_constants(CONSTANTS)
    k2 = theorem2_constants(CONSTANTS)
    for N in (10, 100, 1000):
        assert theorem1_bound(k1, 0.3, 4 * N, 10, 2, 1.0, 1.0, 0.5) == pytest.approx(
            0.5 * theorem1_bound(k1, 0.3, N, 10, 2, 1.0, 1.0, 0.5), rel=1e-12)
        assert theorem2_bound(k2, 0.3, 4 * N, 10, 1.0, 0.5) == pytest.approx(
            0.5 * theorem2_bound(k2, 0.3, N, 10, 1.0, 0.5), rel=1e-12)


def test_special_case_constants_are_smaller():
    for L_P in (0.0, 0.3, 1.0):
        for L_Q in (0.0, 0.7, 2.0):
            c = LipschitzConstants(M=2.0, L_R=0.5, L_P=L_P, L_G=0.2, L_Q=L_Q)
            assert theorem2_constants(c).Q_P <= theorem1_constants(c).S_P


def test_bound_rows():
    rows = bound_rows(CONSTANTS, 0.3, [50, 100, 200], 10, 2)
    assert [r["N"] for r in rows] == [50, 100, 200]
    assert set(rows[0]) == {"N", "error_scale", "theorem1", "theorem2"}
    assert rows[0]["theorem1"] > rows[1]["theorem1"] > rows[2]["theorem1"]
    assert all(r["theorem1"] != r["theorem2"] for r in rows)
    with pytest.raises(BoundValidityError):
        bound_rows(CONSTANTS, 0.9, [100], 10, 2)


def test_bound_rows_keep_the_valid_bound():
    """gamma=0.45: gamma*S_P = 1.2375 fails while gamma*Q_P = 0.9 holds"""
    failures = validity_failures(CONSTANTS, 0.45)
    assert set(failures) == {"theorem1"}
    assert "gamma*S_P < 1" in failures["theorem1"]
    rows = bound_rows(CONSTANTS, 0.45, [100, 400], 10, 2, skip_invalid=True)
    assert all(r["theorem1"] is None for r in rows)
    assert rows[0]["theorem2"] == pytest.approx(
        theorem2_bound(theorem2_constants(CONSTANTS), 0.45, 100, 10, 1.0, 0.5))
    assert rows[0]["theorem2"] > rows[1]["theorem2"] > 0
    with pytest.raises(BoundValidityError):
        bound_rows(CONSTANTS, 0.45, [100], 10, 2)


def test_validity_failures_empty_inside_region():
    assert validity_failures(CONSTANTS, 0.3) == {}
    assert set(validity_failures(CONSTANTS, 0.9)) == {"theorem1", "theorem2"}
