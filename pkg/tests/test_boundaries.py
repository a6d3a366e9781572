import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import DomainError, IoError
from src.theory.boundaries import (
    ALMOST_EXACT,
    CONVERSE,
    CURVE_COLUMNS,
    ELLIPTIC,
    ERROR_EXPONENT,
    EXACT,
    LINEAR,
    LINEAR_EXCESS,
    PARABOLIC,
    SUBLINEAR_EXCESS,
    VERTICAL,
    Regime,
    achievability_boundary,
    achievability_segments,
    almost_exact_threshold,
    boundary_curve,
    converse_boundary,
    exact_threshold_coefficient,
    export_curves,
)

BALANCED = Regime(None)
REGIMES = [BALANCED, Regime(0.0), Regime(0.3), Regime(0.5), Regime(0.7), Regime(1.0), Regime(1.5), Regime(2.5)]


@pytest.mark.parametrize("algorithm,regime,expected", [
    ('threshold', BALANCED, (1 + math.sqrt(2)) ** 2),
    ('max-row', BALANCED, 4.0),
    ('ml', BALANCED, 2.0),
    ('ml', Regime(0.5), 3.0),
    ('max-row', Regime(0.5), 4.0),
    ('ml', Regime(1.5), 4.9494897),
    ('max-row', Regime(1.5), 4.9494897),
])
def test_exact_threshold_coefficients(algorithm, regime, expected):
    assert exact_threshold_coefficient(algorithm, regime) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("regime,expected", [(BALANCED, 1.0), (Regime(0.5), 1.0), (Regime(1.5), 1.5)])
def test_almost_exact_threshold(regime, expected):
    assert almost_exact_threshold(regime) == expected


def test_regime_properties():
    assert BALANCED.size_class == 'equal' and BALANCED.label == 'balanced'
    assert Regime(0.5).size_class == SUBLINEAR_EXCESS
    assert Regime(1.0).size_class == LINEAR_EXCESS
    assert Regime(2).label == 'alpha=2'
    with pytest.raises(DomainError):
        Regime(-0.1)


def test_regime_from_sizes():
    assert Regime.from_sizes(100, 100).balanced
    assert Regime.from_sizes(100, 110).alpha == pytest.approx(0.5)
    assert Regime.from_sizes(100, 200).alpha == pytest.approx(1.0)
    with pytest.raises(DomainError):
        Regime.from_sizes(10, 5)


def test_achievability_anchor_values():
    value = achievability_boundary('ml', BALANCED, 0.25)
    assert value.x == pytest.approx(1.8660254, abs=1e-6)
    assert value.segment == ELLIPTIC
    assert achievability_boundary('max-row', Regime(1.5), 1.5).x == pytest.approx(6.0)


def test_achievability_balanced_ml_segments():
    vertical = achievability_boundary('ml', BALANCED, 0.75)
    assert (vertical.x, vertical.segment) == (2.0, VERTICAL)
    assert vertical.offset_nats == pytest.approx(2 * math.log((math.sqrt(5) - 1) / 2))
    linear = achievability_boundary('ml', BALANCED, 1.5)
    assert (linear.x, linear.segment) == (2.5, LINEAR)


def test_achievability_unbalanced_vertical_offset():
    value = achievability_boundary('ml', Regime(0.3), 0.6)
    assert value.segment == VERTICAL
    assert value.offset_nats == pytest.approx(2 * math.log((3 + math.sqrt(5)) / 2))


def test_achievability_parabolic_regime():
    value = achievability_boundary('ml', Regime(0.7), 0.5)
    assert value.segment == PARABOLIC
    assert value.x == pytest.approx((math.sqrt(0.7) + math.sqrt(0.5)) ** 2)


@pytest.mark.parametrize("algorithm", ['ml', 'max-row', 'threshold'])
@pytest.mark.parametrize("regime", REGIMES)
def test_boundaries_are_continuous(algorithm, regime):
    segments = achievability_segments(algorithm, regime)
    assert segments[0].beta_lo == 0.0
    assert math.isinf(segments[-1].beta_hi)
    for left, right in zip(segments, segments[1:]):
        assert left.beta_hi == pytest.approx(right.beta_lo)
        assert left.coefficient(left.beta_hi) == pytest.approx(right.coefficient(right.beta_lo), abs=1e-9)


@pytest.mark.parametrize("algorithm", ['ml', 'max-row'])
@pytest.mark.parametrize("regime", REGIMES)
def test_error_exponent_meets_exact_threshold(algorithm, regime):
    # beta = 1 means O(1) errors, the exact recovery point for maps
    if regime.size_class == LINEAR_EXCESS:
        pytest.skip("exact recovery needs beta = alpha in the linear-excess regime")
    assert achievability_boundary(algorithm, regime, 1.0).x == pytest.approx(
        exact_threshold_coefficient(algorithm, regime))


@pytest.mark.parametrize("regime,beta,expected", [
    (BALANCED, 0.5, 2.0),
    (Regime(1.0), 1.0, 4.0),
    (BALANCED, 1e-12, 1.0),
])
def test_converse_values(regime, beta, expected):
    assert converse_boundary(regime, beta) == pytest.approx(expected, abs=1e-5)


def test_converse_domain():
    with pytest.raises(DomainError):
        converse_boundary(BALANCED, 0.0)
    with pytest.raises(DomainError):
        converse_boundary(BALANCED, 1.5)


@settings(max_examples=200, deadline=None)
@given(
    st.one_of(st.none(), st.floats(min_value=0.0, max_value=3.0)),
    st.floats(min_value=1e-6, max_value=1.0),
)
def test_ml_achievability_dominates_converse(alpha, beta):
    regime = Regime(alpha)
    assert achievability_boundary('ml', regime, beta).x >= converse_boundary(regime, beta) - 1e-12


@settings(max_examples=100, deadline=None)
@given(
    st.one_of(st.none(), st.floats(min_value=0.0, max_value=3.0)),
    st.floats(min_value=1e-6, max_value=3.0),
)
def test_ml_never_needs_more_than_max_row(alpha, beta):
    regime = Regime(alpha)
    assert achievability_boundary('ml', regime, beta).x <= achievability_boundary('max-row', regime, beta).x + 1e-12


def test_achievability_domain(caplog):
    with pytest.raises(DomainError):
        achievability_boundary('ml', BALANCED, 0.0)
    assert "must be positive and finite" in caplog.text
    with pytest.raises(DomainError):
        achievability_boundary('ml', BALANCED, math.inf)
    with pytest.raises(DomainError):
        achievability_boundary('greedy', BALANCED, 0.5)


def test_boundary_curve_kinds():
    betas = np.linspace(0.25, 2.0, 8)
    curve = boundary_curve('ml', BALANCED, ERROR_EXPONENT, betas)
    assert [p.beta for p in curve.points] == pytest.approx(betas.tolist())
    assert curve.points[0].x == pytest.approx(1.8660254)

    exact = boundary_curve('threshold', BALANCED, EXACT)
    assert [(p.beta, p.x) for p in exact.points] == [(1.0, pytest.approx((1 + math.sqrt(2)) ** 2))]
    almost = boundary_curve('ml', Regime(1.5), ALMOST_EXACT)
    assert [(p.beta, p.x) for p in almost.points] == [(0.0, 1.5)]

    converse = boundary_curve('ml', BALANCED, CONVERSE, betas)
    assert all(0 < p.beta <= 1 for p in converse.points)
    assert len(converse.points) == 4

    with pytest.raises(DomainError):
        boundary_curve('ml', BALANCED, 'upper')


def test_export_curves(tmp_path):
    curves = [boundary_curve('ml', BALANCED, ERROR_EXPONENT, [0.25, 0.75]),
              boundary_curve('max-row', Regime(0.5), EXACT)]
    path = export_curves(curves, str(tmp_path / "out" / "curves.csv"))
    df = pd.read_csv(path)
    assert list(df.columns) == CURVE_COLUMNS
    assert len(df) == 3
    assert df.loc[0, 'x'] == pytest.approx(1.8660254)
    assert df.loc[1, 'segment'] == VERTICAL
    assert df.loc[2, 'regime'] == 'alpha=0.5'


def test_export_curves_empty_warns(tmp_path, caplog):
    path = export_curves([], str(tmp_path / "empty.csv"))
    assert list(pd.read_csv(path).columns) == CURVE_COLUMNS
    assert "writing header only" in caplog.text


def test_export_curves_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoError):
        export_curves([boundary_curve('ml', BALANCED, EXACT)], str(blocker / "curves.csv"))
