import numpy as np
import pytest

from ordinal_thresholds.distributions import Dataset, DiscreteOrdinalDistribution
from ordinal_thresholds.evaluation import (
    CSV_COLUMNS, ErrorReport, approximation_error, bayes_error, bayes_report, empirical_error, evaluate_1dt,
    prediction_error, report_rows, round3, write_rows,
)
from ordinal_thresholds.losses import ABSOLUTE, SQUARED, ZERO_ONE

from conftest import dist_for


def uniform3():
    return DiscreteOrdinalDistribution(np.zeros(1), np.full((1, 3), 1 / 3), np.ones(1))


def test_constant_predictor_absolute():
    d = uniform3()
    assert prediction_error(d, [2], ABSOLUTE) == pytest.approx(2 / 3)
    assert prediction_error(d, [1], ABSOLUTE) == pytest.approx(1.0)
    assert bayes_error(d, ABSOLUTE) == pytest.approx(2 / 3)


def test_rmse_is_root_of_mse():
    d = dist_for("M-1")
    a = d.support_1dt
    t = np.linspace(0, 20, 9)
    mse = approximation_error(d, a, t, SQUARED, root=False)
    assert approximation_error(d, a, t, SQUARED) == pytest.approx(np.sqrt(mse))
    assert bayes_error(d, SQUARED) ** 2 == pytest.approx(bayes_error(d, SQUARED, root=False))


@pytest.mark.parametrize("label,expected", [
    ("H-1/3", (".726", "1.144", "1.492")),
    ("M-3", (".296", ".318", ".597")),
    ("A-1", (".553", ".681", ".960")),
    ("O-(1/3,1)", (".646", ".911", "1.250")),
    ("N-3", (".349", ".672", "1.068")),
])
def test_bayes_values(label, expected):
    rep = bayes_report(dist_for(label))
    got = tuple(round3(v).lstrip("0") for v in rep.errors())
    assert got == expected


def test_support_1dt_reaches_bayes_on_unimodal_family():
    # ACL rows along the support are ordered, so the support itself is a Bayes-optimal 1DT
    d = dist_for("H-1")
    rep, thr = evaluate_1dt(d, d.support_1dt)
    assert np.allclose(rep.gaps, 0, atol=1e-12)
    assert set(thr) == {"MZE", "MAE", "RMSE"}


def test_constant_1dt_is_bounded_by_best_label():
    d = dist_for("A-3")
    rep, _ = evaluate_1dt(d, np.zeros(d.N))
    for ell, err in zip((ZERO_ONE, ABSOLUTE, SQUARED), rep.errors()):
        assert err == pytest.approx(min(prediction_error(d, np.full(d.N, k), ell) for k in range(1, 11)))


def test_error_report_validation():
    with pytest.raises(ValueError):
        ErrorReport(0.1, 0.2, 0.3, 0.2, 0.1, 0.1)
    with pytest.raises(ValueError):
        ErrorReport(-0.1, 0.2, 0.3, 0.0, 0.1, 0.1)
    r = ErrorReport(0.5, 0.6, 0.7, 0.4, 0.6, 0.65)
    assert r.gaps == pytest.approx((0.1, 0.0, 0.05))
    assert r.to_dict()["gaps"] == pytest.approx([0.1, 0.0, 0.05])


def test_empirical_error():
    ds = Dataset(np.array([0.0, 1.0, 2.0, 3.0]), np.array([1, 2, 2, 3]))
    pred = lambda x: np.clip(np.round(x).astype(int), 1, 3)
    # predictions 1, 1, 2, 3: one miss by one label
    assert empirical_error(ds, pred, ZERO_ONE) == pytest.approx(0.25)
    assert empirical_error(ds, pred, ABSOLUTE) == pytest.approx(0.25)
    assert empirical_error(ds, pred, SQUARED) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        empirical_error(Dataset(np.array([]), np.array([], dtype=int)), pred, ZERO_ONE)


def test_round3_half_even():
    assert round3(0.0005) == "0.000"
    assert round3(0.0015) == "0.002"
    assert round3(1.2345) == "1.234"
    assert round3(0.7266) == "0.727"


def test_rows_roundtrip(tmp_path):
    rows = report_rows("H-1", "optimal", bayes_report(dist_for("H-1")))
    assert [r["task"] for r in rows] == ["MZE", "MAE", "RMSE"]
    assert all(r["gap"] == "0.000" for r in rows)
    write_rows(tmp_path / "x.csv", rows)
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 4
