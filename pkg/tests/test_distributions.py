import json

import numpy as np
import pytest

from ordinal_thresholds.distributions import (
    BENCHMARK_FAMILIES, PI_PERMUTATION, Dataset, DiscreteOrdinalDistribution, DistributionFamily,
    build_distribution, latent_grid, sample_categorical, sample_dataset, save_distribution, split_dataset,
    trial_rng,
)
from ordinal_thresholds.probability_models import BiasVector, acl_pmf, is_unimodal


def test_latent_grid():
    g = latent_grid(100, 1.0, 10)
    assert g[0] == -1.0 and g[-1] == pytest.approx(9.0)
    assert g[49] == pytest.approx(49 * 10 / 99 - 1)
    with pytest.raises(ValueError):
        latent_grid(1, 1.0, 10)


def test_benchmark_grid():
    labels = [f.label for f in BENCHMARK_FAMILIES]
    assert len(labels) == 15
    assert "O-(1/3,1)" in labels and "N-3" in labels and "M-1/3" in labels
    assert DistributionFamily.parse("O-(1/3,3)").deltas == (1 / 3, 3.0)


def test_h_rows_match_acl():
    d = build_distribution(DistributionFamily.parse("H-1"))
    x = latent_grid(100, 1.0, 10)
    assert np.allclose(d.cpds[17], acl_pmf(x[17], BiasVector.equal_interval(1.0, 10)))
    assert np.allclose(d.weights, 0.01)


def test_n_permutation():
    d = build_distribution(DistributionFamily.parse("N-1"))
    h = build_distribution(DistributionFamily.parse("H-1"))
    # label 2 of N takes the mass of label pi(2) = 10 of H
    assert np.allclose(d.cpds[:, 1], h.cpds[:, 9])
    assert sorted(PI_PERMUTATION) == list(range(1, 11))
    assert np.allclose(d.cpds.sum(axis=1), 1)


@pytest.mark.parametrize("label", ["H-1/3", "H-1", "H-3", "M-1/3", "M-1", "M-3"])
def test_ordered_families_unimodal(label):
    d = build_distribution(DistributionFamily.parse(label))
    assert all(is_unimodal(p) for p in d.cpds)


@pytest.mark.parametrize("label", ["N-1/3", "N-1", "N-3", "A-1"])
def test_non_unimodal_rows_exist(label):
    d = build_distribution(DistributionFamily.parse(label))
    assert not all(is_unimodal(p) for p in d.cpds)


def test_o_family_halves():
    d = build_distribution(DistributionFamily.parse("O-(1/3,3)"))
    assert d.weights[:50].sum() == pytest.approx(0.5)
    assert np.allclose(d.support_1dt[:50], latent_grid(50, 1 / 3, 10))
    assert np.allclose(d.support_1dt[50:], latent_grid(50, 3.0, 10))
    with pytest.raises(ValueError):
        build_distribution(DistributionFamily("O", (1.0, 3.0), N=99))


def test_family_validation():
    with pytest.raises(ValueError):
        DistributionFamily("Q", (1.0,))
    with pytest.raises(ValueError):
        DistributionFamily("O", (1.0,))


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteOrdinalDistribution(np.zeros(2), np.full((2, 3), 0.5), np.full(2, 0.5))
    with pytest.raises(ValueError):
        DiscreteOrdinalDistribution(np.zeros(2), np.full((2, 3), 1 / 3), np.array([0.6, 0.6]))


def test_json_roundtrip(tmp_path):
    fam = DistributionFamily.parse("M-1")
    d = build_distribution(fam)
    save_distribution(d, tmp_path / "d.json", fam)
    data = json.loads((tmp_path / "d.json").read_text())
    assert data["family"] == "M" and data["K"] == 10
    d2 = DiscreteOrdinalDistribution.from_dict(data)
    assert np.array_equal(d2.cpds, d.cpds)


def test_sampling_deterministic(tmp_path):
    fam = DistributionFamily.parse("H-3")
    a = sample_dataset(fam, 500, seed=7)
    b = sample_dataset(fam, 500, seed=7)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    c = Dataset.from_csv(tmp_path / "a.csv")
    assert np.array_equal(c.x, a.x) and np.array_equal(c.y, a.y)
    assert not np.array_equal(sample_dataset(fam, 500, seed=8).y, a.y)


def test_trial_streams_independent_of_count():
    x = trial_rng(3, 5).random(4)
    assert np.array_equal(x, trial_rng(3, 5).random(4))
    assert not np.array_equal(x, trial_rng(3, 4).random(4))


def test_label_frequencies_converge():
    row = np.array([0.1, 0.2, 0.3, 0.4])
    n = 100_000
    y = sample_categorical(np.tile(row, (n, 1)), np.random.default_rng(0))
    freq = np.bincount(y, minlength=5)[1:] / n
    sigma = np.sqrt(row * (1 - row) / n)
    assert np.all(np.abs(freq - row) < 3 * sigma)


def test_categorical_zero_mass_never_drawn():
    rows = np.tile([0.5, 0.0, 0.5], (2000, 1))
    y = sample_categorical(rows, np.random.default_rng(1))
    assert 2 not in set(y.tolist())


def test_offset_variant():
    fam = DistributionFamily.parse("O-(1/3,3)")
    ds = sample_dataset(fam, 2000, seed=1)
    second = ds.index >= 50
    assert ds.x[second].min() > ds.x[~second].max()
    plain = sample_dataset(fam, 2000, seed=1, offset_variant=False)
    assert np.array_equal(plain.y, ds.y)


def test_split_disjoint():
    ds = sample_dataset(DistributionFamily.parse("H-1"), 100, seed=0)
    ds = Dataset(ds.x, ds.y, np.arange(100))
    parts = split_dataset(ds, (60, 30, 10), np.random.default_rng(0))
    idx = np.concatenate([p.index for p in parts])
    assert sorted(idx.tolist()) == list(range(100))
    with pytest.raises(ValueError):
        split_dataset(ds, (90, 20), np.random.default_rng(0))
