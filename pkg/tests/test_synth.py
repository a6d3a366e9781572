import collections

import numpy as np
import pytest

from src.errors import DomainError, IoError, ShapeError, SizeError
from src.synth import (
    DatabasePair,
    PartialMapping,
    PlantedInstance,
    dump_instance,
    load_instance,
    make_rng,
    sample_database_pair,
    sample_mapping,
    sample_planted,
    substream,
)


def test_substreams_are_reproducible_and_distinct():
    a = substream(5, 1, 2).standard_normal(4)
    b = substream(5, 1, 2).standard_normal(4)
    c = substream(5, 2, 1).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(DomainError):
        substream(-1)


def test_make_rng_accepts_generators_and_tuples():
    rng = np.random.default_rng(0)
    assert make_rng(rng) is rng
    assert np.array_equal(make_rng((3, 4)).random(3), substream(3, 4).random(3))


def test_sample_mapping_trivial_and_deterministic():
    assert sample_mapping(1, 1, 1, 0).pairs == ((0, 0),)
    assert sample_mapping(3, 3, 3, 42) == sample_mapping(3, 3, 3, 42)
    assert sample_mapping(5, 8, 0, 1).size == 0


def test_sample_mapping_size_error(caplog):
    with pytest.raises(SizeError):
        sample_mapping(2, 3, 3, 0)
    assert "Mapping size 3 is not in" in caplog.text


def _injection_frequencies(seeds):
    counts = collections.Counter(sample_mapping(2, 3, 2, seed).pairs for seed in range(seeds))
    return {pairs: count / seeds for pairs, count in counts.items()}


def test_sample_mapping_uniform():
    freqs = _injection_frequencies(12_000)
    assert len(freqs) == 6
    assert all(abs(f - 1 / 6) < 0.02 for f in freqs.values())


@pytest.mark.slow
def test_sample_mapping_uniform_full():
    freqs = _injection_frequencies(60_000)
    assert len(freqs) == 6
    assert all(abs(f - 1 / 6) < 0.01 for f in freqs.values())


def test_partial_mapping_validation():
    with pytest.raises(DomainError):
        PartialMapping(((0, 1), (1, 1)), 2, 2)
    with pytest.raises(ShapeError):
        PartialMapping(((0, 3),), 2, 2)
    m = PartialMapping(((1, 0), (0, 2)), 2, 3)
    assert m.pairs == ((0, 2), (1, 0))
    assert m.as_dict() == {0: 2, 1: 0}
    assert m.to_matrix().tolist() == [[0, 0, 1], [1, 0, 0]]
    assert PartialMapping.identity(2, 4).pairs == ((0, 0), (1, 1))


def test_sample_database_pair_without_features():
    db = sample_database_pair([], PartialMapping.identity(3), 3, 3, 0)
    assert db.a.shape == (3, 0) and db.b.shape == (3, 0)


def test_sample_database_pair_correlation():
    n = 20_000
    db = sample_database_pair([0.999], PartialMapping.identity(n), n, n, 7)
    matched = np.corrcoef(db.a[:, 0], db.b[:, 0])[0, 1]
    unmatched = np.corrcoef(db.a[:, 0], np.roll(db.b[:, 0], 1))[0, 1]
    assert matched == pytest.approx(0.999, abs=0.005)
    assert abs(unmatched) < 0.03


def test_sample_database_pair_within_database_independence():
    n, trials = 4, 5_000
    rows = np.array([sample_database_pair([0.5], PartialMapping.identity(n), n, n, s).a[:, 0] for s in range(trials)])
    corr = np.corrcoef(rows.T)
    off_diagonal = corr[~np.eye(n, dtype=bool)]
    assert np.all(np.abs(off_diagonal) < 4 / np.sqrt(trials))


def test_sample_database_pair_rejects_bad_inputs():
    with pytest.raises(DomainError):
        sample_database_pair([1.0], PartialMapping.identity(2), 2, 2, 0)
    with pytest.raises(ShapeError):
        sample_database_pair([0.5], PartialMapping.identity(2), 3, 3, 0)


def test_sample_planted_means():
    n = 300
    inst = sample_planted(2.0, PartialMapping.identity(n), n, n, 3)
    diagonal = np.diag(inst.w)
    off = inst.w[~np.eye(n, dtype=bool)]
    assert diagonal.mean() == pytest.approx(2.0, abs=4 / np.sqrt(n))
    assert off.mean() == pytest.approx(0.0, abs=0.01)
    assert off.std() == pytest.approx(1.0, abs=0.01)
    with pytest.raises(DomainError):
        sample_planted(0.0, PartialMapping.identity(2), 2, 2, 0)


def test_dump_and_load_planted_instance(tmp_path):
    truth = sample_mapping(3, 5, 3, 1)
    inst = sample_planted(1.5, truth, 3, 5, 2)
    path = tmp_path / "nested" / "planted.npz"
    dump_instance(str(path), inst)
    loaded, loaded_truth, rho = load_instance(str(path))
    assert isinstance(loaded, PlantedInstance)
    assert np.array_equal(loaded.w, inst.w)
    assert loaded.mu == 1.5
    assert loaded_truth == truth
    assert rho is None


def test_dump_and_load_database_pair(tmp_path):
    truth = PartialMapping.identity(2, 3)
    db = sample_database_pair([0.3, 0.2], truth, 2, 3, 4)
    path = tmp_path / "db.npz"
    dump_instance(str(path), db, truth=truth, rho=[0.3, 0.2])
    loaded, loaded_truth, rho = load_instance(str(path))
    assert isinstance(loaded, DatabasePair)
    assert np.array_equal(loaded.b, db.b)
    assert loaded_truth.n_v == 3
    assert rho.tolist() == [0.3, 0.2]


def test_load_instance_missing_file(tmp_path, caplog):
    with pytest.raises(IoError):
        load_instance(str(tmp_path / "absent.npz"))
    assert "Error reading instance" in caplog.text
