import io
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idsbalance.data import (UNSEEN_CODE, AttackMap, ClassLabel, FeatureTable, apply_l2_norms,
                             apply_label_encoding, build_table, class_distribution,
                             default_attack_map, fit_l2_norms, fit_label_encoding,
                             fit_table_norms, map_attack_label, normalize_table,
                             parse_records, read_table, serialize_records, write_table)
from idsbalance.data.encoding import decode_label
from idsbalance.data.reference import SPLIT_FILES, PUBLISHED_COUNTS, expected_counts
from idsbalance.data.synthetic import synthetic_bytes, synthetic_records
from idsbalance.errors import (ConfigurationError, EmptyDatasetError, InvalidValueError,
                               ParseError, ShapeError, UnknownLabelError)

NSLKDD_DIR = os.environ.get("NSLKDD_DIR")
needs_dataset = pytest.mark.skipif(not NSLKDD_DIR, reason="set NSLKDD_DIR to the NSL-KDD text files")


@pytest.fixture(scope="module")
def small_records():
    return synthetic_records({0: 40, 1: 30, 2: 10, 3: 3, 4: 5}, seed=3)


# parsing

def test_parse_counts_and_fields(small_records):
    recs = parse_records(serialize_records(small_records))
    assert len(recs) == 88
    assert all(len(r.features) == 41 for r in recs)


def test_parse_empty_stream():
    with pytest.raises(EmptyDatasetError):
        parse_records(b"")
    with pytest.raises(EmptyDatasetError):
        parse_records(b"\n\n")


def test_parse_wrong_field_count_reports_line(small_records):
    good = serialize_records(small_records[:2]).decode()
    bad = good + "1,2,3\n"
    with pytest.raises(ParseError) as exc:
        parse_records(bad.encode())
    assert exc.value.line == 3


def test_parse_accepts_streams_and_paths(tmp_path, small_records):
    raw = serialize_records(small_records)
    p = tmp_path / "x.txt"
    p.write_bytes(raw)
    assert parse_records(p) == parse_records(io.BytesIO(raw)) == parse_records(raw)


def test_parse_serialize_round_trip_bit_exact(small_records):
    raw = serialize_records(small_records)
    again = serialize_records(parse_records(raw))
    assert raw == again
    assert parse_records(again) == list(small_records)


def test_difficulty_parsed_but_unused(small_records):
    assert {r.difficulty for r in small_records} == {21}


# attack map

def test_map_attack_label_examples():
    assert map_attack_label("normal") is ClassLabel.NORMAL
    assert map_attack_label("neptune") is ClassLabel.DOS
    assert map_attack_label("buffer_overflow") is ClassLabel.U2R
    assert map_attack_label("satan") is ClassLabel.PROBE
    assert map_attack_label("guess_passwd") is ClassLabel.R2L


def test_unknown_attack_names_token():
    with pytest.raises(UnknownLabelError) as exc:
        map_attack_label("not_an_attack")
    assert exc.value.token == "not_an_attack"


def test_attack_map_text_round_trip():
    m = default_attack_map()
    assert AttackMap.from_text(m.to_text()).table == m.table


@pytest.mark.parametrize("text", ["normal,Normal\nfoo,Bogus\n", "normal,Normal\nfoo\n",
                                  "normal,Normal\nx,DoS\nx,DoS\n", "neptune,DoS\n"])
def test_attack_map_rejects_bad_files(text):
    with pytest.raises(ConfigurationError):
        AttackMap.from_text(text)


# label encoding

def test_fit_label_encoding_alphabetical():
    assert fit_label_encoding(["tcp", "smtp", "ftp", "http"]) == {"ftp": 1, "http": 2, "smtp": 3, "tcp": 4}
    assert fit_label_encoding(["a"]) == {"a": 1}
    assert fit_label_encoding(["b", "a", "b"]) == {"a": 1, "b": 2}


def test_apply_label_encoding_and_unseen():
    m = fit_label_encoding(["tcp", "smtp", "ftp", "http"])
    assert apply_label_encoding(m, "http") == 2
    assert apply_label_encoding(m, "icmp") == UNSEEN_CODE == 0
    assert apply_label_encoding({"a": 1}, "a") == 1


@given(st.lists(st.text(min_size=1, max_size=6), min_size=1, max_size=30))
@settings(max_examples=100, deadline=None)
def test_encoding_is_bijection(values):
    m = fit_label_encoding(values)
    assert sorted(m.values()) == list(range(1, len(set(values)) + 1))
    for v in set(values):
        assert decode_label(m, apply_label_encoding(m, v)) == v


# L2 norms

def test_fit_l2_norm_examples():
    assert fit_l2_norms(np.array([[3.0], [4.0]]))[0] == 5.0
    assert fit_l2_norms(np.array([[0.0], [0.0], [0.0]]))[0] == 1.0
    assert fit_l2_norms(np.array([[1.0]]))[0] == 1.0


def test_zero_norm_column_unchanged():
    col = np.zeros((3, 1))
    assert np.array_equal(apply_l2_norms(fit_l2_norms(col), col), col)


def test_apply_l2_norms_examples():
    np.testing.assert_allclose(apply_l2_norms(np.array([5.0]), np.array([[3.0], [4.0]])), [[0.6], [0.8]])
    np.testing.assert_allclose(apply_l2_norms(np.array([5.0]), np.array([[10.0]])), [[2.0]])


def test_apply_l2_norms_shape_mismatch():
    with pytest.raises(ShapeError):
        apply_l2_norms(np.array([1.0, 2.0]), np.ones((3, 3)))


def test_fit_l2_norms_non_finite():
    x = np.ones((3, 2))
    x[2, 1] = np.nan
    with pytest.raises(InvalidValueError) as exc:
        fit_l2_norms(x)
    assert (exc.value.row, exc.value.column) == (2, 1)


@given(st.integers(1, 40), st.integers(1, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_fitted_columns_have_unit_norm(n, d, seed):
    x = np.random.default_rng(seed).normal(size=(n, d)) * 10 ** np.arange(d)
    y = apply_l2_norms(fit_l2_norms(x), x)
    np.testing.assert_allclose(np.linalg.norm(y, axis=0), 1.0, atol=1e-9)


# tables

def test_build_table_symbolic_columns_encoded(small_records):
    table = build_table(small_records)
    assert table.data.shape == (88, 41)
    assert table.discrete_mask.sum() == 3
    proto = table.names.index("protocol_type")
    assert set(table.data[:, proto]) <= {1.0, 2.0, 3.0}


def test_test_split_reuses_train_encodings_and_norms(small_records):
    train = fit_table_norms(build_table(small_records))
    test_recs = synthetic_records({0: 5, 1: 5}, seed=9)
    test = normalize_table(build_table(test_recs, {c.name: c.encoding_map for c in train.columns
                                                   if c.is_discrete}), train.columns)
    assert test.columns == train.columns
    norm_train = normalize_table(train)
    cont = ~train.discrete_mask
    norms = np.linalg.norm(norm_train.data[:, cont], axis=0)
    raw_norms = np.linalg.norm(train.data[:, cont], axis=0)
    np.testing.assert_allclose(norms[raw_norms > 0], 1.0, atol=1e-9)
    # discrete codes are left alone
    np.testing.assert_array_equal(norm_train.data[:, ~cont], train.data[:, ~cont])


def test_class_distribution_counts(small_records):
    dist = class_distribution(build_table(small_records))
    assert dist.counts.tolist() == [40, 30, 10, 3, 5]
    assert dist.total == 88
    assert abs(dist.percentages.sum() - 100.0) < 1e-9


def test_class_distribution_empty():
    dist = class_distribution(np.zeros(0, dtype=np.int64))
    assert dist.counts.tolist() == [0] * 5
    assert dist.percentages.tolist() == [0.0] * 5


def test_canonical_table_round_trip(tmp_path, small_records):
    table = normalize_table(fit_table_norms(build_table(small_records)))
    path = tmp_path / "t.csv"
    write_table(table, path)
    back = read_table(path, table.columns)
    assert np.array_equal(back.data, table.data)
    assert np.array_equal(back.labels, table.labels)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[0].endswith(b"label:label")


def test_feature_table_rejects_bad_shapes(small_records):
    t = build_table(small_records)
    with pytest.raises(ShapeError):
        FeatureTable(t.columns, t.data[:, :5], t.labels)
    with pytest.raises(ShapeError):
        FeatureTable(t.columns, t.data, t.labels[:3])


def test_synthetic_generator_is_deterministic():
    counts = {0: 10, 2: 4}
    assert synthetic_bytes(counts, seed=5) == synthetic_bytes(counts, seed=5)
    assert synthetic_bytes(counts, seed=5) != synthetic_bytes(counts, seed=6)


# published distribution (needs the real files)

@needs_dataset
@pytest.mark.parametrize("split", list(PUBLISHED_COUNTS))
def test_published_counts(split):
    recs = parse_records(os.path.join(NSLKDD_DIR, SPLIT_FILES[split]))
    dist = class_distribution(build_table(recs))
    assert dist.as_dict() == expected_counts(split)
