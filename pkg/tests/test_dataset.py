import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embshift.dataset import (
    DataError,
    Dataset,
    EmbeddingRecord,
    SplitSpec,
    filter_by_cohort,
    load_binary,
    load_csv,
    split,
    write_binary,
    write_csv,
)

from conftest import make_dataset


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadCsv:
    def test_smallest_well_formed_file(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(
            p,
            [
                "id,cohort,label.modality,confidence,e0,e1,e2,e3",
                "a,israel_wl,wl,0.5,0.1,0.2,0.3,0.4",
                "b,japan_nbi,nbi,,1,2,3,4",
                "c,japan_ce,,0.25,-1,-2,-3,-4",
            ],
        )
        ds = load_csv(p)
        assert len(ds) == 3
        assert ds.dim == 4
        assert ds.records[0].labels == {"modality": "wl"}
        assert ds.records[1].confidence is None
        assert ds.records[2].labels == {}
        assert ds.records[0].vector[0] == np.float64(np.float32("0.1"))

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(
            p,
            [
                "id,cohort,e0,e1,e2,e3",
                "a,x,1,2,3,4",
                "b,x,1,2,3",
            ],
        )
        with pytest.raises(DataError, match="ragged row"):
            load_csv(p)

    def test_confidence_out_of_range(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(
            p,
            [
                "id,cohort,confidence,e0",
                "a,x,1.5,0.0",
            ],
        )
        with pytest.raises(DataError, match="confidence out of range"):
            load_csv(p)

    def test_non_numeric_embedding(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(p, ["id,cohort,e0,e1", "a,x,1.0,oops"])
        with pytest.raises(DataError, match="non-numeric embedding"):
            load_csv(p)

    def test_duplicate_id(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(p, ["id,cohort,e0", "a,x,1", "a,x,2"])
        with pytest.raises(DataError, match="duplicate id"):
            load_csv(p)

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(p, ["cohort,id,e0", "x,a,1"])
        with pytest.raises(DataError, match="malformed header"):
            load_csv(p)

    def test_header_requires_contiguous_embeddings(self, tmp_path):
        p = tmp_path / "d.csv"
        write_lines(p, ["id,cohort,e0,e2", "a,x,1,2"])
        with pytest.raises(DataError, match="malformed header"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "absent.csv")


class TestRoundTrip:
    def test_csv_round_trip_is_exact(self, tmp_path, rng):
        # values chosen to stress f32 shortest-repr formatting
        vecs = np.array(
            [
                [0.1, 1e-8, -3.25, 7.0],
                [1e38, -1e-38, 0.0, 2.5000001],
                [np.pi, -np.e, 1 / 3, 9.999999],
            ],
            dtype=np.float32,
        ).astype(np.float64)
        ds = make_dataset(
            vecs,
            cohorts=["a", "b", "a"],
            labels=[{"m": "x"}, {"m": "y"}, {}],
            confidences=[0.125, 1.0, 0.0],
            groups=["g1", None, "g2"],
        )
        p = tmp_path / "out.csv"
        write_csv(ds, p)
        again = load_csv(p)
        assert ds.equals(again)

    def test_round_trip_random_f32(self, tmp_path, rng):
        vecs = rng.normal(scale=10.0, size=(50, 6)).astype(np.float32).astype(np.float64)
        ds = make_dataset(vecs)
        p = tmp_path / "out.csv"
        write_csv(ds, p)
        assert ds.equals(load_csv(p))


class TestLoadBinary:
    def test_paper_scale_manifest(self, tmp_path, rng):
        vecs = rng.normal(size=(716, 384)).astype(np.float32).astype(np.float64)
        ds = make_dataset(vecs, cohorts=["japan_ce"] * 716)
        write_binary(ds, tmp_path / "d.json")
        again = load_binary(tmp_path / "d.json")
        assert len(again) == 716
        assert again.dim == 384
        assert ds.equals(again)

    def test_size_mismatch(self, tmp_path):
        (tmp_path / "v.vec").write_bytes(b"\x00" * 36)
        (tmp_path / "v.meta.csv").write_text("id,cohort\na,x\nb,x\n")
        (tmp_path / "m.json").write_text(
            '{"dim": 4, "count": 2, "vector_file": "v.vec",'
            ' "byte_order": "little", "dtype": "f32", "metadata_file": "v.meta.csv"}'
        )
        with pytest.raises(DataError, match="size mismatch.*expected 32"):
            load_binary(tmp_path / "m.json")

    def test_count_zero_is_valid_and_empty(self, tmp_path):
        (tmp_path / "m.json").write_text(
            '{"dim": 4, "count": 0, "vector_file": "v.vec",'
            ' "byte_order": "little", "dtype": "f32"}'
        )
        ds = load_binary(tmp_path / "m.json")
        assert len(ds) == 0
        assert ds.dim == 4

    def test_missing_vector_file(self, tmp_path):
        (tmp_path / "m.json").write_text(
            '{"dim": 2, "count": 1, "vector_file": "v.vec",'
            ' "byte_order": "little", "dtype": "f32"}'
        )
        with pytest.raises(DataError, match="missing vector file"):
            load_binary(tmp_path / "m.json")

    def test_row_count_disagreement(self, tmp_path):
        (tmp_path / "v.vec").write_bytes(b"\x00" * 16)
        (tmp_path / "v.meta.csv").write_text("id,cohort\na,x\n")
        (tmp_path / "m.json").write_text(
            '{"dim": 2, "count": 2, "vector_file": "v.vec",'
            ' "byte_order": "little", "dtype": "f32", "metadata_file": "v.meta.csv"}'
        )
        with pytest.raises(DataError, match="row-count disagreement"):
            load_binary(tmp_path / "m.json")


class TestSplit:
    def test_paper_sizes(self, rng):
        ds = make_dataset(rng.normal(size=(4464, 3)))
        train, test = split(ds, SplitSpec(train_fraction=0.8, seed=7))
        assert len(train) == 3571
        assert len(test) == 4464 - 3571

    def test_determinism(self, rng):
        ds = make_dataset(rng.normal(size=(10, 2)))
        spec = SplitSpec(train_fraction=0.5, seed=123)
        a1, b1 = split(ds, spec)
        a2, b2 = split(ds, spec)
        assert a1.ids() == a2.ids()
        assert b1.ids() == b2.ids()

    def test_group_integrity(self, rng):
        ds = make_dataset(
            rng.normal(size=(6, 2)), groups=["g1", "g1", "g2", "g2", "g3", "g3"]
        )
        train, test = split(
            ds, SplitSpec(train_fraction=0.5, seed=5, mode="group_level")
        )
        for side in (train, test):
            for rec in side.records:
                peers = [r for r in ds.records if r.group_id == rec.group_id]
                assert all(p.id in {q.id for q in side.records} for p in peers)

    def test_group_level_requires_group_ids(self, rng):
        ds = make_dataset(rng.normal(size=(4, 2)))
        with pytest.raises(DataError, match="group_id"):
            split(ds, SplitSpec(train_fraction=0.5, seed=1, mode="group_level"))

    def test_fraction_bounds(self):
        with pytest.raises(DataError):
            SplitSpec(train_fraction=1.0, seed=0)
        with pytest.raises(DataError):
            SplitSpec(train_fraction=0.0, seed=0)

    def test_empty_dataset(self):
        ds = Dataset([], dim=2)
        with pytest.raises(DataError, match="empty"):
            split(ds, SplitSpec(train_fraction=0.5, seed=0))

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(min_value=2, max_value=200),
        fraction=st.floats(min_value=0.05, max_value=0.95),
        seed=st.integers(min_value=-(2**63), max_value=2**63 - 1),
    )
    def test_split_is_a_partition(self, n, fraction, seed):
        vecs = np.arange(n * 2, dtype=np.float64).reshape(n, 2)
        ds = make_dataset(vecs)
        train, test = split(ds, SplitSpec(train_fraction=fraction, seed=seed))
        assert len(train) == int(np.floor(n * fraction))
        assert len(train) + len(test) == n
        train_ids = set(train.ids())
        test_ids = set(test.ids())
        assert not train_ids & test_ids
        assert train_ids | test_ids == set(ds.ids())


class TestFilter:
    def test_single_cohort(self, rng):
        ds = make_dataset(rng.normal(size=(6, 2)), cohorts=["a", "b", "a", "c", "b", "a"])
        out = filter_by_cohort(ds, {"b"})
        assert [r.cohort for r in out.records] == ["b", "b"]
        assert out.dim == ds.dim

    def test_all_cohorts_is_identity(self, rng):
        ds = make_dataset(rng.normal(size=(5, 2)), cohorts=["a", "b", "a", "b", "a"])
        out = filter_by_cohort(ds, {"a", "b"})
        assert out.equals(ds)

    def test_absent_cohort_is_empty(self, rng):
        ds = make_dataset(rng.normal(size=(3, 2)))
        out = filter_by_cohort(ds, {"absent"})
        assert len(out) == 0
        assert out.dim == 2


class TestValidation:
    def test_confidence_range_enforced(self):
        with pytest.raises(DataError, match="confidence"):
            make_dataset(np.zeros((1, 2)), confidences=[1.5])

    def test_vector_length_enforced(self):
        rec = EmbeddingRecord(id="a", cohort="x", vector=np.zeros(3))
        with pytest.raises(DataError, match="vector length"):
            Dataset([rec], dim=2)
