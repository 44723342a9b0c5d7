import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adaptive_robust.io import (
    DataFormatError,
    read_csv,
    read_dataset,
    read_updates,
    write_csv_atomic,
    write_dataset_binary,
    write_dataset_csv,
    write_updates,
)
from adaptive_robust.regression import SparseUpdate


class TestDataset:
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=st.floats(-1e9, 1e9)))
    @settings(max_examples=30, suppress_health_check=[HealthCheck.function_scoped_fixture])
    def test_round_trip(self, tmp_path, X):
        write_dataset_binary(tmp_path / "x.bin", X)
        np.testing.assert_array_equal(read_dataset(tmp_path / "x.bin"), X)
        write_dataset_csv(tmp_path / "x.csv", X)
        np.testing.assert_array_equal(read_dataset(tmp_path / "x.csv"), X)

    def test_truncated_binary(self, tmp_path):
        p = tmp_path / "x.bin"
        write_dataset_binary(p, np.ones((3, 2)))
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(DataFormatError, match="header says 3x2"):
            read_dataset(p)

    def test_short_file(self, tmp_path):
        (tmp_path / "x.bin").write_bytes(b"\x01")
        with pytest.raises(DataFormatError):
            read_dataset(tmp_path / "x.bin")

    def test_nan(self, tmp_path):
        (tmp_path / "x.csv").write_text("1,2\nnan,3\n")
        with pytest.raises(DataFormatError, match="NaN"):
            read_dataset(tmp_path / "x.csv")

    def test_bad_csv(self, tmp_path):
        (tmp_path / "x.csv").write_text("1,2\n3\n")
        with pytest.raises(DataFormatError):
            read_dataset(tmp_path / "x.csv")


class TestUpdates:
    def test_round_trip(self, tmp_path):
        ups = [SparseUpdate.from_pairs([(0, 1.5), (3, -2.0)]), SparseUpdate.from_pairs([(2, 0.25)])]
        write_updates(tmp_path / "u.jsonl", ups)
        assert read_updates(tmp_path / "u.jsonl", n=4, K=2) == ups

    @pytest.mark.parametrize(
        "line", ['{"round": 1}', '{"round": 1, "entries": [[9, 1.0]]}', '{"round": 1, "entries": [[0, 1], [0, 2]]}', "{"]
    )
    def test_errors_name_line(self, tmp_path, line):
        p = tmp_path / "u.jsonl"
        p.write_text('{"round": 0, "entries": []}\n' + line + "\n")
        with pytest.raises(DataFormatError, match=":2:"):
            read_updates(p, n=5)


class TestAtomicCsv:
    def test_write(self, tmp_path):
        p = write_csv_atomic(tmp_path / "o.csv", ["a", "b"], [[1, 0.1], [2, None]])
        assert read_csv(p) == [["a", "b"], ["1", "0.1"], ["2", ""]]

    def test_float_repr_round_trips(self, tmp_path):
        v = 1 / 3
        write_csv_atomic(tmp_path / "o.csv", ["v"], [[np.float64(v)]])
        assert float(read_csv(tmp_path / "o.csv")[1][0]) == v

    def test_fault_leaves_old_file(self, tmp_path):
        p = tmp_path / "o.csv"
        p.write_text("old\n")

        def hook(i):
            if i == 1:
                raise KeyboardInterrupt

        with pytest.raises(KeyboardInterrupt):
            write_csv_atomic(p, ["a"], [[1], [2], [3]], fault_hook=hook)
        assert p.read_text() == "old\n"
        assert [f.name for f in tmp_path.iterdir()] == ["o.csv"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(OSError):
            write_csv_atomic(tmp_path / "nope" / "o.csv", ["a"], [])
