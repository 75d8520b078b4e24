"""Persistence round-trips for the matrix stores and vector text format."""
import numpy as np
import pytest

from dmsem import DataError, DensityMatrix
from dmsem.store import DensityStore, SenseStore, load_vectors, save_vectors


def make_store(rng, n=4, d=3, dtype="f64"):
    items = []
    for i in range(n):
        a = rng.standard_normal((d, d))
        items.append((f"w{i}", DensityMatrix(a @ a.T + 0.1 * np.eye(d))))
    return DensityStore.from_matrices(items, dtype=dtype)


class TestDensityStore:
    def test_round_trip_f64_exact(self, tmp_path):
        store = make_store(np.random.default_rng(5))
        store.save(tmp_path / "dm")
        back = DensityStore.load(tmp_path / "dm")
        assert back.words == store.words
        assert back.dim == store.dim
        np.testing.assert_array_equal(back.stack, store.stack)

    def test_round_trip_f32_lossy_but_close(self, tmp_path):
        store = make_store(np.random.default_rng(6), dtype="f32")
        store.save(tmp_path / "dm")
        back = DensityStore.load(tmp_path / "dm")
        np.testing.assert_allclose(back.stack, store.stack, atol=1e-6)

    def test_save_is_byte_identical_across_runs(self, tmp_path):
        store = make_store(np.random.default_rng(7))
        store.save(tmp_path / "a")
        store.save(tmp_path / "b")
        for name in ("manifest.json", "data.bin"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_lookup(self, tmp_path):
        store = make_store(np.random.default_rng(8))
        assert "w2" in store
        dm = store.matrix("w2")
        assert abs(np.trace(dm.data) - 1.0) <= 1e-12
        with pytest.raises(DataError):
            store.matrix("nope")

    def test_truncated_blob_rejected(self, tmp_path):
        store = make_store(np.random.default_rng(9))
        store.save(tmp_path / "dm")
        blob = tmp_path / "dm" / "data.bin"
        blob.write_bytes(blob.read_bytes()[:-8])
        with pytest.raises(DataError):
            DensityStore.load(tmp_path / "dm")

    def test_wrong_format_tag_rejected(self, tmp_path):
        store = make_store(np.random.default_rng(10))
        store.save(tmp_path / "dm")
        manifest = tmp_path / "dm" / "manifest.json"
        manifest.write_text(manifest.read_text().replace("dm1", "zz9"))
        with pytest.raises(DataError):
            DensityStore.load(tmp_path / "dm")


class TestSenseStore:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        stack = rng.standard_normal((3, 4, 5))
        store = SenseStore(4, 5, ["a", "b", "c"], stack)
        store.save(tmp_path / "b")
        back = SenseStore.load(tmp_path / "b")
        assert (back.dim, back.senses, back.words) == (4, 5, ["a", "b", "c"])
        np.testing.assert_array_equal(back.stack, store.stack)

    def test_table_lookup(self):
        stack = np.arange(24, dtype=float).reshape(2, 3, 4)
        store = SenseStore(3, 4, ["x", "y"], stack)
        np.testing.assert_array_equal(store.table("y"), stack[1])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            SenseStore(3, 4, ["x"], np.zeros((1, 3, 5)))


class TestVectorText:
    def test_round_trip_with_header(self, tmp_path):
        words = ["alpha", "beta"]
        mat = np.array([[1.0, -2.5, 0.125], [3.0, 0.0, -1.0]])
        save_vectors(tmp_path / "v.txt", words, mat)
        text = (tmp_path / "v.txt").read_text()
        assert text.splitlines()[0] == "2 3"
        back_words, back = load_vectors(tmp_path / "v.txt")
        assert back_words == words
        np.testing.assert_array_equal(back, mat)

    def test_headerless_file_sniffed(self, tmp_path):
        (tmp_path / "glove.txt").write_text(
            "the 0.1 0.2 0.3\ncat 0.4 -0.5 0.6\n"
        )
        words, mat = load_vectors(tmp_path / "glove.txt")
        assert words == ["the", "cat"]
        np.testing.assert_allclose(mat, [[0.1, 0.2, 0.3], [0.4, -0.5, 0.6]])

    def test_header_row_count_mismatch_rejected(self, tmp_path):
        (tmp_path / "v.txt").write_text("3 2\na 1 2\nb 3 4\n")
        with pytest.raises(DataError):
            load_vectors(tmp_path / "v.txt")

    def test_ragged_rows_rejected(self, tmp_path):
        (tmp_path / "v.txt").write_text("2 3\na 1 2 3\nb 4 5\n")
        with pytest.raises(DataError):
            load_vectors(tmp_path / "v.txt")

    def test_non_numeric_rejected(self, tmp_path):
        (tmp_path / "v.txt").write_text("1 2\na 1 oops\n")
        with pytest.raises(DataError):
            load_vectors(tmp_path / "v.txt")
