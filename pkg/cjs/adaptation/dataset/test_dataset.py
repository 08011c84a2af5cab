import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from cjs.adaptation.dataset.dataset import (
    DomainDataset,
    FeatureMatrix,
    LabelMatrix,
    l2_normalize,
    load_dataset,
    merge_domains,
    one_hot_encode,
    save_dataset,
)
from cjs.exceptions import (
    DatasetParseError,
    DimensionMismatch,
    LabelLengthMismatch,
    LabelOutOfRange,
    MixedLabeling,
)


class TestLoadDataset(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _write(self, name, text):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as file:
            file.write(text)
        return path

    def test_samples_become_columns(self):
        path = self._write("x.csv", "1,2\n3,4\n5,6\n")
        dataset = load_dataset(path, domain_tag="amazon")
        self.assertEqual(dataset.features.d, 2)
        self.assertEqual(dataset.features.n, 3)
        self.assertIsNone(dataset.labels)
        assert_array_equal(dataset.features.data, [[1, 3, 5], [2, 4, 6]])
        self.assertEqual(dataset.domain_tag, "amazon")

    def test_header_is_detected(self):
        path = self._write("x.csv", "f1,f2\n1,2\n3,4\n")
        self.assertEqual(load_dataset(path).features.n, 2)

    def test_label_length_mismatch(self):
        x = self._write("x.csv", "1,2\n3,4\n5,6\n")
        y = self._write("y.txt", "0\n1\n")
        with self.assertRaises(LabelLengthMismatch):
            load_dataset(x, y)

    def test_nan_is_rejected(self):
        path = self._write("x.csv", "1,NaN\n3,4\n")
        with self.assertRaises(DatasetParseError):
            load_dataset(path)

    def test_wrong_arity_and_bad_token(self):
        with self.assertRaises(DatasetParseError):
            load_dataset(self._write("a.csv", "1,2\n3\n"))
        with self.assertRaises(DatasetParseError):
            load_dataset(self._write("b.csv", "1,2\n3,x\n"))

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_dataset(os.path.join(self.tmp.name, "missing.csv"))

    def test_one_based_labels(self):
        x = self._write("x.csv", "1,2\n3,4\n")
        y = self._write("y.txt", "1\n3\n")
        dataset = load_dataset(x, y, label_base=1)
        assert_array_equal(dataset.labels, [0, 2])

    def test_normalize_flag(self):
        x = self._write("x.csv", "3,4\n0,0\n")
        dataset = load_dataset(x, normalize=True)
        assert_array_equal(dataset.features.data, [[0.6, 0.0], [0.8, 0.0]])

    def test_save_load_round_trip(self):
        rng = np.random.default_rng(3)
        original = DomainDataset(
            FeatureMatrix(rng.normal(size=(4, 7))), rng.integers(0, 3, size=7), "webcam"
        )
        x = os.path.join(self.tmp.name, "x.csv")
        y = os.path.join(self.tmp.name, "y.txt")
        save_dataset(original, x, y, label_base=1)
        loaded = load_dataset(x, y, domain_tag="webcam", label_base=1)
        assert_array_equal(loaded.features.data, original.features.data)
        assert_array_equal(loaded.labels, original.labels)


class TestFeatureMatrix(unittest.TestCase):
    def test_rejects_non_finite(self):
        with self.assertRaises(DatasetParseError):
            FeatureMatrix(np.array([[1.0, np.inf]]))

    def test_is_read_only(self):
        features = FeatureMatrix(np.ones((2, 2)))
        with self.assertRaises(ValueError):
            features.data[0, 0] = 5.0

    def test_l2_normalize_leaves_zero_columns(self):
        features = l2_normalize(FeatureMatrix(np.array([[0.0, 2.0], [0.0, 0.0]])))
        assert_array_equal(features.data, [[0.0, 1.0], [0.0, 0.0]])


class TestOneHotEncode(unittest.TestCase):
    def test_columns_are_one_hot(self):
        encoded = one_hot_encode([0, 2], 3)
        assert_array_equal(encoded.codes, [[1, 0], [0, 0], [0, 1]])
        self.assertTrue(encoded.hard)

    def test_empty(self):
        self.assertEqual(one_hot_encode([], 4).codes.shape, (4, 0))

    def test_out_of_range(self):
        with self.assertRaises(LabelOutOfRange):
            one_hot_encode([3], 3)

    def test_hard_matrix_must_be_one_hot(self):
        with self.assertRaises(ValueError):
            LabelMatrix(np.array([[0.5], [0.5]]), hard=True)
        LabelMatrix(np.array([[0.5], [0.5]]), hard=False)


class TestMergeDomains(unittest.TestCase):
    def _dataset(self, d, n, labeled=True, seed=0):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 2, size=n) if labeled else None
        return DomainDataset(FeatureMatrix(rng.normal(size=(d, n))), labels, f"d{seed}")

    def test_concatenates_in_order(self):
        a, b = self._dataset(3, 5, seed=1), self._dataset(3, 7, seed=2)
        merged = merge_domains([a, b])
        self.assertEqual(merged.features.n, 12)
        assert_array_equal(merged.features.data[:, :5], a.features.data)
        assert_array_equal(merged.labels[5:], b.labels)

    def test_single_dataset_is_identity(self):
        a = self._dataset(3, 5)
        self.assertIs(merge_domains([a]), a)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            merge_domains([self._dataset(10, 2), self._dataset(8, 2)])

    def test_mixed_labeling(self):
        with self.assertRaises(MixedLabeling):
            merge_domains([self._dataset(3, 2), self._dataset(3, 2, labeled=False)])

    def test_associative_up_to_order(self):
        a, b, c = (self._dataset(3, n, seed=n) for n in (2, 3, 4))
        left = merge_domains([a, merge_domains([b, c])])
        right = merge_domains([merge_domains([a, b]), c])
        key = lambda data: sorted(map(tuple, data.T))  # noqa: E731
        self.assertEqual(key(left.features.data), key(right.features.data))


if __name__ == "__main__":
    unittest.main()
