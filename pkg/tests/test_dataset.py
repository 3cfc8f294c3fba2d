#!/usr/bin/env python3
"""
Unit tests for spatial datasets, designs and CSV input/output.
"""

import tempfile
import unittest

import numpy as np

from dataset import (
    Design,
    Rectangle,
    SpatialDataset,
    make_grid,
    read_csv,
    read_targets,
    sample_uniform,
    subsample,
    write_csv,
)
from errors import DatasetParseError, InvalidDesignError
from test_base import BaseTestCase


class TestSpatialDataset(BaseTestCase):
    """Construction and invariants."""

    def test_valid_dataset(self):
        ds = SpatialDataset([[0.0, 0.0], [1.0, 0.0]], [1.5, 2.0])
        self.assertEqual(ds.n, 2)
        self.assertEqual(len(ds), 2)

    def test_arrays_are_read_only(self):
        ds = SpatialDataset([[0.0, 0.0], [1.0, 0.0]], [1.5, 2.0])
        with self.assertRaises(ValueError):
            ds.values[0] = 3.0

    def test_duplicate_positions_rejected(self):
        with self.assertRaises(InvalidDesignError):
            SpatialDataset([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]], [1.0, 2.0, 3.0])

    def test_shape_mismatch_rejected(self):
        with self.assertRaises(InvalidDesignError):
            SpatialDataset([[0.0, 0.0], [1.0, 1.0]], [1.0])

    def test_non_finite_rejected(self):
        with self.assertRaises(InvalidDesignError):
            SpatialDataset([[0.0, np.nan]], [1.0])
        with self.assertRaises(InvalidDesignError):
            SpatialDataset([[0.0, 0.0]], [np.inf])

    def test_drop_and_take(self):
        ds = self.random_dataset(6)
        dropped = ds.drop(2)
        self.assertEqual(dropped.n, 5)
        np.testing.assert_array_equal(dropped.values, np.delete(ds.values, 2))
        taken = ds.take([4, 1])
        np.testing.assert_array_equal(taken.positions[0], ds.positions[4])
        self.assertEqual(taken.values[1], ds.values[1])

    def test_equality(self):
        a = self.random_dataset(5, seed=3)
        b = self.random_dataset(5, seed=3)
        self.assertEqual(a, b)
        self.assertNotEqual(a, self.random_dataset(5, seed=4))

    def test_bounding_rectangle(self):
        ds = SpatialDataset([[0.0, 1.0], [6.0, 0.0], [2.0, 4.0]], [1.0, 2.0, 3.0])
        self.assertEqual(ds.bounding_rectangle().as_list(), [0.0, 6.0, 0.0, 4.0])


class TestDesigns(BaseTestCase):
    """Grids, uniform draws and subsamples."""

    def test_grid_of_16(self):
        points = make_grid(Rectangle.square(0.0, 10.0), 4)
        self.assertEqual(points.shape, (16, 2))
        np.testing.assert_allclose(np.unique(points[:, 0]), [0.0, 10.0 / 3, 20.0 / 3, 10.0])
        self.assertTrue(any(np.allclose(p, [0.0, 0.0]) for p in points))
        self.assertTrue(any(np.allclose(p, [10.0, 10.0]) for p in points))

    def test_grid_sizes(self):
        self.assertEqual(make_grid(Rectangle.square(0.0, 10.0), 9).shape[0], 81)
        self.assertEqual(make_grid(Rectangle.square(-1.0, 1.0), 12).shape[0], 144)

    def test_grid_rejects_k_below_two(self):
        with self.assertRaises(InvalidDesignError):
            make_grid(Rectangle.square(0.0, 1.0), 1)

    def test_degenerate_rectangle(self):
        with self.assertRaises(InvalidDesignError):
            Rectangle(0.0, 0.0, 0.0, 1.0)
        with self.assertRaises(InvalidDesignError):
            Rectangle.parse("0,1,2")

    def test_rectangle_parse(self):
        self.assertEqual(Rectangle.parse("0,6,0,4"), Rectangle(0.0, 6.0, 0.0, 4.0))

    def test_uniform_single_point(self):
        rect = Rectangle.square(-1.0, 1.0)
        point = sample_uniform(rect, 1, 5)[0]
        self.assertTrue(-1.0 <= point[0] <= 1.0 and -1.0 <= point[1] <= 1.0)

    def test_uniform_is_deterministic(self):
        rect = Rectangle.square(-1.0, 1.0)
        a = sample_uniform(rect, 150, 11)
        b = sample_uniform(rect, 150, 11)
        self.assertEqual(a.shape, (150, 2))
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, sample_uniform(rect, 150, 12)))

    def test_uniform_rejects_zero(self):
        with self.assertRaises(InvalidDesignError):
            sample_uniform(Rectangle.square(0.0, 1.0), 0, 1)

    def test_subsample_full_size_is_permutation(self):
        parent = self.random_dataset(20)
        sub = subsample(parent, 20, 1)
        order = np.lexsort(sub.positions.T)
        ref = np.lexsort(parent.positions.T)
        np.testing.assert_array_equal(sub.positions[order], parent.positions[ref])
        np.testing.assert_array_equal(sub.values[order], parent.values[ref])

    def test_subsamples_are_row_subsets(self):
        parent = self.random_dataset(70)
        rows = {tuple(p) + (v,) for p, v in zip(parent.positions, parent.values)}
        for seed in range(100):
            sub = subsample(parent, 30, seed)
            self.assertEqual(sub.n, 30)
            for p, v in zip(sub.positions, sub.values):
                self.assertIn(tuple(p) + (v,), rows)

    def test_subsample_too_large(self):
        with self.assertRaises(InvalidDesignError):
            subsample(self.random_dataset(5), 6, 0)

    def test_design_kinds(self):
        rect = Rectangle.square(0.0, 10.0)
        self.assertEqual(Design("grid", 3, rect).positions().shape, (9, 2))
        self.assertEqual(Design("uniform", 7, rect, seed=2).positions().shape, (7, 2))
        self.assertEqual(Design("subsample", 4, seed=2).draw(self.random_dataset(10)).n, 4)
        with self.assertRaises(InvalidDesignError):
            Design("subsample", 4).positions()


class TestCsv(BaseTestCase):
    """CSV input and output."""

    def _write(self, text: str) -> str:
        with tempfile.NamedTemporaryFile(mode="w", suffix=".csv", delete=False) as f:
            f.write(text)
        self.register_test_file(f.name)
        return f.name

    def test_read_simple(self):
        ds = read_csv(self._write("x,y,value\n0,0,1.5\n1,0,2.0\n"))
        self.assertEqual(ds.n, 2)
        self.assertEqual(ds.values.tolist(), [1.5, 2.0])

    def test_duplicate_row_reported(self):
        path = self._write("x,y,value\n0,0,1.5\n1,0,2.0\n0,0,3.0\n")
        with self.assertRaises(DatasetParseError) as ctx:
            read_csv(path)
        self.assertEqual(ctx.exception.row, 4)

    def test_non_numeric_cell(self):
        with self.assertRaises(DatasetParseError) as ctx:
            read_csv(self._write("x,y,value\n0,0,1.5\n1,abc,2.0\n"))
        self.assertEqual(ctx.exception.row, 3)

    def test_missing_column(self):
        with self.assertRaises(DatasetParseError):
            read_csv(self._write("x,value\n0,1\n"))

    def test_missing_file(self):
        with self.assertRaises(DatasetParseError):
            read_csv("/nonexistent/data.csv")

    def test_seventy_row_dataset(self):
        rng = np.random.default_rng(8)
        points = np.column_stack([rng.uniform(0, 6, 70), rng.uniform(0, 4, 70)])
        lines = ["x,y,value"] + [f"{x!r},{y!r},{x + y!r}" for x, y in points]
        ds = read_csv(self._write("\n".join(lines) + "\n"))
        self.assertEqual(ds.n, 70)

    def test_write_then_read_preserves_values(self):
        ds = self.random_dataset(15, seed=9)
        path = self.write_dataset(ds)
        self.assertEqual(read_csv(path), ds)
        with open(path, "rb") as f:
            self.assertNotIn(b"\r\n", f.read())

    def test_read_targets(self):
        targets = read_targets(self._write("x,y\n0.5,1\n2,3\n"))
        np.testing.assert_array_equal(targets, [[0.5, 1.0], [2.0, 3.0]])

    def test_write_creates_parent_dirs(self):
        out = self.make_temp_dir() / "nested" / "data.csv"
        write_csv(self.random_dataset(3), out)
        self.assertTrue(out.exists())


if __name__ == "__main__":
    unittest.main()
