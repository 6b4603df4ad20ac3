import numpy as np
import pytest

from otbench import OTInstance, PointCloudDistribution
from otbench.datasets import mnist_style_instance
from otbench.formats import (read_embeddings, read_instance, read_pnm,
                             write_instance, write_pnm, write_points)


def test_dense_roundtrip(tmp_path):
    inst = mnist_style_instance(4)
    path = tmp_path / "x.txt"
    write_instance(inst, path)
    back = read_instance(path)
    np.testing.assert_array_equal(back.cost, inst.cost)
    np.testing.assert_array_equal(back.supplies, inst.supplies)
    np.testing.assert_array_equal(back.demands, inst.demands)
    assert back.name == inst.name
    assert back.meta["scale"] == inst.meta["scale"]
    assert back.content_hash == inst.content_hash


def test_dense_free_whitespace(tmp_path):
    path = tmp_path / "w.txt"
    path.write_text("# name=ws\n2   1\n1\n1 2\n5\n\n 7 \n")
    inst = read_instance(path)
    assert inst.name == "ws" and inst.cost.tolist() == [[5], [7]]


def test_dense_token_count_checked(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 1\n1\n1\n")
    with pytest.raises(ValueError, match="expected"):
        read_instance(path)


def test_points_roundtrip(tmp_path):
    a = PointCloudDistribution([[0.0, 0.0], [3.0, 4.0]], [2, 1])
    b = PointCloudDistribution([[0.0, 1.0]], [3])
    path = tmp_path / "p.txt"
    write_points(a, b, path, scale=10, name="pts")
    inst = read_instance(path)
    assert inst.name == "pts"
    assert inst.cost.tolist() == [[10], [42]]
    assert inst.supplies.tolist() == [2, 1]


def test_points_malformed(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("POINTS 2\n1 1\n1 0 0\n")
    with pytest.raises(ValueError):
        read_instance(path)


@pytest.mark.parametrize("shape", [(3, 4), (3, 4, 3)])
def test_pnm_roundtrip(tmp_path, shape):
    img = np.random.default_rng(0).integers(0, 256, size=shape)
    path = tmp_path / "img.pnm"
    write_pnm(img, path)
    np.testing.assert_array_equal(read_pnm(path), img)


def test_pnm_comments_and_binary_rejected(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_text("P2 # grey\n2 1\n# max\n255\n0 9\n")
    assert read_pnm(path).tolist() == [[0, 9]]
    path.write_text("P5\n1 1\n255\n")
    with pytest.raises(ValueError):
        read_pnm(path)


def test_embeddings(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("# tokens\n3 0.1 0.2\n\n1 -1 2.5\n")
    d = read_embeddings(path)
    assert d.weights.tolist() == [3, 1] and d.d == 2
