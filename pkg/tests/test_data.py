import gzip
import struct

import numpy as np
import pytest

from hemloss.data import (
    ImbalanceSpec,
    LabeledDataset,
    bundled_mnist_subset,
    gen_pixel_permutation,
    gen_uniform_noise,
    load_csv,
    load_idx,
    make_long_tail,
    save_csv,
    save_idx,
    split_per_class,
    take_per_class,
)
from hemloss.errors import EmptyDatasetError, InvalidArgument, ParseError


def write_raw(path, data):
    path.write_bytes(data)
    return path


def idx_header(magic, *dims):
    return struct.pack(">I", magic) + struct.pack(f">{len(dims)}I", *dims)


@pytest.fixture
def idx_pair(tmp_path):
    images = np.zeros((2, 28, 28), dtype=np.uint8)
    images[0, 0, 0] = 255
    images[1, 27, 27] = 51
    img = write_raw(tmp_path / "img", idx_header(0x803, 2, 28, 28) + images.tobytes())
    lab = write_raw(tmp_path / "lab", idx_header(0x801, 2) + bytes([7, 3]))
    return img, lab


def test_load_idx(idx_pair):
    ds = load_idx(*idx_pair)
    assert ds.samples.shape == (2, 784)
    assert ds.samples[0, 0] == 1.0
    assert ds.samples[1, -1] == pytest.approx(0.2)
    assert list(ds.labels) == [7, 3]
    assert ds.class_counts.sum() == 2


def test_idx_round_trip_gz(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(5, 4, 3), dtype=np.uint8)
    labels = rng.integers(0, 10, size=5)
    save_idx(tmp_path / "i.gz", tmp_path / "l.gz", images, labels)
    ds = load_idx(tmp_path / "i.gz", tmp_path / "l.gz")
    np.testing.assert_array_equal(ds.samples, images.reshape(5, -1) / 255.0)
    np.testing.assert_array_equal(ds.labels, labels)
    with gzip.open(tmp_path / "i.gz") as f:
        assert f.read(4) == bytes([0, 0, 8, 3])


def test_idx_errors(tmp_path, idx_pair):
    img, lab = idx_pair
    bad_magic = write_raw(tmp_path / "bm", idx_header(0x802, 2, 28, 28) + bytes(2 * 784))
    with pytest.raises(ParseError, match="magic") as info:
        load_idx(bad_magic, lab)
    assert info.value.location == 0
    truncated = write_raw(tmp_path / "tr", idx_header(0x803, 2, 28, 28) + bytes(100))
    with pytest.raises(ParseError, match="truncated"):
        load_idx(truncated, lab)
    three = write_raw(tmp_path / "l3", idx_header(0x801, 3) + bytes([1, 2, 3]))
    with pytest.raises(ParseError, match="count mismatch"):
        load_idx(img, three)
    with pytest.raises(ParseError, match="truncated"):
        load_idx(write_raw(tmp_path / "tiny", b"\x00\x00"), lab)


def test_load_csv(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("3,0,255\n")
    ds = load_csv(p)
    assert list(ds.labels) == [3]
    np.testing.assert_array_equal(ds.samples, [[0.0, 1.0]])
    rows = "\n".join(f"{i % 3},{i},{2 * i}" for i in range(10))
    p.write_text(rows + "\n")
    assert len(load_csv(p, scale=18)) == 10
    last = tmp_path / "b.csv"
    last.write_text("0,255,4\n")
    ds = load_csv(last, label_column=-1)
    assert list(ds.labels) == [4]


def test_csv_errors(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(EmptyDatasetError):
        load_csv(p)
    p.write_text("1,2,3\n1,2\n")
    with pytest.raises(ParseError) as info:
        load_csv(p)
    assert info.value.location == 2
    p.write_text("1,2,3\n1,x,3\n4,5,6\n")
    with pytest.raises(ParseError) as info:
        load_csv(p)
    assert info.value.location == 2


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(6, 4))
    y = rng.integers(0, 3, size=6)
    save_csv(tmp_path / "r.csv", x, y)
    ds = load_csv(tmp_path / "r.csv")
    np.testing.assert_allclose(ds.samples, x, rtol=1e-15)
    np.testing.assert_array_equal(ds.labels, y)


def test_bundled_subset():
    ds = bundled_mnist_subset()
    assert ds.samples.shape == (5000, 784)
    assert list(ds.class_counts) == [500] * 10
    assert ds.samples.min() == 0.0 and ds.samples.max() == 1.0
    tr, te = split_per_class(ds, 100)
    assert list(tr.class_counts) == [400] * 10 and list(te.class_counts) == [100] * 10
    assert list(take_per_class(tr, 200).class_counts) == [200] * 10


def test_dataset_validation():
    with pytest.raises(InvalidArgument):
        LabeledDataset(np.full((2, 2), 1.5), [0, 1])
    with pytest.raises(InvalidArgument):
        LabeledDataset(np.zeros((2, 2)), [0, 3], n_classes=3)
    ds = LabeledDataset(np.zeros((3, 2)), [0, 2, 2], n_classes=4)
    assert list(ds.class_counts) == [1, 0, 2, 0]


def balanced(n_classes, per_class, d=3):
    labels = np.repeat(np.arange(n_classes), per_class)
    # interleave classes so per-class "first" differs from global order
    order = np.random.default_rng(0).permutation(len(labels))
    labels = labels[order]
    samples = (np.arange(len(labels))[:, None] * np.ones((1, d))) / len(labels)
    return LabeledDataset(samples, labels, n_classes)


def test_long_tail_cifar_shape():
    counts = ImbalanceSpec(0.6).kept_counts([5000] * 10)
    assert counts == [5000, 3000, 1800, 1080, 648, 388, 233, 139, 83, 50]
    assert counts[0] / counts[-1] >= 99


def test_long_tail_prefix_and_counts():
    ds = balanced(4, 100)
    lt = make_long_tail(ds, ImbalanceSpec(0.5))
    assert list(lt.class_counts) == [100, 50, 25, 12]
    for c, k in enumerate([100, 50, 25, 12]):
        first = ds.samples[ds.labels == c][:k]
        np.testing.assert_array_equal(lt.samples[lt.labels == c], first)


def test_long_tail_identity_and_order():
    ds = balanced(2, 100)
    same = make_long_tail(ds, ImbalanceSpec(1.0))
    np.testing.assert_array_equal(same.samples, ds.samples)
    np.testing.assert_array_equal(same.labels, ds.labels)
    assert list(make_long_tail(ds, ImbalanceSpec(0.5)).class_counts) == [100, 50]
    assert list(make_long_tail(ds, ImbalanceSpec(0.5), class_order=[1, 0]).class_counts) == [50, 100]


def test_long_tail_errors():
    with pytest.raises(InvalidArgument):
        make_long_tail(balanced(3, 4), ImbalanceSpec(0.1))
    with pytest.raises(InvalidArgument):
        ImbalanceSpec(0.0)
    with pytest.raises(InvalidArgument):
        make_long_tail(balanced(3, 4), ImbalanceSpec(0.9), class_order=[0, 0, 1])


def test_uniform_noise():
    a = gen_uniform_noise(784, 200, 4)
    assert a.shape == (200, 784)
    assert np.array_equal(a, gen_uniform_noise(784, 200, 4))
    assert a.min() >= 0.0 and a.max() <= 1.0
    assert abs(a.mean() - 0.5) <= 0.01


def test_pixel_permutation():
    ds = bundled_mnist_subset().subset(np.arange(0, 5000, 250))
    out = gen_pixel_permutation(ds, 8)
    assert np.array_equal(out, gen_pixel_permutation(ds.samples, 8))
    np.testing.assert_array_equal(np.sort(out, axis=1), np.sort(ds.samples, axis=1))
    np.testing.assert_allclose(out.mean(axis=1), ds.samples.mean(axis=1), rtol=1e-14)
    # one permutation shared by every sample
    perm = np.random.default_rng(8).permutation(784)
    np.testing.assert_array_equal(out, ds.samples[:, perm])
