import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotfade.constellation import Constellation, difference_set, make_qam


def test_qpsk_points():
    c = make_qam(2)
    expected = {(s1 + 1j * s2) / np.sqrt(2) for s1 in (-1, 1) for s2 in (-1, 1)}
    assert c.size == 4
    for p in c.points:
        assert min(abs(p - e) for e in expected) < 1e-12


def test_qam16_points():
    c = make_qam(4)
    levels = (-3, -1, 1, 3)
    expected = {(a + 1j * b) / np.sqrt(10) for a in levels for b in levels}
    assert c.size == 16
    for p in c.points:
        assert min(abs(p - e) for e in expected) < 1e-12


@pytest.mark.parametrize("m", [2, 4])
@pytest.mark.parametrize("kind", ["gray", "set_partitioning"])
def test_unit_energy(m, kind):
    c = make_qam(m, kind)
    assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) <= 1e-12


def test_unsupported_size_rejected():
    with pytest.raises(ValueError, match="unsupported"):
        make_qam(3)
    with pytest.raises(ValueError, match="labeling"):
        make_qam(2, "foo")


def test_labeling_is_bijection():
    for m in (2, 4):
        for kind in ("gray", "set_partitioning"):
            c = make_qam(m, kind)
            assert sorted(c.labeling.tolist()) == list(range(2**m))
            inv = c.label_of_point()
            assert np.array_equal(c.labeling[inv[c.labeling]], c.labeling)


def test_constellation_validation():
    pts = np.array([1.0 + 0j, -1.0 + 0j])
    with pytest.raises(ValueError, match="bijection"):
        Constellation(pts, 1, np.array([0, 0]), "bad")
    with pytest.raises(ValueError, match="energy"):
        Constellation(pts * 2.0, 1, np.array([0, 1]), "bad")
    with pytest.raises(ValueError, match="expected"):
        Constellation(pts, 2, np.arange(4), "bad")


def test_difference_set_qpsk():
    c = make_qam(2)
    d = difference_set(c)
    assert len(d) == 8
    root2 = np.sqrt(2.0)
    for v in d:
        assert abs(v) > 0.5  # zero excluded
        for comp in (v.real, v.imag):
            assert min(abs(comp - t) for t in (0.0, root2, -root2)) < 1e-12


def test_difference_set_qam16():
    c = make_qam(4)
    d = difference_set(c)
    assert len(d) == 48
    levels = np.array([0, 2, 4, 6, -2, -4, -6]) / np.sqrt(10)
    for v in d:
        assert min(abs(v.real - t) for t in levels) < 1e-12
        assert min(abs(v.imag - t) for t in levels) < 1e-12


@pytest.mark.parametrize("m", [2, 4])
def test_difference_set_matches_pair_enumeration(m):
    c = make_qam(m)
    expected = set()
    for a, b in itertools.permutations(c.points, 2):
        expected.add((round((a - b).real, 9), round((a - b).imag, 9)))
    got = {(round(v.real, 9), round(v.imag, 9)) for v in difference_set(c)}
    assert got == expected


@pytest.mark.parametrize("m", [2, 4])
def test_difference_set_symmetric(m):
    d = difference_set(make_qam(m))
    keys = {(round(v.real, 9), round(v.imag, 9)) for v in d}
    assert {(-a, -b) for a, b in keys} == keys


@pytest.mark.parametrize("m", [2, 4])
def test_gray_neighbours_differ_in_one_bit(m):
    c = make_qam(m)
    inv = c.label_of_point()
    pts = c.points
    dmin = min(
        abs(a - b) for a, b in itertools.combinations(pts, 2)
    )
    for i, j in itertools.combinations(range(len(pts)), 2):
        if abs(pts[i] - pts[j]) < dmin + 1e-9:
            assert bin(int(inv[i]) ^ int(inv[j])).count("1") == 1


@pytest.mark.parametrize("m", [2, 4])
def test_set_partitioning_doubles_min_distance(m):
    c = make_qam(m, "set_partitioning")
    pbl = c.points_by_label

    def min_dist(symbols):
        return min(abs(a - b) for a, b in itertools.combinations(symbols, 2))

    for depth in range(m - 1):
        # subsets share the first `depth + 1` label bits
        dists = []
        for prefix in range(2 ** (depth + 1)):
            members = [
                pbl[v]
                for v in range(2**m)
                if v >> (m - depth - 1) == prefix
            ]
            dists.append(min_dist(members))
        parent = []
        for prefix in range(2**depth):
            members = [pbl[v] for v in range(2**m) if v >> (m - depth) == prefix]
            parent.append(min_dist(members))
        assert min(dists) == pytest.approx(np.sqrt(2.0) * min(parent), rel=1e-9)


@given(st.integers(min_value=0, max_value=15))
def test_label_round_trip_qam16(label):
    c = make_qam(4)
    point_idx = c.labeling[label]
    assert c.label_of_point()[point_idx] == label
