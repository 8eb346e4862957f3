"""Complex-plane signal sets with bit labelings and unit average energy."""

from dataclasses import dataclass

import numpy as np

ENERGY_TOL = 1e-12


@dataclass(frozen=True)
class Constellation:
    """A 2**M point complex signal set with an M-bit labeling.

    ``points`` are ordered row-major over the square QAM grid (imaginary part
    ascending by row, real part ascending within a row).  ``labeling[v]`` is
    the index into ``points`` of the symbol carrying bit pattern ``v``
    (bit 0 = MSB).
    """

    points: np.ndarray
    bits_per_symbol: int
    labeling: np.ndarray
    name: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        lab = np.asarray(self.labeling, dtype=np.int64)
        size = 2 ** self.bits_per_symbol
        if pts.shape != (size,):
            raise ValueError(f"expected {size} points, got {pts.shape}")
        energy = np.mean(np.abs(pts) ** 2)
        if abs(energy - 1.0) > ENERGY_TOL:
            raise ValueError(f"mean symbol energy {energy!r} is not 1")
        if sorted(lab.tolist()) != list(range(size)):
            raise ValueError("labeling is not a bijection onto the point indices")
        pts.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labeling", lab)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def points_by_label(self):
        """Symbols indexed by bit pattern: points_by_label[v] carries label v."""
        return self.points[self.labeling]

    def label_of_point(self):
        """Inverse map: bit pattern carried by each point index."""
        inv = np.empty(self.size, dtype=np.int64)
        inv[self.labeling] = np.arange(self.size)
        return inv


def _gray(k):
    return k ^ (k >> 1)


def _labels_gray(side, half):
    lab = np.empty((side, side), dtype=np.int64)
    for r in range(side):
        for c in range(side):
            lab[r, c] = (_gray(c) << half) | _gray(r)
    return lab


def _labels_set_partitioning(side, bits):
    # Successive binary partitioning of the grid so that the minimum
    # intra-subset distance grows by sqrt(2) at every level: alternate
    # checkerboard and column-parity splits of the (halved) integer grid.
    lab = np.zeros((side, side), dtype=np.int64)
    for r in range(side):
        for c in range(side):
            p, q, v = c, r, 0
            for _ in range(bits // 2):
                v = (v << 1) | ((p + q) & 1)
                v = (v << 1) | (p & 1)
                p, q = p >> 1, q >> 1
            lab[r, c] = v
    return lab


def make_qam(bits_per_symbol, labeling_kind="gray"):
    """Unit-energy square QAM with Gray or set-partitioning labeling.

    Supported sizes: bits_per_symbol 2 (QPSK) and 4 (16-QAM).
    """
    if bits_per_symbol not in (2, 4):
        raise ValueError(
            f"unsupported bits_per_symbol {bits_per_symbol}: only QPSK (2) and 16-QAM (4)"
        )
    if labeling_kind not in ("gray", "set_partitioning"):
        raise ValueError(f"unknown labeling kind {labeling_kind!r}")
    side = 2 ** (bits_per_symbol // 2)
    levels = 2 * np.arange(side) - (side - 1)
    scale = np.sqrt(2.0 * np.mean(levels.astype(float) ** 2))
    re, im = np.meshgrid(levels, levels, indexing="xy")
    points = (re + 1j * im).ravel() / scale

    if labeling_kind == "gray":
        grid = _labels_gray(side, bits_per_symbol // 2)
    else:
        grid = _labels_set_partitioning(side, bits_per_symbol)
    # labeling[v] = point index carrying pattern v
    labeling = np.empty(side * side, dtype=np.int64)
    labeling[grid.ravel()] = np.arange(side * side)

    name = {2: "qpsk", 4: "qam16"}[bits_per_symbol]
    if labeling_kind != "gray":
        name += "-sp"
    return Constellation(points, bits_per_symbol, labeling, name)


def difference_set(constellation):
    """All distinct nonzero differences s - s' over ordered point pairs."""
    pts = constellation.points
    n = pts.shape[0]
    d = (pts[:, None] - pts[None, :])[~np.eye(n, dtype=bool)]
    _, idx = np.unique(np.round(d, 12), return_index=True)
    return d[np.sort(idx)]
