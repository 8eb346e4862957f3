"""Real rotation matrices applied to blocks of constellation symbols.

Column convention throughout: a symbol vector s maps to x = M s.  The
cyclotomic and Kruskemper catalog entries are the orthogonal polar factors of
their published decimal displays (see the constants below for why); the 4x4
"mixed" matrix is kept verbatim even though its last two columns have squared
norm 2, flagged with claims_unitary=False, and the unitarity invariant is
only enforced where claimed.
"""

from dataclasses import dataclass

import numpy as np

from .constellation import difference_set

UNITARITY_TOL = 1e-9
FULL_DIVERSITY_TOL = 1e-6


@dataclass(frozen=True)
class Rotation:
    dim: int
    entries: np.ndarray
    name: str
    claims_unitary: bool = True

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.claims_unitary:
            res = unitarity_residual(self)
            if res > UNITARITY_TOL:
                raise ValueError(
                    f"rotation {self.name!r} claims unitarity but ||MM^T - I||_F = {res:.3e}"
                )


def unitarity_residual(rotation):
    """Frobenius norm of M M^T - I."""
    m = rotation.entries
    return float(np.linalg.norm(m @ m.T - np.eye(rotation.dim)))


# Rotation matrices as published (10-decimal displays).  The published digits
# are truncations of exactly orthogonal matrices: taken verbatim they leave
# ||MM^T - I||_F of 1.5e-10 (2x2 cyclotomic) and 3.7e-9 (4x4 Kruskemper),
# which leaks into quantities that rely on exact unitarity.  The catalog
# therefore carries the orthogonal polar factor of the printed digits:
# unitary to machine precision, agreeing with the cyclotomic display in every
# digit and with the Kruskemper display within its own truncation (2e-9).
CYCLOTOMIC_2_PRINTED = np.array(
    [
        [-0.5257311121, -0.8506508083],
        [-0.8506508083, 0.5257311121],
    ]
)

KRUSKEMPER_4_PRINTED = np.array(
    [
        [-0.3663925121, -0.2264430248, -0.474464708, -0.7677000246],
        [-0.7677000238, -0.4744647078, 0.2264430248, 0.3663925106],
        [0.4230815704, -0.6845603618, -0.5049593144, 0.3120820189],
        [0.3120820187, -0.5049593142, 0.6845603618, -0.4230815707],
    ]
)


def _polar_factor(matrix):
    u, _, vt = np.linalg.svd(matrix)
    return u @ vt


CYCLOTOMIC_2 = _polar_factor(CYCLOTOMIC_2_PRINTED)
KRUSKEMPER_4 = _polar_factor(KRUSKEMPER_4_PRINTED)

MIXED_4 = np.array(
    [
        [0.2011885864868, 0.3255299710843, 0.284523627604, 0.4603689000663],
        [0.3255299710843, -0.2011885864868, 0.4603689000663, -0.284523627604],
        [0.4857122140913, 0.7858988711506, -0.6869008005781, -1.1114288422349],
        [0.7858988711506, -0.4857122140913, -1.1114288422349, 0.6869008005782],
    ]
)


def identity(dim):
    """The trivial (non-spreading) rotation of any dimension."""
    if dim < 1:
        raise ValueError("rotation dimension must be >= 1")
    return Rotation(dim, np.eye(dim), f"identity{dim}", claims_unitary=True)


def catalog(name):
    """Look up a built-in rotation: identity{1,2,4}, cyclotomic2, kruskemper4, mixed4."""
    key = name.strip().lower().replace("(", "").replace(")", "")
    if key in ("identity1", "identity2", "identity4"):
        return identity(int(key[-1]))
    if key == "cyclotomic2":
        return Rotation(2, CYCLOTOMIC_2, "cyclotomic2", claims_unitary=True)
    if key == "kruskemper4":
        return Rotation(4, KRUSKEMPER_4, "kruskemper4", claims_unitary=True)
    if key == "mixed4":
        return Rotation(4, MIXED_4, "mixed4", claims_unitary=False)
    raise ValueError(f"unknown rotation {name!r}; known: {', '.join(catalog_names())}")


def catalog_names():
    return ["identity1", "identity2", "identity4", "cyclotomic2", "kruskemper4", "mixed4"]


def rotate(rotation, s):
    """Apply x = M s (real matrix times complex vector)."""
    s = np.asarray(s)
    if s.shape != (rotation.dim,):
        raise ValueError(f"expected a length-{rotation.dim} vector, got shape {s.shape}")
    return rotation.entries @ s


def full_diversity_margin(rotation, constellation, cap=10**8):
    """Smallest rotated-difference component magnitude over all nonzero
    difference vectors.

    Scans d in (D u {0})^N minus the all-zero vector, where D is the
    constellation difference set, and returns min_d min_n |(M d)_n|.  A return
    value of 0 means the rotation is not full-diversity for this constellation;
    values above FULL_DIVERSITY_TOL count as full diversity.
    """
    n = rotation.dim
    m = rotation.entries
    d0 = np.concatenate(([0.0 + 0.0j], difference_set(constellation)))
    total = len(d0) ** n
    if total > cap:
        raise ValueError(
            f"difference-vector enumeration needs {total} vectors, above the cap {cap}; "
            "raise `cap` explicitly to run it"
        )
    if n == 1:
        return float(np.min(np.abs(m[0, 0] * d0[1:])))

    # Vectorize the last two axes; loop over the leading n-2 in Python.
    tail = (
        m[:, n - 2, None, None] * d0[None, :, None]
        + m[:, n - 1, None, None] * d0[None, None, :]
    )
    best = np.inf
    for idx in np.ndindex(*((len(d0),) * (n - 2))):
        head = m[:, : n - 2] @ d0[np.array(idx, dtype=np.intp)]
        mins = np.abs(head[:, None, None] + tail).min(axis=0)
        if not any(idx):
            mins[0, 0] = np.inf  # exclude the all-zero difference vector
        best = min(best, float(mins.min()))
    return best


def is_full_diversity(rotation, constellation, cap=10**8):
    return full_diversity_margin(rotation, constellation, cap=cap) > FULL_DIVERSITY_TOL
