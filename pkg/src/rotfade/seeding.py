"""Counter-based random stream derivation.

Every stochastic routine in the package draws from a generator obtained via
``derive_rng(master_seed, *path)`` where ``path`` is a tuple of small integers
(trial index, batch index, stage, ...).  Streams are independent of scheduling
and worker count: the same (seed, path) always yields the same stream.
"""

import numpy as np


def derive_rng(master_seed, *path):
    """Return a Generator keyed by a master seed and an integer path."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)
