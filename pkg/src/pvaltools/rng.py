"""Counter-based random streams addressed by (master seed, replicate index).

Generator: Philox4x64-10 (numpy's ``Philox``) keyed by the 64-bit master
seed. Replicates are grouped into fixed blocks of ``BLOCK_SIZE``; block ``b``
starts at counter ``(0, 0, b, 0)`` and its replicates take consecutive
runs of ``per_rep`` 64-bit words. A replicate's numbers therefore depend only
on the seed, its index and ``per_rep`` - never on how blocks are scheduled
across workers.

Uniforms are ``((w >> 11) + 0.5) / 2**53`` (strictly inside (0, 1)); normal
deviates are their standard normal quantiles.
"""
import numpy as np

from . import distfn

BLOCK_SIZE = 16384
ALGORITHM = "philox4x64-10/inverse-cdf"
_MASK64 = (1 << 64) - 1


def _check_seed(seed):
    if int(seed) != seed or not (0 <= seed <= _MASK64):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def _philox(seed, block):
    key = np.array([_check_seed(seed), 0], dtype=np.uint64)
    return np.random.Philox(key=key, counter=np.array([0, 0, block, 0], dtype=np.uint64))


def _to_uniform(words):
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def block_uniforms(seed, block, n_reps, per_rep):
    """Uniforms for ``n_reps`` replicates of block ``block``, shape (n_reps, per_rep)."""
    words = _philox(seed, block).random_raw(n_reps * per_rep)
    return _to_uniform(words).reshape(n_reps, per_rep)


def block_normals(seed, block, n_reps, per_rep):
    return distfn.norm_quantile(block_uniforms(seed, block, n_reps, per_rep))


def replicate_normals(seed, rep, per_rep):
    """Normals of a single replicate, fetched by jumping the counter."""
    block, offset = divmod(rep, BLOCK_SIZE)
    start = offset * per_rep
    bg = _philox(seed, block)
    # each counter step yields four 64-bit words
    bg.advance(start // 4)
    skip = start % 4
    words = bg.random_raw(skip + per_rep)[skip:]
    return distfn.norm_quantile(_to_uniform(words))


def blocks(reps):
    """(block index, first replicate, replicate count) covering ``reps``."""
    out = []
    for b, first in enumerate(range(0, reps, BLOCK_SIZE)):
        out.append((b, first, min(BLOCK_SIZE, reps - first)))
    return out
