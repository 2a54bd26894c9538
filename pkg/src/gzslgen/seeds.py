"""Deterministic seed derivation.

All randomness in a run flows from one root seed, split into named
sub-streams (init / shuffle / noise / classifier / synthesis) so that
changing one consumer never perturbs the others.
"""

import zlib

import numpy as np


def child_seed(root: int, name: str) -> int:
    """Derive a stable child seed from a root seed and a stream name.

    Uses CRC32 of the name (not ``hash()``, which is salted per process)
    so the mapping is reproducible across runs and machines.
    """
    tag = zlib.crc32(name.encode("utf-8"))
    seq = np.random.SeedSequence([int(root) & 0xFFFFFFFFFFFF, tag])
    return int(seq.generate_state(1, np.uint64)[0])


def child_rng(root: int, name: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(root, name))
