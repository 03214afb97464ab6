"""
Deterministic random substreams keyed by (master seed, tags)
"""

import hashlib
from typing import Union

import numpy as np

Tag = Union[int, str]


def _tag_to_int(tag: Tag) -> int:
    """Map a tag to a 64-bit integer; strings hash stably across processes"""
    if isinstance(tag, (bool, np.bool_)):
        raise TypeError("boolean tags are ambiguous")
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError(f"integer tags must be non-negative, got {tag}")
        return int(tag)
    digest = hashlib.md5(str(tag).encode()).hexdigest()
    return int(digest[:16], 16)


def seed_sequence(master_seed: int, *tags: Tag) -> np.random.SeedSequence:
    return np.random.SeedSequence([_tag_to_int(master_seed), *(_tag_to_int(t) for t in tags)])


def derive_rng(master_seed: int, *tags: Tag) -> np.random.Generator:
    """Independent generator for the given key; identical keys give identical streams"""
    return np.random.default_rng(seed_sequence(master_seed, *tags))


def fork_seed(rng: np.random.Generator) -> int:
    """Draw a master seed from a parent stream so child streams stay reproducible"""
    return int(rng.integers(0, 2**63 - 1))
