"""Labelled, counter-based random streams.

A stream is keyed by a seed plus any number of labels (strings, ints, floats),
hashed into the 128-bit key of a Philox generator. Two consumers with
different labels never share draws, so adding a new consumer or a new grid
coordinate leaves every other stream untouched.
"""

import hashlib
import json

import numpy as np


def _digest(seed, labels):
    payload = json.dumps([int(seed), *[_canon(x) for x in labels]], separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).digest()


def _canon(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        # repr is the shortest exact round-trip form
        return repr(float(x))
    return str(x)


def stream(seed, *labels):
    """Return a ``numpy.random.Generator`` for ``(seed, *labels)``."""
    key = int.from_bytes(_digest(seed, labels)[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master, *labels):
    """Derive a 63-bit integer seed from a master seed and labels."""
    return int.from_bytes(_digest(master, labels)[:8], "little") >> 1
