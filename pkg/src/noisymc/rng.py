"""Seeded random streams.

Every random draw in the package goes through :func:`make_rng`, which builds a
``numpy.random.Generator`` on top of the counter-based Philox bit generator.
Substreams are derived with ``SeedSequence`` spawn keys, so trial ``k`` of an
experiment seeded with ``s`` always sees the same stream no matter which other
trials ran before it or in which order.

Stream layout used by the experiments module::

    make_rng(seed, purpose, n_index, trial)

where ``purpose`` is a small integer tag (see the ``STREAM_*`` constants).
"""

import numpy as np

STREAM_MATRIX = 1
STREAM_OBSERVATIONS = 2
STREAM_RADEMACHER = 3
STREAM_MEMBERS = 4

_MASK64 = (1 << 64) - 1


def make_rng(seed, *stream):
    """Return a Philox-backed generator for ``seed`` and substream path ``stream``.

    ``seed`` must fit in an unsigned 64-bit integer. ``stream`` is a sequence
    of non-negative integers identifying the substream.
    """
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def substream_seed(seed, *stream):
    """Deterministic 64-bit integer seed for substream ``stream`` of ``seed``.

    Use this where an API takes an integer seed rather than a generator.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
