"""Named, independent random streams.

Every stream is a Philox counter-based generator keyed by
``(master seed, replicate, stream id)`` through ``SeedSequence`` spawn keys,
so data, batch sampling, output selection and diagnostic probes never share
state and replicates can run in any order.
"""

from __future__ import annotations

import numpy as np

DATA = 0
BATCH = 1
OUTPUT = 2
PROBE = 3
INIT = 4

STREAMS = {"data": DATA, "batch": BATCH, "output": OUTPUT, "probe": PROBE, "init": INIT}


def stream(seed: int, replicate: int = 0, which: int | str = BATCH) -> np.random.Generator:
    if isinstance(which, str):
        which = STREAMS[which]
    if seed < 0 or replicate < 0:
        raise ValueError("seed and replicate must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate), int(which)))
    return np.random.Generator(np.random.Philox(ss))
