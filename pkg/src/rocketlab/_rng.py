"""Counter-based random streams.

Every random quantity in the package is drawn from a Philox stream keyed by
``(seed, domain, index)``.  Stream ``index`` of a domain is reproducible on
its own, so kernel ``i`` or Monte-Carlo trial ``t`` can be regenerated without
replaying earlier draws, and work can be scheduled in any order.
"""

import numpy as np

GENERATOR_NAME = "philox4x64"
GENERATOR_VERSION = 1

_MASK64 = (1 << 64) - 1

# Domain tags; values are part of the reproducibility contract.
KERNELS = 1
NOISE = 2
COHERENCE_TRIALS = 3
AXIOMS = 4
VARIANCE_TRIALS = 5
SYNTHETIC = 6
FOLDS = 7
CROSS_BASIS = 8


def stream(seed, domain, index=0):
    """Return the generator for stream ``index`` of ``domain`` under ``seed``."""
    if index < 0 or index >= 1 << 48:
        raise ValueError(f"stream index out of range: {index}")
    key = np.array(
        [int(seed) & _MASK64, (int(domain) << 48) | int(index)], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


def describe():
    return {"generator": GENERATOR_NAME, "version": GENERATOR_VERSION}
