"""Seeded randomness helpers.

All randomness in the toolkit flows through two functions:

* ``make_rng(seed)`` returns a counter-based generator (Philox-4x64-10,
  keyed by the seed) so equal seeds give bit-identical streams on every
  platform and the generator family is reproducible outside Python.
* ``derive_seed(seed, index)`` maps a base seed plus a small index to a
  decorrelated child seed via the splitmix64 finalizer, so repetition i
  of a procedure gets its own independent stream.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # splitmix64 finalizer; constants are the published ones.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed for repetition ``index`` of a seeded run."""
    return _splitmix64(((seed & _MASK64) + index) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` (Philox-4x64-10)."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
