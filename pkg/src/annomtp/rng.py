"""Keyed, counter-based random number streams.

Reproducibility contract
------------------------
Every stochastic step in the package draws from a stream addressed by
``(master_seed, spawn_key)``, realized as::

    numpy.random.Generator(numpy.random.Philox(
        numpy.random.SeedSequence(master_seed, spawn_key=key)))

Philox is counter-based, so a stream's output depends only on its key,
never on how many other streams were consumed before it.  Results are
therefore independent of execution order and of the number of workers.

Stream address space (the ``key`` tuples):

- ``(DOMAIN_RESAMPLE, b)`` -- outer resampling replicate ``b``;
- ``(DOMAIN_INNER, b, c)`` -- replicate ``c`` of an inner gene-level
  test run inside outer replicate ``b``;
- ``(DOMAIN_OBSERVED_INNER, c)`` -- replicate ``c`` of the inner
  gene-level test on the observed (non-resampled) data;
- ``(DOMAIN_TRIAL, t)`` -- data generation for simulation trial ``t``;
- ``(DOMAIN_TRIAL_RESAMPLE, t, b)`` -- resampling replicate ``b``
  inside simulation trial ``t``.

Draw conventions (part of the contract; replay oracles rely on them):

- a nonparametric bootstrap of ``n`` units draws
  ``rng.integers(0, n, size=n)``; a redraw after a degenerate replicate
  repeats the same call on the same stream;
- a label permutation draws ``rng.permutation(n)``.

``GENERATOR_ID`` identifies this scheme in run manifests.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "philox4x64/seedseq-spawn-key"

DOMAIN_RESAMPLE = 0
DOMAIN_INNER = 1
DOMAIN_OBSERVED_INNER = 2
DOMAIN_TRIAL = 3
DOMAIN_TRIAL_RESAMPLE = 4


def stream(master_seed: int, key: tuple[int, ...]) -> np.random.Generator:
    """Return the generator for stream ``key`` under ``master_seed``."""
    if master_seed < 0:
        raise ValueError("master_seed must be nonnegative")
    seq = np.random.SeedSequence(master_seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
