"""Counter-based random substreams.

Every stochastic quantity in the package is drawn from a Philox generator
whose key is the master seed and whose start counter encodes a
(lane, step) pair, e.g. (worker_id, round) for worker draws or (0, trial)
for Monte Carlo trials.  Distinct pairs give non-overlapping streams, so
any parallel evaluation schedule produces the same bits as sequential
execution.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Second key word: fixed domain-separation constant.
_DOMAIN = 0x9E3779B97F4A7C15


def _check(master_seed: int, lane: int, step: int) -> None:
    if not 0 <= int(master_seed) <= _MASK64:
        raise ValueError(f"master_seed must be a 64-bit unsigned integer: got {master_seed}")
    if lane < 0 or step < 0:
        raise ValueError(f"lane and step must be non-negative: got lane={lane}, step={step}")


def substream(master_seed: int, lane: int = 0, step: int = 0) -> np.random.Generator:
    """Fresh, independent generator for (master_seed, lane, step)."""
    _check(master_seed, lane, step)
    key = np.array([master_seed, _DOMAIN], dtype=np.uint64)
    counter = np.array([0, 0, lane, step], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


class SubstreamSource:
    """Cheap repeated access to the substreams of one master seed.

    `generator(lane, step)` yields draws bit-identical to
    `substream(master_seed, lane, step)` but reuses a single Philox
    instance, which is roughly an order of magnitude faster in tight
    loops.  The returned generator is only valid until the next
    `generator` call on the same source; draw from it immediately.
    Instances are not thread-safe; each thread should own its own
    source (streams themselves stay identical either way).
    """

    def __init__(self, master_seed: int):
        _check(master_seed, 0, 0)
        self._bg = np.random.Philox(
            counter=np.zeros(4, dtype=np.uint64),
            key=np.array([master_seed, _DOMAIN], dtype=np.uint64),
        )
        self._gen = np.random.Generator(self._bg)
        self._state = self._bg.state

    def generator(self, lane: int = 0, step: int = 0) -> np.random.Generator:
        if lane < 0 or step < 0:
            raise ValueError(f"lane and step must be non-negative: got lane={lane}, step={step}")
        st = self._state
        counter = st["state"]["counter"]
        counter[0] = 0
        counter[1] = 0
        counter[2] = lane
        counter[3] = step
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self._gen
