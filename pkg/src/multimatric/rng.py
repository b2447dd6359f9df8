"""Counter-based random streams.

A stream is addressed by ``(seed, stream_id)``; it drives a Philox generator
keyed by ``seed`` whose counter starts at ``stream_id`` in its top word, so
distinct stream ids never overlap and the same address always replays the
same numbers.
"""

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self):
        key = int(self.seed) & _MASK64
        counter = [0, 0, 0, int(self.stream_id) & _MASK64]
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def substream(self, offset):
        """The stream ``offset`` places further along."""
        return RngStream(self.seed, self.stream_id + int(offset))
