"""Counter-based Gaussian random streams.

Each stream is a Philox4x64 counter generator keyed by ``(seed, stream_id)``;
uniforms are mapped to standard normals with the Box-Muller transform. The
output is a pure function of the key, so streams never share state.
"""
import numpy as np

__all__ = ["GaussianStream", "gaussian_stream", "next_normal"]

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


class GaussianStream:
    """Reproducible stream of i.i.d. standard normals."""

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)
        self._spare = np.empty(0)

    def _uniforms(self, k):
        raw = self._bits.random_raw(k)
        # 53-bit mantissa, offset by half a unit so log() never sees 0
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, k):
        """Next ``k`` normals; consecutive calls continue one sequence."""
        k = int(k)
        out = np.empty(k)
        take = min(k, self._spare.size)
        out[:take] = self._spare[:take]
        self._spare = self._spare[take:]
        need = k - take
        if need:
            pairs = (need + 1) // 2
            u = self._uniforms(2 * pairs)
            r = np.sqrt(-2.0 * np.log(u[0::2]))
            phi = _TWO_PI * u[1::2]
            z = np.empty(2 * pairs)
            z[0::2] = r * np.cos(phi)
            z[1::2] = r * np.sin(phi)
            out[take:] = z[:need]
            self._spare = z[need:]
        return out

    def next_normal(self):
        return float(self.normals(1)[0])

    def __repr__(self):
        return f"GaussianStream(seed={self.seed}, stream_id={self.stream_id})"


def gaussian_stream(seed, stream_id=0):
    return GaussianStream(seed, stream_id)


def next_normal(stream):
    return stream.next_normal()
