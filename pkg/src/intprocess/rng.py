"""Counter-based Philox4x32-10 generator, vectorized over counters.

Every random number is a pure function of ``(seed, counter)``. A path's draws
depend only on its own index, so chunking or parallel splitting of the path
set cannot reorder or change them. numpy's ``Philox`` bit generator is
sequential per stream and has no vectorized counter-to-output map, which is
why the bijection is implemented here directly.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_LO = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def philox4x32(counter: np.ndarray, key) -> np.ndarray:
    """Apply 10 Philox rounds to an ``(n, 4)`` uint32 counter array under a 2-word key."""
    c = np.asarray(counter, dtype=np.uint32)
    if c.shape[-1] != 4:
        raise ValueError("counter must have trailing dimension 4")
    c0, c1, c2, c3 = (c[..., i].astype(np.uint64) for i in range(4))
    k0 = np.uint32(key[0])
    k1 = np.uint32(key[1])
    with np.errstate(over="ignore"):
        for _ in range(10):
            p0 = _M0 * c0
            p1 = _M1 * c2
            hi0, lo0 = p0 >> _SHIFT32, p0 & _LO
            hi1, lo1 = p1 >> _SHIFT32, p1 & _LO
            c0 = hi1 ^ c1 ^ np.uint64(k0)
            c1 = lo1
            c2 = hi0 ^ c3 ^ np.uint64(k1)
            c3 = lo0
            k0 = np.uint32(k0 + _W0)
            k1 = np.uint32(k1 + _W1)
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def _words_to_unit(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """53-bit doubles strictly inside (0, 1)."""
    mant = (hi.astype(np.uint64) >> np.uint64(5)) * np.uint64(1 << 26) + (lo.astype(np.uint64) >> np.uint64(6))
    return (mant.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


class CounterRNG:
    """Per-path random streams keyed by a 64-bit seed.

    A counter is ``(draw index, stream tag, path lo, path hi)``; each counter
    yields two uniforms. Tags separate independent uses (normals, arrival
    times, jump sizes, rejection attempts) that share a draw index.
    """

    def __init__(self, seed: int):
        seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.seed = seed
        self._key = (seed & 0xFFFFFFFF, seed >> 32)

    def uniform_pair(self, draw: int, tag: int, paths: np.ndarray) -> np.ndarray:
        """Two uniforms per path as an ``(len(paths), 2)`` array."""
        paths = np.asarray(paths, dtype=np.uint64)
        ctr = np.empty(paths.shape + (4,), dtype=np.uint32)
        ctr[..., 0] = np.uint32(draw & 0xFFFFFFFF)
        ctr[..., 1] = np.uint32(tag & 0xFFFFFFFF)
        ctr[..., 2] = (paths & _LO).astype(np.uint32)
        ctr[..., 3] = (paths >> _SHIFT32).astype(np.uint32)
        w = philox4x32(ctr, self._key)
        return np.stack([_words_to_unit(w[..., 0], w[..., 1]),
                         _words_to_unit(w[..., 2], w[..., 3])], axis=-1)

    def uniform(self, draw: int, tag: int, paths: np.ndarray) -> np.ndarray:
        return self.uniform_pair(draw, tag, paths)[..., 0]

    def normal_pair(self, draw: int, tag: int, paths: np.ndarray) -> np.ndarray:
        return ndtri(self.uniform_pair(draw, tag, paths))

    def exponential(self, draw: int, tag: int, paths: np.ndarray) -> np.ndarray:
        return -np.log(self.uniform(draw, tag, paths))

    def gamma(self, shape: float, draw: int, tag: int, paths: np.ndarray,
              max_attempts: int = 64) -> np.ndarray:
        """Gamma(shape, rate 1) by Marsaglia-Tsang rejection.

        Attempt ``k`` uses tag ``tag + 1 + k``; the small-shape boost uses
        ``tag``. Callers must leave a gap of ``max_attempts + 1`` tags.
        """
        if not shape > 0:
            raise ValueError("gamma shape must be positive")
        paths = np.asarray(paths)
        a = shape + 1.0 if shape < 1.0 else shape
        d = a - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty(paths.shape)
        todo = np.arange(paths.size)
        for k in range(max_attempts):
            u = self.uniform_pair(draw, tag + 1 + k, paths[todo])
            z = ndtri(u[:, 0])
            v = (1.0 + c * z) ** 3
            ok = v > 0
            with np.errstate(divide="ignore", invalid="ignore"):
                accept = ok & (np.log(u[:, 1]) < 0.5 * z * z + d - d * v + d * np.log(np.where(ok, v, 1.0)))
            out[todo[accept]] = d * v[accept]
            todo = todo[~accept]
            if todo.size == 0:
                break
        if todo.size:
            raise RuntimeError("gamma rejection sampler did not terminate")
        if shape < 1.0:
            # G(a) = G(a + 1) * U^(1/a), evaluated in logs to delay underflow
            log_u = np.log(self.uniform(draw, tag, paths))
            out = np.exp(np.log(out) + log_u / shape)
        return out
