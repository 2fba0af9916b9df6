"""Deterministic pseudo-random numbers for reproducible initial conditions.

The generator is pinned by algorithm (splitmix64 seeding feeding a
xoshiro256++ stream) so that equal seeds give bit-identical draws on any
platform and in any implementation language.  Each simulation run owns
exactly one generator; it is never shared between runs.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state by one step, returning (new_state, output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256pp:
    """xoshiro256++ stream seeded through splitmix64.

    The 4-word state is filled with four consecutive splitmix64 outputs of
    the 64-bit seed, which avoids the all-zero state for every seed.
    """

    def __init__(self, seed: int):
        s = seed & _MASK64
        state = []
        for _ in range(4):
            s, z = splitmix64_next(s)
            state.append(z)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in the open interval (0, 1).

        Uses the top 52 bits plus a half-ulp offset, so 0.0 and 1.0 are
        unreachable (the Weibull inverse transform requires u in (0,1)).
        """
        return ((self.next_u64() >> 12) + 0.5) * 2.0**-52
