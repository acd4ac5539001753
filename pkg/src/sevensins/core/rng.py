"""
SplitMix64 pseudo-random generator.

The recurrence is fixed so that a seed gives the same stream in any
language:

    state <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z <- state
    z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9    (mod 2^64)
    z <- (z XOR (z >> 27)) * 0x94D049BB133111EB    (mod 2^64)
    output z XOR (z >> 31)

Uniforms on [0, 1) take the top 53 bits of an output times 2^-53. Standard
normals pair two uniforms u1, u2 through Box-Muller:
sqrt(-2 log(1 - u1)) * cos(2 pi u2).
"""

import numpy as np

from .domain.errors import ValidationError

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX_1
    z = (z ^ (z >> np.uint64(27))) * _MIX_2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Seedable 64-bit generator with a portable, documented recurrence."""

    def __init__(self, seed: int):
        if seed < 0 or seed > _MASK:
            raise ValidationError(
                f"seed must be an unsigned 64-bit integer, got {seed}"
            )
        self._state = np.uint64(seed)

    @property
    def state(self) -> int:
        return int(self._state)

    def next_uint64(self, count: int) -> np.ndarray:
        """The next ``count`` raw outputs."""
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = self._state + steps * _GAMMA
            self._state = states[-1] if count else self._state
            return _mix(states)

    def uniform(self, count: int) -> np.ndarray:
        """``count`` doubles in [0, 1)."""
        return (self.next_uint64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, count: int) -> np.ndarray:
        """``count`` standard normal draws."""
        u = self.uniform(2 * count)
        radius = np.sqrt(-2.0 * np.log1p(-u[:count]))
        return radius * np.cos(2.0 * np.pi * u[count:])
