"""Discrete space-time white noise in the Walsh sense.

Each grid cell [t_m, t_{m+1}) x [x_j - dx/2, x_j + dx/2) receives an
independent centered normal increment with variance dt*dx, so that
sum_j g(x_j, t_m) dW[m][j] approximates the cylindrical integral of g
against the noise measure.  Streams are counter-based (Philox), so
replicates are reproducible under any execution order.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class NoiseRealization:
    """One realization of the discrete noise increments dW[m][j]."""

    dw: np.ndarray
    grid: GridSpec
    seed: int
    replicate_id: int

    @property
    def increments(self) -> np.ndarray:
        return self.dw


def generate(grid: GridSpec, seed: int, replicate_id: int = 0) -> NoiseRealization:
    """Draw the full increment array for one replicate.

    Keyed by (seed, replicate_id) through a counter-based Philox stream;
    the same triple (seed, replicate_id, grid) reproduces the array
    bit-exactly on any platform or thread schedule.
    """
    key = np.array([np.uint64(int(seed) & int(_MASK64)),
                    np.uint64(int(replicate_id) & int(_MASK64))])
    gen = np.random.Generator(np.random.Philox(key=key))
    scale = np.sqrt(grid.dt * grid.dx)
    dw = gen.normal(0.0, scale, size=(grid.nt, grid.nx))
    dw.setflags(write=False)
    return NoiseRealization(dw=dw, grid=grid, seed=int(seed), replicate_id=int(replicate_id))


def stream_for_replicate(master_seed: int, r: int) -> int:
    """Derive a per-replicate 64-bit seed from the master seed.

    Splittable and stable: distinct replicate indices give statistically
    independent streams regardless of the order they are drawn in.
    """
    if r < 0:
        raise ValueError("replicate index must be non-negative")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(r),))
    return int(ss.generate_state(1, np.uint64)[0])


def perturb_cell(noise: NoiseRealization, m: int, j: int, amount: float) -> NoiseRealization:
    """Copy of the realization with dW[m][j] shifted by `amount`.

    This realizes a Cameron-Martin bump of density 1/(dx*dt) on one cell
    scaled by `amount`, the direction used by the tangent finite-difference
    diagnostics.
    """
    dw = noise.dw.copy()
    dw[m, j] += amount
    dw.setflags(write=False)
    return NoiseRealization(dw=dw, grid=noise.grid, seed=noise.seed,
                            replicate_id=noise.replicate_id)
