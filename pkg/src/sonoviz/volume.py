"""In-memory voxel grids, coordinate transforms, slicing, and synthetic phantoms.

Layout convention
-----------------
Voxel data is kept as a C-contiguous ``float32`` array of shape
``(nz, ny, nx)``, so ``data[k, j, i]`` addresses voxel ``(i, j, k)`` and the
flattened order is x-fastest / z-slowest::

    flat_index = i + nx * (j + ny * k)

This matches the raw MetaImage payload order byte for byte, which keeps the
decode path copy-free.

Randomness
----------
Synthetic noise uses NumPy's Philox counter-based bit generator
(``numpy.random.Philox``), seeded explicitly. Philox is a published,
portable algorithm; a fixed seed reproduces the same volume on every run.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import IndexOutOfBoundsError

Triple = tuple[float, float, float]


class Axis(Enum):
    """A principal volume axis."""

    X = 0
    Y = 1
    Z = 2

    @classmethod
    def from_name(cls, name: str) -> "Axis":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown axis {name!r}; expected x, y, or z") from None


@dataclass(frozen=True)
class ScalarVolume:
    """A 3D scalar field on a regular grid.

    Parameters
    ----------
    data : ndarray
        Voxel values, shape ``(nz, ny, nx)``. Converted to ``float32`` and
        frozen; all values must be finite.
    spacing : (sx, sy, sz)
        Physical size of one voxel in mm, all components > 0.
    origin : (ox, oy, oz)
        World position of voxel ``(0, 0, 0)`` in mm.
    """

    data: np.ndarray
    spacing: Triple = (1.0, 1.0, 1.0)
    origin: Triple = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("volume must contain at least one voxel")
        if not np.all(np.isfinite(arr)):
            raise ValueError("volume contains non-finite values")
        spacing = tuple(float(s) for s in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if len(spacing) != 3 or len(origin) != 3:
            raise ValueError("spacing and origin must have three components")
        if any(s <= 0 for s in spacing):
            raise ValueError(f"spacing components must be positive, got {spacing}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        """Grid extent as ``(nx, ny, nz)``."""
        nz, ny, nx = self.data.shape
        return nx, ny, nz

    @property
    def flat(self) -> np.ndarray:
        """Voxels in payload order (x-fastest)."""
        return self.data.reshape(-1)

    def with_data(self, data: np.ndarray) -> "ScalarVolume":
        """Same grid geometry, new values."""
        return ScalarVolume(data, self.spacing, self.origin)


@dataclass(frozen=True)
class Slice2D:
    """One axis-aligned plane copied out of a volume.

    ``data`` has shape ``(dims[1], dims[0])``: the first in-plane axis is
    the fast one, matching the parent volume's x-before-y-before-z order.
    """

    data: np.ndarray
    spacing: tuple[float, float]
    axis: Axis
    slice_index: int

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"slice data must be 2D, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int]:
        n1, n0 = self.data.shape
        return n0, n1


def index_to_world(volume: ScalarVolume, ijk: tuple[int, int, int]) -> Triple:
    """World coordinates (mm) of voxel ``ijk``: ``origin + ijk * spacing``."""
    i, j, k = ijk
    nx, ny, nz = volume.dims
    if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
        raise IndexOutOfBoundsError(f"voxel index {ijk} outside dims {(nx, ny, nz)}")
    ox, oy, oz = volume.origin
    sx, sy, sz = volume.spacing
    return (ox + i * sx, oy + j * sy, oz + k * sz)


# In-plane axes for each slicing axis, in x-before-y-before-z order.
_PLANE_AXES = {Axis.X: (Axis.Y, Axis.Z), Axis.Y: (Axis.X, Axis.Z), Axis.Z: (Axis.X, Axis.Y)}


def extract_slice(volume: ScalarVolume, axis: Axis, slice_index: int) -> Slice2D:
    """Copy one plane perpendicular to ``axis`` out of the volume.

    The in-plane axes keep their x,y,z order: slicing along Z yields an
    (x, y) plane, along Y an (x, z) plane, along X a (y, z) plane.
    """
    nx, ny, nz = volume.dims
    extent = {Axis.X: nx, Axis.Y: ny, Axis.Z: nz}[axis]
    if not 0 <= slice_index < extent:
        raise IndexOutOfBoundsError(
            f"slice index {slice_index} outside [0, {extent}) on axis {axis.name}"
        )
    if axis is Axis.Z:
        plane = volume.data[slice_index, :, :]
    elif axis is Axis.Y:
        plane = volume.data[:, slice_index, :]
    else:
        plane = volume.data[:, :, slice_index]
    a0, a1 = _PLANE_AXES[axis]
    spacing = (volume.spacing[a0.value], volume.spacing[a1.value])
    return Slice2D(plane.copy(), spacing, axis, slice_index)


def value_range(volume: ScalarVolume) -> tuple[float, float]:
    """Exact (min, max) over all voxels."""
    return float(volume.data.min()), float(volume.data.max())


def synth_sphere(
    dims: tuple[int, int, int],
    center: Triple,
    radius: float,
    inside: float = 1.0,
    outside: float = 0.0,
) -> ScalarVolume:
    """Binary ball phantom: ``inside`` within ``radius`` of ``center``, else ``outside``.

    Spacing is (1, 1, 1) and origin (0, 0, 0), so voxel indices are world
    coordinates.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    nx, ny, nz = dims
    kk, jj, ii = np.ogrid[0:nz, 0:ny, 0:nx]
    cx, cy, cz = center
    d2 = (ii - cx) ** 2 + (jj - cy) ** 2 + (kk - cz) ** 2
    data = np.where(d2 <= radius * radius, np.float32(inside), np.float32(outside))
    return ScalarVolume(data)


def synth_noise(
    dims: tuple[int, int, int],
    seed: int,
    base: float = 0.0,
    sigma: float = 0.0,
    impulse_fraction: float = 0.0,
    impulse_value: float = 0.0,
) -> ScalarVolume:
    """Noise phantom: ``base`` plus Gaussian noise, with impulse outliers.

    Deterministic for a fixed ``seed`` (Philox counter-based generator):
    every voxel gets ``base + N(0, sigma)``, then ``impulse_fraction`` of
    the voxels, chosen without replacement, are overwritten with
    ``impulse_value``.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if not 0.0 <= impulse_fraction <= 1.0:
        raise ValueError(f"impulse_fraction must be in [0, 1], got {impulse_fraction}")
    nx, ny, nz = dims
    n = nx * ny * nz
    rng = np.random.Generator(np.random.Philox(seed))
    flat = np.full(n, base, dtype=np.float64)
    if sigma > 0:
        flat += rng.normal(0.0, sigma, size=n)
    count = int(round(impulse_fraction * n))
    if count > 0:
        where = rng.choice(n, size=count, replace=False)
        flat[where] = impulse_value
    return ScalarVolume(flat.reshape(nz, ny, nx))


def add_noise(
    volume: ScalarVolume,
    seed: int,
    sigma: float = 0.0,
    impulse_fraction: float = 0.0,
    impulse_value: float = 0.0,
) -> ScalarVolume:
    """Corrupt an existing volume the way :func:`synth_noise` builds one.

    Adds ``N(0, sigma)`` per voxel, then overwrites ``impulse_fraction`` of
    the voxels with ``impulse_value``; same Philox determinism contract.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if not 0.0 <= impulse_fraction <= 1.0:
        raise ValueError(f"impulse_fraction must be in [0, 1], got {impulse_fraction}")
    rng = np.random.Generator(np.random.Philox(seed))
    flat = volume.flat.astype(np.float64)
    if sigma > 0:
        flat += rng.normal(0.0, sigma, size=flat.size)
    count = int(round(impulse_fraction * flat.size))
    if count > 0:
        where = rng.choice(flat.size, size=count, replace=False)
        flat[where] = impulse_value
    nx, ny, nz = volume.dims
    return volume.with_data(flat.reshape(nz, ny, nx))
