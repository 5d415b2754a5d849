"""Plane domains, covering maps, and cell decompositions.

Every region here is a closed-form predicate on complex samples.  Vectorized
membership is the only geometric primitive the rest of the package needs:
quadrature walks regions through native parameterizations (polar or
Cartesian), fields restrict themselves with predicates, and the covering maps
carry their derivatives along so pullbacks never differentiate numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Distance below which a sample counts as sitting on a puncture.
EPS_PUNCT = 1e-9


def _as_array(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Strip:
    """Horizontal strip 0 < Im z < height."""

    height: float

    def contains(self, z) -> np.ndarray:
        z = _as_array(z)
        return (z.imag > 0.0) & (z.imag < self.height)


@dataclass(frozen=True)
class Annulus:
    """Round annulus inner < |z| < 1 about the origin.

    inner = 0 gives the punctured unit disk; the origin itself is excluded.
    """

    inner: float

    def __post_init__(self):
        if not 0.0 <= self.inner < 1.0:
            raise ValueError(f"inner radius must be in [0, 1), got {self.inner}")

    def contains(self, z) -> np.ndarray:
        z = _as_array(z)
        r = np.abs(z)
        return (r > max(self.inner, EPS_PUNCT)) & (r < 1.0)


@dataclass(frozen=True)
class UnitDisk:
    def contains(self, z) -> np.ndarray:
        return np.abs(_as_array(z)) < 1.0


@dataclass(frozen=True)
class SlitDisk:
    """Unit disk minus the symmetric slit [-t, t] on the real axis."""

    t: float

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"slit half-length must be in (0, 1), got {self.t}")

    def slit_distance(self, z) -> np.ndarray:
        z = _as_array(z)
        dx = np.maximum(np.abs(z.real) - self.t, 0.0)
        return np.hypot(dx, z.imag)

    def contains(self, z) -> np.ndarray:
        z = _as_array(z)
        return (np.abs(z) < 1.0) & (self.slit_distance(z) > EPS_PUNCT)


@dataclass(frozen=True)
class PlaneMinusIntegers:
    """Complex plane with the integer lattice on the real axis removed."""

    def puncture_distance(self, z) -> np.ndarray:
        z = _as_array(z)
        return np.abs(z - np.round(z.real))

    def contains(self, z) -> np.ndarray:
        return self.puncture_distance(z) > EPS_PUNCT


@dataclass(frozen=True)
class Cell:
    """Half-open vertical cell n*p < Re z <= (n+1)*p of the integer-punctured
    plane, p the deck step."""

    step: float = 3.0
    index: int = 0

    @property
    def x_min(self) -> float:
        return self.index * self.step

    @property
    def x_max(self) -> float:
        return (self.index + 1) * self.step

    def punctures(self) -> list[int]:
        lo = int(np.floor(self.x_min)) + 1
        hi = int(np.floor(self.x_max))
        return [m for m in range(lo, hi + 1) if self.x_min < m <= self.x_max]

    def contains(self, z) -> np.ndarray:
        z = _as_array(z)
        inside = (z.real > self.x_min) & (z.real <= self.x_max)
        return inside & (np.abs(z - np.round(z.real)) > EPS_PUNCT)


@dataclass(frozen=True)
class Disk:
    """Round disk about an arbitrary center (utility region)."""

    center: complex
    radius: float

    def contains(self, z) -> np.ndarray:
        return np.abs(_as_array(z) - self.center) < self.radius


@dataclass(frozen=True)
class RoundAnnulus:
    """Round annulus r_in < |z - center| < r_out (utility region)."""

    center: complex
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0.0 <= self.r_in < self.r_out:
            raise ValueError("need 0 <= r_in < r_out")

    @property
    def log_modulus(self) -> float:
        if self.r_in == 0.0:
            return np.inf
        return float(np.log(self.r_out / self.r_in))

    def contains(self, z) -> np.ndarray:
        r = np.abs(_as_array(z) - self.center)
        return (r > max(self.r_in, EPS_PUNCT)) & (r < self.r_out)


Region = (
    Strip
    | Annulus
    | UnitDisk
    | SlitDisk
    | PlaneMinusIntegers
    | Cell
    | Disk
    | RoundAnnulus
)


def contains(region, z) -> np.ndarray:
    """Vectorized membership, punctures excluded within EPS_PUNCT."""
    return region.contains(z)


# ---------------------------------------------------------------------------
# covering maps


@dataclass(frozen=True)
class CoveringMap:
    """Holomorphic covering with an explicit derivative.

    `fun` and `deriv` must accept and return complex ndarrays.
    """

    fun: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    source: object = None
    target: object = None
    label: str = ""

    def __call__(self, z) -> np.ndarray:
        return self.fun(_as_array(z))


def covering_eval(cover: CoveringMap, z):
    """Evaluate a covering map and its derivative at once."""
    z = _as_array(z)
    return cover.fun(z), cover.deriv(z)


def exp_cover(height: float) -> CoveringMap:
    """zeta -> e^{i zeta}, the strip of the given height onto the annulus
    with inner radius e^{-height}."""
    return CoveringMap(
        fun=lambda z: np.exp(1j * _as_array(z)),
        deriv=lambda z: 1j * np.exp(1j * _as_array(z)),
        source=Strip(height),
        target=Annulus(float(np.exp(-height))),
        label=f"exp_cover(R={height:g})",
    )


def translation_deck(step: float = 3.0) -> CoveringMap:
    """Generator z -> z + step of the cyclic deck group."""
    return CoveringMap(
        fun=lambda z: _as_array(z) + step,
        deriv=lambda z: np.ones_like(_as_array(z)),
        source=PlaneMinusIntegers(),
        target=PlaneMinusIntegers(),
        label=f"translation(step={step:g})",
    )


# ---------------------------------------------------------------------------
# cell decomposition


@dataclass(frozen=True)
class CellDecomposition:
    """Decomposition of the integer-punctured plane into deck translates of
    the base cell 0 < Re z <= step."""

    step: float = 3.0
    plane: PlaneMinusIntegers = field(default_factory=PlaneMinusIntegers)

    def cell(self, n: int) -> Cell:
        return Cell(self.step, n)

    def cell_index(self, z) -> np.ndarray:
        """Index n with z in cell n; the right edge belongs to its cell."""
        z = _as_array(z)
        return np.asarray(np.ceil(z.real / self.step) - 1, dtype=int)

    def deck(self) -> CoveringMap:
        return translation_deck(self.step)

    def translate(self, z, n: int) -> np.ndarray:
        return _as_array(z) + n * self.step

    def union_contains(self, z, n: int) -> np.ndarray:
        """Membership in D_n, the union of cells 0..n."""
        z = _as_array(z)
        idx = self.cell_index(z)
        return (idx >= 0) & (idx <= n) & self.plane.contains(z)
