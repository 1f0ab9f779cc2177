"""
vche2d Field Models

Periodic collocation grid and the scalar/vector fields living on it.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np

from ..utils.exceptions import FieldError, GridError


class Frame(Enum):
    """Coordinate frame a field is expressed in."""
    PHYSICAL = 0
    SCALED = 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-H, H)^2.

    Arrays on the grid are indexed ``[j2, j1]`` (x2 outer, x1 inner).
    """
    n_points: int
    half_width: float

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise GridError("n_points must be an integer", {"n_points": n})
        if n < 16 or (n & (n - 1)) != 0:
            raise GridError("n_points must be a power of two >= 16", {"n_points": n})
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise GridError("half_width must be positive", {"half_width": self.half_width})
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @cached_property
    def points(self) -> np.ndarray:
        """Collocation points x_j = -H + j*spacing along one axis."""
        return -self.half_width + self.spacing * np.arange(self.n_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order; integer multiples of pi/H."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @cached_property
    def odd_wavenumbers(self) -> np.ndarray:
        """Wavenumbers for odd-order derivatives, Nyquist mode zeroed."""
        k = self.wavenumbers.copy()
        k[self.n_points // 2] = 0.0
        return k

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays (X1, X2)."""
        return tuple(np.meshgrid(self.points, self.points, indexing="xy"))

    @cached_property
    def radius_squared(self) -> np.ndarray:
        x1, x2 = self.mesh
        return x1 ** 2 + x2 ** 2

    @cached_property
    def k_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Odd-derivative wavenumber arrays (K1, K2) in spectral layout."""
        return tuple(np.meshgrid(self.odd_wavenumbers, self.odd_wavenumbers, indexing="xy"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|^2 with the full (even-derivative) wavenumbers."""
        k1, k2 = np.meshgrid(self.wavenumbers, self.wavenumbers, indexing="xy")
        return k1 ** 2 + k2 ** 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True for modes kept by the 2/3 rule."""
        index = np.abs(np.fft.fftfreq(self.n_points) * self.n_points)
        keep = index <= self.n_points // 3
        return np.outer(keep, keep)

    def contains(self, x: np.ndarray, margin: float = 0.0) -> bool:
        """Whether all coordinates lie in [-H + margin, H - spacing - margin]."""
        x = np.asarray(x)
        if x.size == 0:
            return True
        return bool(x.min() >= -self.half_width + margin - 1e-12
                    and x.max() <= self.half_width - self.spacing - margin + 1e-12)


@dataclass
class ScalarField:
    """Real field sampled on a grid, with a lazily cached spectrum.

    The cached spectrum is written on first access; callers sharing a field
    across threads should request it once before handing the field out.
    """
    grid: Grid
    values: np.ndarray
    frame: Frame = Frame.SCALED
    _spectrum: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if np.iscomplexobj(values):
            raise FieldError("ScalarField values must be real")
        expected = (self.grid.n_points, self.grid.n_points)
        if values.shape != expected:
            raise FieldError("Field shape does not match grid",
                             {"shape": values.shape, "expected": expected})
        self.values = np.ascontiguousarray(values, dtype=np.float64)

    @classmethod
    def zeros(cls, grid: Grid, frame: Frame = Frame.SCALED) -> "ScalarField":
        return cls(grid, np.zeros((grid.n_points, grid.n_points)), frame)

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum: np.ndarray,
                      frame: Frame = Frame.SCALED) -> "ScalarField":
        values = np.fft.ifft2(spectrum).real
        return cls(grid, values, frame)

    def spectrum(self) -> np.ndarray:
        """Unnormalized forward DFT of the values (numpy convention)."""
        if self._spectrum is None:
            self._spectrum = np.fft.fft2(self.values)
        return self._spectrum

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values, self.frame)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.frame)

    def check_compatible(self, other: "ScalarField") -> None:
        if other.grid != self.grid or other.frame != self.frame:
            raise FieldError("Fields live on different grids or frames",
                             {"left": (self.grid, self.frame.name),
                              "right": (other.grid, other.frame.name)})

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self.check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self.check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: Union[int, float]) -> "ScalarField":
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self.with_values(-self.values)


@dataclass
class VectorField:
    """Pair of scalar components on a shared grid and frame."""
    u1: ScalarField
    u2: ScalarField

    def __post_init__(self):
        self.u1.check_compatible(self.u2)

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def frame(self) -> Frame:
        return self.u1.frame

    @classmethod
    def zeros(cls, grid: Grid, frame: Frame = Frame.SCALED) -> "VectorField":
        return cls(ScalarField.zeros(grid, frame), ScalarField.zeros(grid, frame))

    def components(self) -> Tuple[ScalarField, ScalarField]:
        return self.u1, self.u2

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u1.values, self.u2.values)

    def max_speed(self) -> float:
        return float(np.max(self.magnitude()))

    def dot(self, other: "VectorField") -> ScalarField:
        """Pointwise inner product."""
        return self.u1.with_values(self.u1.values * other.u1.values
                                   + self.u2.values * other.u2.values)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, scalar: Union[int, float]) -> "VectorField":
        return VectorField(self.u1 * scalar, self.u2 * scalar)

    __rmul__ = __mul__
