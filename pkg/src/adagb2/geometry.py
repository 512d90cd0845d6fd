"""Bound boxes and the component-wise projections used by the solver.

The feasible set is a hyper-rectangle ``{x : l <= x <= u}`` where entries
of ``l`` / ``u`` may be ``-inf`` / ``+inf``.  Both projections are exact
component-wise clamps, NaN-free for infinite bounds, idempotent and
nonexpansive.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels


def _as_vector(v, name):
    a = np.ascontiguousarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class BoundBox:
    """Lower/upper bound vectors defining the feasible hyper-rectangle.

    Equal lower and upper entries (fixed variables) are legal; the box only
    has to be nonempty.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_vector(self.lower, "lower")
        upper = _as_vector(self.upper, "upper")
        if lower.shape != upper.shape:
            raise ValueError(
                f"bound dimension mismatch: {lower.shape} vs {upper.shape}"
            )
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ValueError("bounds must not contain NaN")
        if not (lower <= upper).all():
            bad = int(np.argmax(lower > upper))
            raise ValueError(
                f"empty box: lower[{bad}]={lower[bad]} > upper[{bad}]={upper[bad]}"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @classmethod
    def unbounded(cls, n: int) -> "BoundBox":
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @property
    def is_unbounded(self) -> bool:
        return bool(np.isinf(self.lower).all() and np.isinf(self.upper).all())

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool((x >= self.lower - tol).all() and (x <= self.upper + tol).all())


def project_box(y, box: BoundBox) -> np.ndarray:
    """Project ``y`` onto the box: z_i = max(l_i, min(y_i, u_i))."""
    y = _as_vector(y, "y")
    if y.shape[0] != box.n:
        raise ValueError(f"dimension mismatch: y has {y.shape[0]}, box has {box.n}")
    out = np.empty_like(y)
    _kernels.project_box(y, box.lower, box.upper, out)
    return out


def project_box_cap_trust(y, box: BoundBox, center, radii) -> np.ndarray:
    """Project ``y`` onto the intersection of the box with a trust box.

    The trust box is ``{x : |x_i - center_i| <= radii_i}``; the result is
    z_i = max(l_i, center_i - radii_i, min(y_i, center_i + radii_i, u_i)).
    """
    y = _as_vector(y, "y")
    center = _as_vector(center, "center")
    radii = _as_vector(radii, "radii")
    if not (y.shape[0] == box.n == center.shape[0] == radii.shape[0]):
        raise ValueError(
            "dimension mismatch: "
            f"y={y.shape[0]}, box={box.n}, center={center.shape[0]}, "
            f"radii={radii.shape[0]}"
        )
    if (radii < 0).any():
        bad = int(np.argmax(radii < 0))
        raise ValueError(f"negative trust radius: radii[{bad}]={radii[bad]}")
    out = np.empty_like(y)
    _kernels.project_box_cap_trust(y, box.lower, box.upper, center, radii, out)
    return out
