"""Stochastic gradient oracles with deterministic, counter-based seeding.

Each draw is generated from a Philox stream keyed by (experiment seed,
replication index) with the iteration index placed in the high bits of the
counter, so identical (seed, replication, iteration) triples give
bit-identical draws regardless of execution order.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .problem import Objective


@dataclass(frozen=True)
class Exact:
    kind = "exact"


@dataclass(frozen=True)
class Gaussian:
    """g = G + sigma * z with z a standard normal vector."""

    sigma: float
    kind = "gaussian"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class BoundedUniform:
    """g = G + u with u uniform in the ball of the given radius."""

    radius: float
    kind = "bounded_uniform"

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class AffineGaussian:
    """Gaussian noise with total variance kappa1 + kappa2 * ||G||^2."""

    kappa1: float
    kappa2: float
    kind = "affine_gaussian"

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("kappa1 and kappa2 must be >= 0")


@dataclass(frozen=True)
class ConstantBias:
    """Inner draw shifted by a fixed bias vector (a biased oracle)."""

    bias: np.ndarray
    inner: "NoiseModel"
    kind = "constant_bias"

    def __post_init__(self):
        object.__setattr__(
            self, "bias", np.ascontiguousarray(self.bias, dtype=np.float64)
        )


@dataclass(frozen=True)
class RelativeBias:
    """Inner draw shifted by rho * G: bias proportional to the true gradient."""

    rho: float
    inner: "NoiseModel"
    kind = "relative_bias"


@dataclass(frozen=True)
class Subsample:
    """Mean gradient over a uniformly sampled batch of a finite sum."""

    batch_size: int
    kind = "subsample"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


NoiseModel = (
    Exact | Gaussian | BoundedUniform | AffineGaussian | ConstantBias
    | RelativeBias | Subsample
)


@dataclass(frozen=True)
class OracleDraw:
    g: np.ndarray
    g_true: Optional[np.ndarray]
    err_norm: float


class OracleStream:
    """Per-replication RNG factory with counter-based iteration streams."""

    def __init__(self, base_seed: int, replication: int):
        self.base_seed = int(base_seed)
        self.replication = int(replication)
        self._key = np.random.SeedSequence(
            (self.base_seed, self.replication)
        ).generate_state(2, np.uint64)
        self._shared_bg = np.random.Philox(counter=0, key=self._key)
        self._shared_gen = np.random.Generator(self._shared_bg)
        self._state = self._shared_bg.state

    def rng(self, iteration: int) -> np.random.Generator:
        # Iteration index in the high 128 bits: streams of different
        # iterations can never overlap.
        return np.random.Generator(
            np.random.Philox(counter=int(iteration) << 128, key=self._key)
        )

    def rng_shared(self, iteration: int) -> np.random.Generator:
        """Bit-identical to ``rng(iteration)`` but reuses one generator.

        Much cheaper in tight loops; the returned generator is invalidated
        by the next ``rng_shared`` call on the same stream.
        """
        counter = self._state["state"]["counter"]
        counter[0] = 0
        counter[1] = 0
        counter[2] = iteration & 0xFFFFFFFFFFFFFFFF
        counter[3] = iteration >> 64
        self._state["buffer_pos"] = 4
        self._shared_bg.state = self._state
        return self._shared_gen


def _needs_true_gradient(model) -> bool:
    if isinstance(model, (ConstantBias, RelativeBias)):
        return isinstance(model, RelativeBias) or _needs_true_gradient(model.inner)
    return not isinstance(model, Subsample)


def _sample(obj, x, model, rng, g_true):
    if isinstance(model, Exact):
        return g_true.copy()
    if isinstance(model, Gaussian):
        return g_true + model.sigma * rng.standard_normal(x.shape[0])
    if isinstance(model, BoundedUniform):
        n = x.shape[0]
        z = rng.standard_normal(n)
        nz = np.linalg.norm(z)
        u = rng.random() ** (1.0 / n)
        if nz == 0.0:
            return g_true.copy()
        return g_true + model.radius * u * z / nz
    if isinstance(model, AffineGaussian):
        n = x.shape[0]
        total = model.kappa1 + model.kappa2 * float(g_true @ g_true)
        return g_true + math.sqrt(total / n) * rng.standard_normal(n)
    if isinstance(model, ConstantBias):
        if model.bias.shape != x.shape:
            raise ValueError(
                f"bias dimension {model.bias.shape} does not match x {x.shape}"
            )
        return _sample(obj, x, model.inner, rng, g_true) + model.bias
    if isinstance(model, RelativeBias):
        return _sample(obj, x, model.inner, rng, g_true) + model.rho * g_true
    if isinstance(model, Subsample):
        idx = rng.choice(obj.num_terms, size=model.batch_size, replace=False)
        return obj.term_grad(x, idx)
    raise TypeError(f"unknown noise model {model!r}")


def validate_model(model, obj: Objective) -> None:
    """Raise ConfigurationError if the model cannot be used with the objective."""
    if isinstance(model, Subsample):
        if obj.num_terms is None or obj.term_grad is None:
            raise ConfigurationError(
                "subsample oracle requires a finite-sum objective"
            )
        if model.batch_size > obj.num_terms:
            raise ConfigurationError(
                f"batch_size {model.batch_size} exceeds {obj.num_terms} terms"
            )
    if isinstance(model, (ConstantBias, RelativeBias)):
        validate_model(model.inner, obj)


def draw(obj: Objective, x, model, rng: np.random.Generator,
         with_true: bool = True) -> OracleDraw:
    """Draw one gradient estimate g(x, xi) according to the noise model.

    ``with_true=False`` skips the true-gradient diagnostic when the model
    itself does not need G (only possible for pure subsampling).
    """
    x = np.asarray(x, dtype=np.float64)
    validate_model(model, obj)
    need_true = with_true or _needs_true_gradient(model)
    g_true = obj.grad(x) if need_true else None
    g = _sample(obj, x, model, rng, g_true)
    if with_true:
        e = g - g_true
        err = math.sqrt(float(e @ e))
        return OracleDraw(g, g_true, err)
    return OracleDraw(g, None, math.nan)


def empirical_rmse(obj: Objective, x, model, draws: int, seed: int) -> float:
    """sqrt(mean ||g - G||^2) over independent draws at a fixed point."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    validate_model(model, obj)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x535E)))
    g_true = obj.grad(x)
    n = x.shape[0]
    # Vectorized fast paths for the plain Gaussian families.
    if isinstance(model, Gaussian):
        errs = model.sigma * rng.standard_normal((draws, n))
        return float(np.sqrt(np.mean(np.sum(errs * errs, axis=1))))
    if isinstance(model, AffineGaussian):
        total = model.kappa1 + model.kappa2 * float(g_true @ g_true)
        errs = math.sqrt(total / n) * rng.standard_normal((draws, n))
        return float(np.sqrt(np.mean(np.sum(errs * errs, axis=1))))
    acc = 0.0
    for _ in range(draws):
        g = _sample(obj, x, model, rng, g_true)
        diff = g - g_true
        acc += float(diff @ diff)
    return math.sqrt(acc / draws)
