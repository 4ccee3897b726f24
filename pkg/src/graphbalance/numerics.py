"""Special functions, dense linear algebra, and deterministic randomness.

Probability tails are evaluated through the regularized incomplete gamma and
beta functions; linear systems fall back from Cholesky to a tolerance-based
pseudo-inverse; all Monte-Carlo procedures draw from counter-based
(Philox) generators addressed by a ``(seed, stream path)`` pair so that every
result is reproducible and derived streams never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

from .errors import ValidationError

__all__ = [
    "RandomStream",
    "std_normal_cdf",
    "chi_square_sf",
    "f_sf",
    "solve_spd_or_pinv",
    "gaussian_vector",
    "mvn_extremum_sf",
]

_MASK64 = (1 << 64) - 1


@dataclass
class RandomStream:
    """Deterministic, splittable source of randomness.

    A stream is addressed by a 64-bit ``seed`` and a 64-bit ``stream_id``;
    the same pair always reproduces the same draws.  :meth:`derive` creates
    sub-streams that are non-overlapping by construction (the underlying
    counter-based generator is keyed by the full derivation path).

    Attributes
    ----------
    seed : int
        Root entropy, reduced modulo 2**64.
    stream_id : int
        Identifier of this stream among its siblings, reduced modulo 2**64.
    """

    seed: int
    stream_id: int = 0
    _ancestors: tuple[int, ...] = field(default=(), repr=False)
    _generator: np.random.Generator | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        self.seed = int(self.seed) & _MASK64
        self.stream_id = int(self.stream_id) & _MASK64
        self._ancestors = tuple(int(a) & _MASK64 for a in self._ancestors)

    @property
    def spawn_path(self) -> tuple[int, ...]:
        """Full derivation path of this stream, ending in ``stream_id``."""
        return self._ancestors + (self.stream_id,)

    @property
    def generator(self) -> np.random.Generator:
        """The owned numpy generator; created lazily, advances across calls."""
        if self._generator is None:
            seq = np.random.SeedSequence(
                entropy=self.seed, spawn_key=self.spawn_path
            )
            self._generator = np.random.Generator(np.random.Philox(seq))
        return self._generator

    def reset(self) -> "RandomStream":
        """Discard generator state so the stream replays from the beginning."""
        self._generator = None
        return self

    def derive(self, stream_id: int) -> "RandomStream":
        """Create an independent child stream keyed by ``stream_id``."""
        return RandomStream(
            self.seed, stream_id, _ancestors=self.spawn_path
        )


def std_normal_cdf(x: float | np.ndarray) -> float | np.ndarray:
    """Standard normal CDF ``Phi(x)``, absolute error below 1e-12."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValidationError("std_normal_cdf requires finite input")
    out = _special.ndtr(x)
    return float(out) if out.ndim == 0 else out


def chi_square_sf(t: float, nu: int) -> float:
    """Upper tail ``P(chi^2_nu >= t)`` via the regularized incomplete gamma.

    Parameters
    ----------
    t : float
        Threshold, ``t >= 0``.
    nu : int
        Degrees of freedom, positive integer.
    """
    if nu < 1 or int(nu) != nu:
        raise ValidationError(f"degrees of freedom must be a positive integer, got {nu}")
    if not np.isfinite(t) or t < 0:
        raise ValidationError(f"chi_square_sf requires t >= 0, got {t}")
    return float(_special.gammaincc(nu / 2.0, t / 2.0))


def f_sf(t: float, d1: int, d2: int) -> float:
    """Upper tail of the F(d1, d2) distribution via the incomplete beta.

    ``P(F >= t) = I_{d2/(d2 + d1 t)}(d2/2, d1/2)``.
    """
    if d1 < 1 or d2 < 1 or int(d1) != d1 or int(d2) != d2:
        raise ValidationError("F degrees of freedom must be positive integers")
    if not np.isfinite(t) or t < 0:
        raise ValidationError(f"f_sf requires t >= 0, got {t}")
    if t == 0.0:
        return 1.0
    x = d2 / (d2 + d1 * t)
    return float(_special.betainc(d2 / 2.0, d1 / 2.0, x))


def solve_spd_or_pinv(
    A: np.ndarray, b: np.ndarray, tol: float = 1e-10
) -> tuple[np.ndarray, int]:
    """Solve ``A x = b`` for symmetric ``A``, tolerating rank deficiency.

    If ``A`` is positive definite (Cholesky succeeds) the exact solve is
    returned with full rank.  Otherwise the minimum-norm least-squares
    solution is built from an eigendecomposition in which eigenvalues below
    ``tol * max(eigenvalue)`` are treated as zero.

    Parameters
    ----------
    A : ndarray, shape (G, G)
        Symmetric matrix (checked to within ``tol`` relative).
    b : ndarray, shape (G,)
        Right-hand side.
    tol : float
        Relative eigenvalue cutoff and symmetry tolerance.

    Returns
    -------
    x : ndarray, shape (G,)
        Solution vector.
    rank : int
        ``G`` on the Cholesky path, else the number of retained eigenvalues.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("A must be square")
    if b.shape != (A.shape[0],):
        raise ValidationError("b length must match A")
    scale = max(1.0, float(np.abs(A).max()) if A.size else 1.0)
    if np.abs(A - A.T).max(initial=0.0) > tol * scale:
        raise ValidationError("A is asymmetric beyond tolerance")
    A = 0.5 * (A + A.T)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    else:
        y = np.linalg.solve(L, b)
        x = np.linalg.solve(L.T, y)
        return x, A.shape[0]
    eigenvalues, vectors = np.linalg.eigh(A)
    cutoff = tol * max(float(eigenvalues.max(initial=0.0)), 0.0)
    keep = eigenvalues > cutoff
    rank = int(np.count_nonzero(keep))
    inv = np.zeros_like(eigenvalues)
    inv[keep] = 1.0 / eigenvalues[keep]
    x = vectors @ (inv * (vectors.T @ b))
    return x, rank


def gaussian_vector(
    rng: RandomStream, mean: np.ndarray, chol_lower: np.ndarray
) -> np.ndarray:
    """Draw ``mean + L z`` with ``z`` i.i.d. standard normal from ``rng``."""
    mean = np.asarray(mean, dtype=np.float64)
    L = np.asarray(chol_lower, dtype=np.float64)
    if mean.ndim != 1:
        raise ValidationError("mean must be a vector")
    if L.shape != (mean.shape[0], mean.shape[0]):
        raise ValidationError("chol_lower shape must match mean length")
    if np.any(np.triu(L, k=1) != 0):
        raise ValidationError("chol_lower must be lower-triangular")
    z = rng.generator.standard_normal(mean.shape[0])
    return mean + L @ z


def _correlation_factor(Omega: np.ndarray) -> np.ndarray:
    """Factor a correlation matrix for sampling, clipping tiny negatives."""
    try:
        return np.linalg.cholesky(Omega)
    except np.linalg.LinAlgError:
        eigenvalues, vectors = np.linalg.eigh(Omega)
        clipped = np.clip(eigenvalues, 0.0, None)
        return vectors * np.sqrt(clipped)


def mvn_extremum_sf(
    t: float,
    Omega: np.ndarray,
    direction: str,
    n_mc: int = 100_000,
    rng: RandomStream | np.random.Generator | None = None,
) -> tuple[float, float]:
    """Monte-Carlo tail probability of the max or min of ``N(0, Omega)``.

    Estimates ``P(max_g V_g >= t)`` (``direction="max"``) or
    ``P(min_g V_g <= t)`` (``direction="min"``) for ``V ~ N(0, Omega)`` by the
    empirical proportion over ``n_mc`` draws; near-singular ``Omega`` is
    factorized with eigenvalue clipping at zero.

    Returns
    -------
    p : float
        Empirical tail probability.
    mc_se : float
        Binomial standard error ``sqrt(p (1 - p) / n_mc)``.
    """
    Omega = np.asarray(Omega, dtype=np.float64)
    if Omega.ndim != 2 or Omega.shape[0] != Omega.shape[1]:
        raise ValidationError("Omega must be square")
    if np.abs(np.diagonal(Omega) - 1.0).max() > 1e-8:
        raise ValidationError("Omega must have unit diagonal")
    if np.abs(Omega - Omega.T).max() > 1e-8:
        raise ValidationError("Omega must be symmetric")
    if direction not in ("max", "min"):
        raise ValidationError(f"direction must be 'max' or 'min', got {direction!r}")
    if n_mc < 1000:
        raise ValidationError(f"n_mc must be at least 1000, got {n_mc}")
    if rng is None:
        rng = RandomStream(0)
    factor = _correlation_factor(0.5 * (Omega + Omega.T))
    generator = rng.generator if isinstance(rng, RandomStream) else rng
    dim = Omega.shape[0]
    block = 1 << 18
    hits = 0
    remaining = n_mc
    while remaining > 0:
        rows = min(block, remaining)
        draws = generator.standard_normal((rows, dim)) @ factor.T
        if direction == "max":
            hits += int(np.count_nonzero(draws.max(axis=1) >= t))
        else:
            hits += int(np.count_nonzero(draws.min(axis=1) <= t))
        remaining -= rows
    p = hits / n_mc
    mc_se = float(np.sqrt(p * (1.0 - p) / n_mc))
    return p, mc_se
