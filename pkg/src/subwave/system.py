"""Finite arrays of Helmholtz resonators under a half space.

Each resonator is a cylindrical cavity D = S(0, 1) x [-h, 0] of volume
|D| = pi h coupled to the upper half space through a small aperture
eps Lambda centred at z^(j) = (z1, z2, 0) in the interface plane.  The
quasi-static regime requires frequencies in the window |k| <= k1 / 2,
where

    k1 = min(j'_{1,1}, pi / h)

is the first nonzero Neumann eigenvalue scale of the cavity cross
section (j'_{1,1} is the first positive zero of J_1').

The leading interaction between distinct resonators is captured by the
symmetric matrix

    T_ij = 1 / (2 pi |z^(i) - z^(j)|),   T_ii = 0,

and radiative coupling by

    S = Re(alpha_1) Id + (i / (2 pi)) ones,

whose imaginary part is the rank-one all-ones matrix scaled by
1 / (2 pi).  The matched-asymptotics constants alpha_0 (real) and
alpha_1 enter as free parameters; the imaginary part of alpha_1 is
pinned to 1 / (2 pi) by energy conservation, so only Re(alpha_1) is
configurable.  Eigenpairs (beta_j, Y_j) of T drive the mode splitting;
T is traceless, so the beta_j sum to zero, and
Y_j . Im(S) Y_j = (sum_i Y_ji)^2 / (2 pi) >= 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import jnp_zeros

__all__ = [
    "ResonatorSystem",
    "SpectralData",
    "ParameterError",
    "EigenvalueGapWarning",
    "EPS_MAX_DEFAULT",
    "GAP_THRESHOLD_FACTOR",
    "build_system",
    "interaction_matrices",
    "neumann_k1",
    "spectral_record",
]

#: Largest aperture scale accepted by default; beyond this the
#: asymptotic error terms are no longer small.
EPS_MAX_DEFAULT = 5e-2

#: Relative eigenvalue-gap threshold (times max |beta|) below which the
#: spectrum is treated as degenerate.
GAP_THRESHOLD_FACTOR = 1e-6

#: First positive zero of J_1'.
_J1P_FIRST_ZERO = float(jnp_zeros(1, 1)[0])


class ParameterError(ValueError):
    """Invalid resonator-system parameters."""


class EigenvalueGapWarning(UserWarning):
    """Interaction eigenvalues closer than the degeneracy threshold."""


@dataclass(frozen=True)
class ResonatorSystem:
    """Validated parameters of a resonator array.

    centers has shape (M, 3) with third component zero; epsilon is the
    common aperture scale; height the common cavity depth h.
    """

    height: float
    epsilon: float
    centers: np.ndarray
    alpha0: float = 0.0
    re_alpha1: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "centers", np.asarray(self.centers, dtype=float)
        )

    @property
    def n_resonators(self) -> int:
        return self.centers.shape[0]

    @property
    def cavity_volume(self) -> float:
        """|D| = pi h for the unit-radius cylindrical cavity."""
        return math.pi * self.height

    @property
    def alpha1(self) -> complex:
        """Radiation constant with Im alpha_1 = 1 / (2 pi) pinned."""
        return complex(self.re_alpha1, 1.0 / (2.0 * math.pi))


@dataclass(frozen=True)
class SpectralData:
    """Interaction matrices of an array and the eigendata of T.

    Columns of ``modes`` are the orthonormal eigenvectors Y_j of the
    coupling matrix, ordered by ascending eigenvalue beta_j, each with
    its largest-magnitude entry made positive; ``degenerate`` records
    whether the smallest eigenvalue gap fell below the threshold.
    """

    coupling: np.ndarray
    radiation: np.ndarray
    betas: np.ndarray
    modes: np.ndarray
    degenerate: bool


def build_system(
    height: float,
    epsilon: float,
    centers: Sequence[Sequence[float]],
    alpha0: float = 0.0,
    re_alpha1: float = 0.0,
    eps_max: float = EPS_MAX_DEFAULT,
) -> ResonatorSystem:
    """Validate parameters and build a resonator system.

    centers may be given as (z1, z2) pairs or (z1, z2, 0) triples;
    they must be pairwise distinct with separation larger than the
    aperture diameter 2 eps.
    """
    if height <= 0.0:
        raise ParameterError("cavity height must be positive")
    if not 0.0 < epsilon <= eps_max:
        raise ParameterError(
            f"epsilon must lie in (0, {eps_max:g}], got {epsilon:g}"
        )
    pts = np.asarray(centers, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] not in (2, 3):
        raise ParameterError("centers must be a list of 2D or 3D points")
    if pts.shape[1] == 3:
        if np.any(pts[:, 2] != 0.0):
            raise ParameterError("centers must lie in the interface plane x3 = 0")
        pts = pts[:, :2]
    full = np.column_stack([pts, np.zeros(pts.shape[0])])
    m = full.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            d = float(np.linalg.norm(full[i] - full[j]))
            if d <= 2.0 * epsilon:
                raise ParameterError(
                    f"centers {i} and {j} are {d:g} apart, closer than the "
                    f"aperture diameter {2.0 * epsilon:g}"
                )
    return ResonatorSystem(
        height=float(height),
        epsilon=float(epsilon),
        centers=full,
        alpha0=float(alpha0),
        re_alpha1=float(re_alpha1),
    )


def interaction_matrices(system: ResonatorSystem) -> SpectralData:
    """Coupling and radiation matrices with the eigendata of T.

    T_ij = 1 / (2 pi |z_i - z_j|) off the diagonal and zero on it;
    S = Re(alpha_1) Id + i/(2 pi) ones.  Eigenvalues that are closer
    than GAP_THRESHOLD_FACTOR * max |beta| trigger an
    EigenvalueGapWarning and mark the data degenerate.
    """
    z = system.centers
    m = system.n_resonators
    coupling = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            coupling[i, j] = coupling[j, i] = 1.0 / (
                2.0 * math.pi * float(np.linalg.norm(z[i] - z[j]))
            )
    radiation = system.re_alpha1 * np.eye(m) + (1j / (2.0 * math.pi)) * np.ones(
        (m, m)
    )
    betas, modes = np.linalg.eigh(coupling)
    # Fix signs: largest-magnitude entry of each eigenvector positive.
    for j in range(m):
        pivot = np.argmax(np.abs(modes[:, j]))
        if modes[pivot, j] < 0.0:
            modes[:, j] = -modes[:, j]
    degenerate = False
    if m > 1:
        gap = float(np.diff(betas).min())
        threshold = GAP_THRESHOLD_FACTOR * float(np.abs(betas).max())
        if gap < threshold:
            degenerate = True
            warnings.warn(
                f"smallest eigenvalue gap {gap:g} below threshold {threshold:g}",
                EigenvalueGapWarning,
                stacklevel=2,
            )
    return SpectralData(
        coupling=coupling,
        radiation=radiation,
        betas=betas,
        modes=modes,
        degenerate=degenerate,
    )


def neumann_k1(height: float) -> float:
    """Quasi-static window scale k1 = min(j'_{1,1}, pi / h)."""
    if height <= 0.0:
        raise ParameterError("cavity height must be positive")
    return min(_J1P_FIRST_ZERO, math.pi / height)


def spectral_record(system: ResonatorSystem, data: SpectralData) -> dict:
    """JSON-ready record of the interaction eigendata."""
    return {
        "n_resonators": system.n_resonators,
        "height": system.height,
        "epsilon": system.epsilon,
        "alpha0": system.alpha0,
        "re_alpha1": system.re_alpha1,
        "betas": data.betas.tolist(),
        "modes": data.modes.tolist(),
        "degenerate": data.degenerate,
        "k1": neumann_k1(system.height),
    }
