"""Half-space Green function perturbed by a resonator array.

The unperturbed exterior Green function of the half space with sound
hard interface is, for a source y on the interface plane,

    G^ex(x, y, k) = e^{ik|x-y|} / (2 pi |x-y|),

the static kernel 1/(2 pi |x-y|) times the outgoing phase (the image
source coincides with y, doubling the free-space 1/(4 pi) kernel).
The same closed form is used for all point pairs here, matching the
convention of the resolution estimates built on it.

Around the 2M resonances the perturbed Green function decomposes into
four parts,

    G_eps = g1 + g2 + g3 + g4,
    g1 = G^ex(x, x0, k),
    g2 = -eps c sum_j G^ex(z_j, x0, k) G^ex(x, z_j, k),
    g3 = -sum_j [ (k - k_j,2)^-1 - (k - k_j,1)^-1 ]
             (c eps)^(3/2) |D|^(-1/2) zeta_j(x, x0, k),
    g4 = modeled residual Lorentzians (default amplitude zero),

with zeta_j(x, x0, k) = (G(x,k) . Y_j)(Y_j . G(x0,k)) built from the
Green vector G(x, k)_j = G^ex(x, z_j, k).  The residual part g4 stands
in for the O(eps^2)-amplitude remainder, which is not computable from
the expansion itself; its amplitudes are configurable for robustness
studies.  zeta in g3 is evaluated at the requested k by default, with
an option to freeze it at k = 0 as the resolution analysis does.

At the resonant frequency k = tau_1 sqrt(eps) the imaginary part
collapses to the two-term fixed-frequency estimate

    Im G_eps = sin(k |x-x0|) / (2 pi |x-x0|)
               + (c^(3/2) / |D|^(1/2)) eps^(1/2)
                 sum_j (Im tau_4,j / tau_3,j^2) zeta_j(x, x0, 0) + O(eps),

which is degenerate when some tau_3,j = 0 (alpha_0 + beta_j = 0); that
mode is reported instead of evaluated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .aperture import DISK_CAPACITY
from .resonance import Resonance, resonances_asymptotic, tau_coefficients
from .system import ResonatorSystem, SpectralData, interaction_matrices

__all__ = [
    "GreenParts",
    "CoincidenceError",
    "DegenerateModeError",
    "NearPoleWarning",
    "gex",
    "green_vector",
    "zeta",
    "perturbed_green",
    "green_parts_curve",
    "im_green_fixed_frequency",
    "psf_scan_rows",
]

#: Point pairs closer than this raise a coincidence error.
COINCIDENCE_TOL = 1e-12


class CoincidenceError(ValueError):
    """Field point and source point coincide."""


class DegenerateModeError(ValueError):
    """A mode with alpha_0 + beta_j = 0 breaks the fixed-frequency formula."""

    def __init__(self, modes):
        self.modes = list(modes)
        super().__init__(
            "tau_3 vanishes for mode(s) %s (alpha_0 + beta_j = 0); the "
            "fixed-frequency estimate does not apply" % self.modes
        )


class NearPoleWarning(UserWarning):
    """Evaluation frequency within ten linewidths of a resonance."""


@dataclass(frozen=True)
class GreenParts:
    """Four constituents of the perturbed Green function at one point."""

    g1: complex
    g2: complex
    g3: complex
    g4: complex

    @property
    def total(self) -> complex:
        return self.g1 + self.g2 + self.g3 + self.g4


def _distance(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.linalg.norm(x - y))


def gex(x, y, k) -> complex:
    """Exterior Green function e^{ik r} / (2 pi r), r = |x - y|."""
    r = _distance(x, y)
    if r < COINCIDENCE_TOL:
        raise CoincidenceError(f"points coincide within {COINCIDENCE_TOL:g}")
    return complex(np.exp(1j * k * r) / (2.0 * math.pi * r))


def green_vector(x, k, system: ResonatorSystem) -> np.ndarray:
    """Vector of Green values from x to each aperture centre."""
    return np.array([gex(x, z, k) for z in system.centers])


def zeta(
    j: int,
    x,
    x0,
    k,
    spectral: SpectralData,
    system: ResonatorSystem,
) -> complex:
    """Rank-one quadratic form (G(x,k) . Y_j)(Y_j . G(x0,k))."""
    y = spectral.modes[:, j]
    return complex(
        (green_vector(x, k, system) @ y) * (y @ green_vector(x0, k, system))
    )


def _resonance_table(resonances: Sequence[Resonance]) -> dict:
    table = {}
    for r in resonances:
        table[(r.mode, r.branch)] = r.value
    return table


def green_parts_curve(
    x,
    x0,
    k,
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    resonances: Optional[Sequence[Resonance]] = None,
    capacity: float = DISK_CAPACITY,
    zeta_at: str = "k",
    residual: Optional[np.ndarray] = None,
    warn: bool = True,
):
    """Vectorised four-part Green decomposition over an array of real k.

    Returns four complex arrays (g1, g2, g3, g4) of the same shape as
    ``k``.  ``zeta_at`` selects whether zeta_j in g3 follows the
    requested k ("k") or stays frozen at zero frequency ("zero").
    ``residual`` is an (M, 2) complex array of Lorentzian amplitudes
    C_{j, branch} for g4; omitted means zero.
    """
    if spectral is None:
        spectral = interaction_matrices(system)
    if resonances is None:
        resonances = resonances_asymptotic(system, spectral, capacity)
    if zeta_at not in ("k", "zero"):
        raise ValueError("zeta_at must be 'k' or 'zero'")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    table = _resonance_table(resonances)
    m = system.n_resonators
    eps = system.epsilon

    r = _distance(x, x0)
    if r < COINCIDENCE_TOL:
        raise CoincidenceError(f"points coincide within {COINCIDENCE_TOL:g}")
    a = np.array([_distance(z, x0) for z in system.centers])
    b = np.array([_distance(x, z) for z in system.centers])
    if np.any(a < COINCIDENCE_TOL) or np.any(b < COINCIDENCE_TOL):
        raise CoincidenceError("evaluation point coincides with a centre")

    if warn:
        for (mode, branch), val in table.items():
            width = abs(val.imag)
            if width > 0.0 and np.any(np.abs(k - val.real) < 10.0 * width):
                warnings.warn(
                    f"frequency within 10 linewidths of resonance "
                    f"(mode {mode}, branch {branch})",
                    NearPoleWarning,
                    stacklevel=2,
                )
                break

    g1 = np.exp(1j * np.multiply.outer(k, r)).ravel() / (2.0 * math.pi * r)
    # g2: -eps c sum_j G(z_j, x0) G(x, z_j).
    phase = np.exp(1j * np.multiply.outer(k, a + b))
    g2 = -eps * capacity * (
        phase / (4.0 * math.pi**2 * a[None, :] * b[None, :])
    ).sum(axis=1)

    # zeta_j over the curve: products of projected Green vectors.
    gx = np.exp(1j * np.multiply.outer(k, b)) / (2.0 * math.pi * b[None, :])
    gx0 = np.exp(1j * np.multiply.outer(k, a)) / (2.0 * math.pi * a[None, :])
    proj_x = gx @ spectral.modes
    proj_x0 = gx0 @ spectral.modes
    if zeta_at == "zero":
        zx = (1.0 / (2.0 * math.pi * b)) @ spectral.modes
        zx0 = (1.0 / (2.0 * math.pi * a)) @ spectral.modes
        zetas = np.broadcast_to(zx * zx0, (k.size, m)).astype(complex)
    else:
        zetas = proj_x * proj_x0

    coeff = (capacity * eps) ** 1.5 / math.sqrt(system.cavity_volume)
    g3 = np.zeros(k.size, dtype=complex)
    g4 = np.zeros(k.size, dtype=complex)
    for j in range(m):
        k1 = table[(j, 1)]
        k2 = table[(j, 2)]
        g3 -= coeff * zetas[:, j] * (1.0 / (k - k2) - 1.0 / (k - k1))
        if residual is not None:
            g4 += residual[j, 0] / (k - k1) + residual[j, 1] / (k - k2)
    return g1, g2, g3, g4


def perturbed_green(
    x,
    x0,
    k: float,
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    resonances: Optional[Sequence[Resonance]] = None,
    capacity: float = DISK_CAPACITY,
    zeta_at: str = "k",
    residual: Optional[np.ndarray] = None,
    warn: bool = True,
) -> GreenParts:
    """Four-part perturbed Green function at one real frequency."""
    g1, g2, g3, g4 = green_parts_curve(
        x,
        x0,
        [float(k)],
        system,
        spectral,
        resonances,
        capacity,
        zeta_at,
        residual,
        warn,
    )
    return GreenParts(
        g1=complex(g1[0]), g2=complex(g2[0]), g3=complex(g3[0]), g4=complex(g4[0])
    )


def im_green_fixed_frequency(
    x,
    x0,
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    capacity: float = DISK_CAPACITY,
) -> float:
    """Two-term fixed-frequency estimate of Im G_eps at k = tau_1 sqrt(eps).

    Raises DegenerateModeError when tau_3 vanishes for some mode,
    reporting the offending mode indices.
    """
    if spectral is None:
        spectral = interaction_matrices(system)
    tau = tau_coefficients(system, spectral, capacity)
    bad = [j for j in range(system.n_resonators) if tau.tau3[j] == 0.0]
    if bad:
        raise DegenerateModeError(bad)
    eps = system.epsilon
    k = tau.tau1 * math.sqrt(eps)
    r = _distance(x, x0)
    if r < COINCIDENCE_TOL:
        raise CoincidenceError(f"points coincide within {COINCIDENCE_TOL:g}")
    sinc_term = math.sin(k * r) / (2.0 * math.pi * r)
    amp = capacity**1.5 / math.sqrt(system.cavity_volume) * math.sqrt(eps)
    res_term = 0.0
    for j in range(system.n_resonators):
        zj = zeta(j, x, x0, 0.0, spectral, system).real
        res_term += (tau.tau4[j].imag / tau.tau3[j] ** 2) * zj
    return sinc_term + amp * res_term


def psf_scan_rows(
    points,
    x0,
    k: float,
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    resonances: Optional[Sequence[Resonance]] = None,
    capacity: float = DISK_CAPACITY,
    zeta_at: str = "k",
    residual: Optional[np.ndarray] = None,
) -> List[list]:
    """CSV rows of a PSF scan: coordinates, Im total, then g1..g4 re/im."""
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearPoleWarning)
        for p in points:
            parts = perturbed_green(
                p, x0, k, system, spectral, resonances, capacity, zeta_at, residual
            )
            total = parts.total
            rows.append(
                [
                    p[0], p[1], p[2], total.imag,
                    parts.g1.real, parts.g1.imag,
                    parts.g2.real, parts.g2.imag,
                    parts.g3.real, parts.g3.imag,
                    parts.g4.real, parts.g4.imag,
                ]
            )
    return rows
