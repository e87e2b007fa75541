"""Quasi-static resonances of a resonator array.

For M resonators with aperture scale eps there are exactly 2M
resonances in the frequency window W = {|k| <= k1/2}, organised in M
mode pairs indexed by the eigenpairs (beta_j, Y_j) of the coupling
matrix T.  With

    tau_1   = sqrt(c / |D|),
    tau_3,j = -(1/2) (alpha_0 + beta_j) sqrt(c / |D|) c,
    tau_4,j = -(1/2) (c^2 / |D|) Y_j . S Y_j,

(c the aperture capacity, |D| the cavity volume) the two branches of
mode j expand as

    k_j,1 =  tau_1 eps^(1/2) + tau_3,j eps^(3/2) + tau_4,j eps^2,
    k_j,2 = -tau_1 eps^(1/2) - tau_3,j eps^(3/2) + tau_4,j eps^2,

with remainder O(eps^(5/2)).  Since Y_j . Im(S) Y_j >= 0, the shared
imaginary part Im tau_4,j eps^2 is nonpositive: resonances sit in the
closed lower half plane (passivity).  When alpha_0 = Re alpha_1 = 0 the
two branches are reflections of each other, k_j,2 = -conj(k_j,1).

The numeric cross-check solves the truncated characteristic problem
directly: with

    F(k, eps) = sqrt(eps c / |D|) [Id - (eps c / 2)(alpha_0 Id + T)
                                     - (eps c / 2) k S],

the two branches are the roots of k = +F and k = -F.  Both are linear
eigenvalue problems in k (F is affine in k) and are solved as
generalised eigenproblems.  The truncation keeps exactly the blocks
entering the expansion above, so asymptotic and oracle roots agree to
the order of the dropped remainder.  The empirical decay exponent of
the gap |k_asym - k_oracle| is 5/2 only when the generalised
eigenproblem does not decouple in the eigenbasis of T: for M = 1, and
for M = 2 where T and the all-ones matrix commute, the eps^(5/2) term
cancels identically and the gap decays like eps^3 or faster.  Arrays
of three or more resonators in generic position show the eps^(5/2)
rate, which therefore governs ensembles containing them.

Characteristic vectors pick up a sqrt(eps) mixing of the unperturbed
modes,

    Y_j,b = Y_j -+ sqrt(eps) sum_{i != j} (beta_j - beta_i)^(-1)
                 sqrt(c / |D|) Y_i (Y_i . S Y_j) + O(eps),

with the minus sign on branch 1; the formula requires simple beta_j.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.linalg import eig
from scipy.optimize import linear_sum_assignment

from .aperture import DISK_CAPACITY
from .system import (
    GAP_THRESHOLD_FACTOR,
    ResonatorSystem,
    SpectralData,
    interaction_matrices,
    neumann_k1,
)

__all__ = [
    "TauCoefficients",
    "Resonance",
    "CharacteristicVector",
    "DegenerateSpectrumError",
    "WindowViolationWarning",
    "tau_coefficients",
    "resonances_asymptotic",
    "resonances_oracle",
    "characteristic_vectors",
    "window_check",
    "resonance_rows",
]


class DegenerateSpectrumError(ValueError):
    """Coupling eigenvalues too close for the perturbation formulas."""


class WindowViolationWarning(UserWarning):
    """A resonance left the quasi-static window |k| <= k1/2."""


@dataclass(frozen=True)
class TauCoefficients:
    """Expansion coefficients shared by the 2M resonances.

    tau1 is scalar; tau3 and tau4 are per-mode arrays ordered like the
    betas; tau4 is complex with Im tau4 <= 0.
    """

    tau1: float
    tau3: np.ndarray
    tau4: np.ndarray
    capacity: float


@dataclass(frozen=True)
class Resonance:
    """One resonance: mode index j, branch 1 or 2, complex frequency."""

    mode: int
    branch: int
    value: complex
    oracle: Optional[complex] = None

    @property
    def gap(self) -> Optional[float]:
        if self.oracle is None:
            return None
        return abs(self.value - self.oracle)


@dataclass(frozen=True)
class CharacteristicVector:
    """First-order characteristic vector of one mode branch."""

    mode: int
    branch: int
    vector: np.ndarray


def tau_coefficients(
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    capacity: float = DISK_CAPACITY,
) -> TauCoefficients:
    """Expansion coefficients tau_1, tau_3,j, tau_4,j of the array.

    ``capacity`` is the unit-aperture capacity c; the default is the
    closed-form unit-disk value 2.  A computed capacity from the
    aperture solver may be passed instead.
    """
    if spectral is None:
        spectral = interaction_matrices(system)
    vol = system.cavity_volume
    tau1 = math.sqrt(capacity / vol)
    tau3 = -0.5 * (system.alpha0 + spectral.betas) * tau1 * capacity
    m = system.n_resonators
    tau4 = np.empty(m, dtype=complex)
    for j in range(m):
        y = spectral.modes[:, j]
        tau4[j] = -0.5 * (capacity**2 / vol) * (y @ spectral.radiation @ y)
    return TauCoefficients(tau1=tau1, tau3=tau3, tau4=tau4, capacity=capacity)


def resonances_asymptotic(
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    capacity: float = DISK_CAPACITY,
) -> List[Resonance]:
    """The 2M resonances from the three-term expansion.

    Returns branch-1 and branch-2 resonances for each mode, ordered by
    mode then branch.  Emits a WindowViolationWarning if any resonance
    leaves the quasi-static window.
    """
    if spectral is None:
        spectral = interaction_matrices(system)
    tau = tau_coefficients(system, spectral, capacity)
    eps = system.epsilon
    root = math.sqrt(eps)
    out = []
    for j in range(system.n_resonators):
        k1 = tau.tau1 * root + tau.tau3[j] * root**3 + tau.tau4[j] * eps**2
        k2 = -tau.tau1 * root - tau.tau3[j] * root**3 + tau.tau4[j] * eps**2
        out.append(Resonance(mode=j, branch=1, value=complex(k1)))
        out.append(Resonance(mode=j, branch=2, value=complex(k2)))
    window_check(out, system.height, warn=True)
    return out


def _truncated_pencil(system: ResonatorSystem, spectral: SpectralData, capacity: float):
    """Matrices F0, F1 with F(k, eps) = F0 + k F1."""
    m = system.n_resonators
    eps = system.epsilon
    scale = math.sqrt(eps * capacity / system.cavity_volume)
    half = 0.5 * eps * capacity
    f0 = scale * (
        np.eye(m) - half * (system.alpha0 * np.eye(m) + spectral.coupling)
    )
    f1 = -scale * half * spectral.radiation
    return f0, f1


def resonances_oracle(
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    capacity: float = DISK_CAPACITY,
) -> List[Resonance]:
    """Resonances of the truncated characteristic problem k = +-F(k, eps).

    Each branch is a generalised eigenproblem: k = +F gives
    F0 x = k (Id - F1) x, k = -F gives -F0 x = k (Id + F1) x.  Roots
    are matched to the asymptotic resonances by minimum-cost pairing
    and returned with both values filled in.
    """
    if spectral is None:
        spectral = interaction_matrices(system)
    asym = resonances_asymptotic(system, spectral, capacity)
    f0, f1 = _truncated_pencil(system, spectral, capacity)
    m = system.n_resonators
    eye = np.eye(m)
    plus = eig(f0, eye - f1, right=False)
    minus = eig(-f0, eye + f1, right=False)
    out = []
    for branch, roots in ((1, plus), (2, minus)):
        branch_asym = [r for r in asym if r.branch == branch]
        cost = np.abs(
            np.array([r.value for r in branch_asym])[:, None] - roots[None, :]
        )
        rows, cols = linear_sum_assignment(cost)
        for ri, ci in zip(rows, cols):
            r = branch_asym[ri]
            out.append(
                Resonance(
                    mode=r.mode,
                    branch=branch,
                    value=r.value,
                    oracle=complex(roots[ci]),
                )
            )
    out.sort(key=lambda r: (r.mode, r.branch))
    return out


def characteristic_vectors(
    system: ResonatorSystem,
    spectral: Optional[SpectralData] = None,
    capacity: float = DISK_CAPACITY,
) -> List[CharacteristicVector]:
    """First-order characteristic vectors of all 2M resonances.

    Requires simple coupling eigenvalues; raises
    DegenerateSpectrumError when the smallest gap is below the
    degeneracy threshold.
    """
    if spectral is None:
        spectral = interaction_matrices(system)
    m = system.n_resonators
    betas = spectral.betas
    if m > 1:
        gap = float(np.diff(betas).min())
        if gap < GAP_THRESHOLD_FACTOR * float(np.abs(betas).max()):
            raise DegenerateSpectrumError(
                f"eigenvalue gap {gap:g} too small for the mixing formula"
            )
    root = math.sqrt(system.epsilon)
    scale = math.sqrt(capacity / system.cavity_volume)
    out = []
    for j in range(m):
        y = spectral.modes[:, j]
        mix = np.zeros(m, dtype=complex)
        for i in range(m):
            if i == j:
                continue
            coupling = spectral.modes[:, i] @ spectral.radiation @ y
            mix += spectral.modes[:, i] * (coupling * scale / (betas[j] - betas[i]))
        out.append(
            CharacteristicVector(mode=j, branch=1, vector=y - root * mix)
        )
        out.append(
            CharacteristicVector(mode=j, branch=2, vector=y + root * mix)
        )
    return out


def window_check(
    resonances: List[Resonance], height: float, warn: bool = False
) -> bool:
    """True when every resonance satisfies |k| <= k1/2."""
    bound = 0.5 * neumann_k1(height)
    ok = all(abs(r.value) <= bound for r in resonances)
    if not ok and warn:
        worst = max(abs(r.value) for r in resonances)
        warnings.warn(
            f"resonance magnitude {worst:g} exceeds the window bound {bound:g}",
            WindowViolationWarning,
            stacklevel=2,
        )
    return ok


def resonance_rows(resonances: List[Resonance]) -> List[list]:
    """CSV rows (j, branch, re_k, im_k, re_k_oracle, im_k_oracle, gap)."""
    rows = []
    for r in resonances:
        if r.oracle is None:
            rows.append(
                [r.mode, r.branch, r.value.real, r.value.imag, float("nan"),
                 float("nan"), float("nan")]
            )
        else:
            rows.append(
                [r.mode, r.branch, r.value.real, r.value.imag,
                 r.oracle.real, r.oracle.imag, r.gap]
            )
    return rows
