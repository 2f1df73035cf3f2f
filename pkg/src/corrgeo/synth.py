"""Deterministic synthetic cohorts with planted effects.

Effects are planted in Off-log coordinates, where translation by a fixed
hollow matrix is exactly the group action ``C -> Exp_off(Delta) * C``.
Every subject draws from its own generator seeded by ``(seed, group, index)``
so subjects can be generated in any order.
"""

from dataclasses import dataclass

import numpy as np

from .cohort import CohortDataset, Subject
from .errors import InvalidInput
from .grassmann import grassmann_exp, orthonormalize
from .manifold import exp_off, hollow_from_upper, n_coords


@dataclass(frozen=True)
class SynthSpec:
    n: int
    m_per_group: tuple = (20, 20)
    effect_size: float = 0.0
    effect_support: tuple = None
    noise_scale: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInput("n must be at least 2")
        if self.effect_size < 0:
            raise InvalidInput("effect_size must be non-negative")
        m = self.m_per_group
        object.__setattr__(self, "m_per_group", (m, m) if np.isscalar(m) else tuple(m))

    @property
    def support(self):
        p = n_coords(self.n)
        if self.effect_support is None:
            return np.arange(min(p, max(1, self.n)))
        idx = np.asarray(self.effect_support, dtype=int)
        if idx.size == 0 or idx.min() < 0 or idx.max() >= p:
            raise InvalidInput(f"effect_support must index the {p} upper-triangular coordinates")
        return np.unique(idx)


def subject_rng(seed, *path):
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


def random_hollow(n, scale, rng):
    """Symmetric hollow matrix with independent N(0, scale^2) off-diagonal entries."""
    return hollow_from_upper(scale * rng.standard_normal(n_coords(n)), n)


def random_correlation(n, concentration=0.2, seed=42):
    """``Exp_off`` of a Gaussian hollow matrix; ``concentration`` is the entry sd."""
    if n < 2:
        raise InvalidInput("n must be at least 2")
    return exp_off(random_hollow(n, concentration, subject_rng(seed)))


def effect_matrix(spec):
    """Hollow ``Delta`` on the support coordinates with ``||Delta||_F = effect_size``."""
    support = spec.support
    values = np.zeros(n_coords(spec.n))
    values[support] = spec.effect_size / np.sqrt(2.0 * len(support))
    return hollow_from_upper(values, spec.n)


def inject_group_effect(spec):
    """Two groups: A gets ``Exp_off(S_i)``, B gets ``Exp_off(S_i + Delta)``."""
    delta = effect_matrix(spec)
    subjects = []
    for g, (name, m) in enumerate(zip("AB", spec.m_per_group)):
        for i in range(m):
            S = random_hollow(spec.n, spec.noise_scale, subject_rng(spec.seed, g, i))
            if name == "B":
                S = S + delta
            subjects.append(Subject(f"{name}{i:03d}", exp_off(S), label=name))
    return CohortDataset(subjects)


def inject_age_trend(spec, slope, age_noise=5.0, center=50.0, clip=(18.0, 90.0)):
    """Cohort whose ages are linear in one Off-log direction.

    ``u = Delta / ||Delta||`` (unit direction on the support; ``effect_size`` is
    ignored for the direction). Each subject draws
    ``S_i = E_i + spread * z_i * u`` with isotropic noise ``E_i`` of sd
    ``noise_scale`` and a latent ``z_i ~ N(0, 1)``, where ``spread`` is
    ``spec.effect_size`` (the latent's sd along ``u``). Ages are
    ``center + slope * <S_i, u> + N(0, age_noise^2)`` clipped to ``clip``.
    """
    unit_spec = SynthSpec(spec.n, spec.m_per_group, 1.0, spec.effect_support, spec.noise_scale, spec.seed)
    u = effect_matrix(unit_spec)
    subjects = []
    m_total = sum(spec.m_per_group)
    for i in range(m_total):
        rng = subject_rng(spec.seed, 2, i)
        S = random_hollow(spec.n, spec.noise_scale, rng) + spec.effect_size * rng.standard_normal() * u
        age = center + slope * float(np.sum(S * u)) + age_noise * rng.standard_normal()
        age = float(np.clip(age, *clip))
        subjects.append(Subject(f"S{i:04d}", exp_off(S), age=age))
    return CohortDataset(subjects)


@dataclass
class SubspaceCohort:
    group_a: list
    group_b: list
    center_a: np.ndarray
    center_b: np.ndarray


def inject_subspace_effect(n, k, m_per_group, angle, noise, seed=42, sign_flips=True, rotations=False):
    """Two classes of k-subspaces of R^n around centers ``angle`` apart.

    ``center_b`` rotates the first basis vector of ``center_a`` by ``angle``
    towards a direction orthogonal to ``center_a``, so the centers have a
    single non-zero principal angle. Each sample is
    ``Exp_center(noise * G_perp)`` with ``G_perp`` a Gaussian ``n x k``
    matrix projected onto the tangent space and scaled by
    ``1 / sqrt((n - k) k)``, so that ``E ||G_perp||_F^2 = 1`` and ``noise`` is
    the typical distance of a sample from its center. Afterwards every sample's
    columns get independent random signs (``sign_flips``) and/or a random
    ``k x k`` rotation (``rotations``); these are drawn after the noise, so the
    subspaces do not depend on either flag.
    """
    if not 0 < k < n:
        raise InvalidInput("need 0 < k < n")
    if not 0.0 <= angle < np.pi / 2:
        raise InvalidInput("angle must be in [0, pi/2)")
    m_a, m_b = (m_per_group, m_per_group) if np.isscalar(m_per_group) else m_per_group
    Q = orthonormalize(subject_rng(seed, 9).standard_normal((n, k + 1)))
    center_a = Q[:, :k].copy()
    center_b = center_a.copy()
    center_b[:, 0] = np.cos(angle) * Q[:, 0] + np.sin(angle) * Q[:, k]
    groups = []
    for g, (center, m) in enumerate(((center_a, m_a), (center_b, m_b))):
        pts = []
        for i in range(m):
            rng = subject_rng(seed, 10 + g, i)
            G = rng.standard_normal((n, k))
            G -= center @ (center.T @ G)
            G /= np.sqrt((n - k) * k)
            U = grassmann_exp(center, noise * G)
            if sign_flips:
                U = U * rng.choice([-1.0, 1.0], size=k)
            if rotations:
                U = U @ orthonormalize(rng.standard_normal((k, k)))
            pts.append(U)
        groups.append(pts)
    return SubspaceCohort(groups[0], groups[1], center_a, center_b)
