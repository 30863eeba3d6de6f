"""Isotropic elastic materials with interconvertible constant sets.

A material carries density plus the full set {E, nu, K, G, lam}; the
constructors accept either (E, nu) or (K, G) and fill in the rest, so any
downstream code can read whichever pair it needs without re-deriving.
"""

from __future__ import annotations

from dataclasses import dataclass

_REL_TOL = 1e-9


class SingularMaterialError(ValueError):
    """Poisson ratio at the incompressible limit; constants diverge."""


@dataclass(frozen=True)
class ElasticMaterial:
    """Density plus consistent isotropic elastic constants (SI units)."""

    rho: float
    E: float
    nu: float
    K: float
    G: float
    lam: float

    def __post_init__(self):
        for name in ("rho", "E", "nu", "K", "G", "lam"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("rho", "E", "K", "G"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"poisson ratio must lie in (-1, 0.5), got {self.nu}")
        checks = (
            ("G", self.G, self.E / (2.0 * (1.0 + self.nu))),
            ("K", self.K, self.E / (3.0 * (1.0 - 2.0 * self.nu))),
            ("lam", self.lam, self.K - 2.0 * self.G / 3.0),
        )
        for name, got, want in checks:
            if abs(got - want) > _REL_TOL * max(abs(want), 1.0):
                raise ValueError(f"inconsistent elastic constants: {name}={got!r}, expected {want!r}")

    @classmethod
    def from_EN(cls, E: float, nu: float, rho: float) -> "ElasticMaterial":
        """Build from Young's modulus and Poisson ratio."""
        if nu >= 0.5:
            raise SingularMaterialError(f"poisson ratio {nu} >= 0.5: bulk modulus diverges")
        if nu <= -1.0:
            raise SingularMaterialError(f"poisson ratio {nu} <= -1: shear modulus diverges")
        if E <= 0:
            raise ValueError(f"E must be positive, got {E}")
        G = E / (2.0 * (1.0 + nu))
        K = E / (3.0 * (1.0 - 2.0 * nu))
        return cls(rho=rho, E=E, nu=nu, K=K, G=G, lam=K - 2.0 * G / 3.0)

    @classmethod
    def from_KG(cls, K: float, G: float, rho: float) -> "ElasticMaterial":
        """Build from bulk and shear moduli."""
        if K <= 0 or G <= 0:
            raise ValueError(f"K and G must be positive, got K={K}, G={G}")
        E = 9.0 * K * G / (3.0 * K + G)
        nu = (3.0 * K - 2.0 * G) / (2.0 * (3.0 * K + G))
        return cls(rho=rho, E=E, nu=nu, K=K, G=G, lam=K - 2.0 * G / 3.0)

    @property
    def shear_wave_speed(self) -> float:
        return (self.G / self.rho) ** 0.5

    @property
    def longitudinal_wave_speed(self) -> float:
        """Plane-strain P-wave speed sqrt((lam + 2G) / rho)."""
        return ((self.lam + 2.0 * self.G) / self.rho) ** 0.5


def elastic_from_EN(E: float, nu: float, rho: float) -> ElasticMaterial:
    """Functional alias for :meth:`ElasticMaterial.from_EN`."""
    return ElasticMaterial.from_EN(E, nu, rho)


@dataclass(frozen=True)
class MaterialPair:
    """Soft/hard phase pair; ids 0 and 1 in a bitmap map to soft and hard."""

    soft: ElasticMaterial
    hard: ElasticMaterial

    def __post_init__(self):
        if not self.hard.E > self.soft.E:
            raise ValueError(
                f"hard phase must be stiffer than soft (E_hard={self.hard.E}, E_soft={self.soft.E})"
            )


# Nominal epoxy-like soft phase and steel-like hard phase (densities in kg/m^3).
EPOXY = ElasticMaterial.from_EN(E=200e6, nu=0.38, rho=1000.0)
STEEL = ElasticMaterial.from_EN(E=200e9, nu=0.28, rho=8000.0)


def default_material_pair() -> MaterialPair:
    return MaterialPair(soft=EPOXY, hard=STEEL)
