"""Catalog of charts, systems, cosymplectic seeds, Betti profiles and meshed
surfaces used by the verification pipelines and the CLI.

Topology metadata (compactness, simple connectivity, Betti numbers) is
declared per entry; nothing topological is inferred numerically.
"""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .cosym import CosymplecticStructure, build_product_system
from .forms import ChartManifold, ChartMap, KForm, constant_form, coordinate_form, wedge
from .obstruct import BettiProfile, MeshedSurface
from .phase import EnergySurface, FlowSystem, HamiltonianSystem
from .section import SectionSpec, coordinate_section

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)


def torus(n: int, period: float = TWO_PI, name: str = "") -> ChartManifold:
    return ChartManifold(n, (True,) * n, (period,) * n, name=name or f"T{n}",
                         compact=True, simply_connected=False)


def euclidean(n: int, name: str = "", cotangent: bool = False) -> ChartManifold:
    return ChartManifold(n, (False,) * n, name=name or f"R{n}",
                         compact=False, simply_connected=True, cotangent_model=cotangent)


# -- cosymplectic seeds ---------------------------------------------------------


def seed_t3() -> CosymplecticStructure:
    """T^3 with the angle form of the last coordinate and the area form of the
    first two: the smallest standard cosymplectic chart."""
    t3 = torus(3)
    return CosymplecticStructure(t3, coordinate_form(3, 2),
                                 wedge(coordinate_form(3, 0), coordinate_form(3, 1)),
                                 name="t3")


def seed_t5() -> CosymplecticStructure:
    """T^5 with two area blocks and the angle form of the last coordinate."""
    t5 = torus(5)
    beta = (wedge(coordinate_form(5, 0), coordinate_form(5, 1))
            + wedge(coordinate_form(5, 2), coordinate_form(5, 3)))
    return CosymplecticStructure(t5, coordinate_form(5, 4), beta, name="t5")


SEEDS: dict[str, Callable[[], CosymplecticStructure]] = {
    "t3": seed_t3,
    "t5": seed_t5,
}


# -- systems --------------------------------------------------------------------


def harmonic_oscillator() -> HamiltonianSystem:
    """One-degree oscillator; exact chart, so the exactness obstruction applies."""
    c2 = euclidean(2, "R2(q,p)")
    omega = wedge(coordinate_form(2, 0), coordinate_form(2, 1))
    lam = KForm(1, 2, lambda x: np.stack([np.zeros_like(x[..., 0]), x[..., 0]], axis=-1))

    def h(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x[..., 0] ** 2 + x[..., 1] ** 2)

    return HamiltonianSystem(c2, omega, h, lambda x: np.asarray(x, dtype=float).copy(),
                             lam=lam, name="harmonic_oscillator")


def oscillator_2dof(freq2: float = SQRT2) -> HamiltonianSystem:
    """Two uncoupled oscillators with frequency ratio freq2 (incommensurate by
    default); coordinates (q1, p1, q2, p2)."""
    c4 = euclidean(4, "R4(q1,p1,q2,p2)")
    omega = (wedge(coordinate_form(4, 0), coordinate_form(4, 1))
             + wedge(coordinate_form(4, 2), coordinate_form(4, 3)))

    def lam_coeffs(x):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x[..., 0])
        return np.stack([z, x[..., 0], z, x[..., 2]], axis=-1)

    def h(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x[..., 0] ** 2 + x[..., 1] ** 2) \
            + 0.5 * freq2 * (x[..., 2] ** 2 + x[..., 3] ** 2)

    def grad_h(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 0], x[..., 1], freq2 * x[..., 2], freq2 * x[..., 3]], axis=-1)

    return HamiltonianSystem(c4, omega, h, grad_h, lam=KForm(1, 4, lam_coeffs),
                             name=f"oscillator_2dof({freq2:g})")


def canonical_r4() -> HamiltonianSystem:
    """Cotangent-model chart (q1, q2, p1, p2) with the canonical exact form and
    its tautological primitive."""
    c4 = euclidean(4, "T*R2", cotangent=True)
    # omega = dp1 ^ dq1 + dp2 ^ dq2; basis order {01, 02, 03, 12, 13, 23}
    omega = constant_form(4, 2, [0.0, -1.0, 0.0, 0.0, -1.0, 0.0])

    def lam_coeffs(x):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x[..., 0])
        return np.stack([x[..., 2], x[..., 3], z, z], axis=-1)

    def h(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x[..., 2] ** 2 + x[..., 3] ** 2)

    def grad_h(x):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x[..., 0])
        return np.stack([z, z, x[..., 2], x[..., 3]], axis=-1)

    return HamiltonianSystem(c4, omega, h, grad_h, lam=KForm(1, 4, lam_coeffs),
                             name="canonical_r4")


def product_system(seed: str = "t3") -> HamiltonianSystem:
    if seed not in SEEDS:
        raise KeyError(f"unknown cosymplectic seed {seed!r}; available: {sorted(SEEDS)}")
    return build_product_system(SEEDS[seed]())


def suspension_rotation(rho: float = 1.0 / 3.0) -> FlowSystem:
    """Suspension of the circle rotation by rho on unit-period T^2 coordinates
    (x, t): unit speed in t, holonomy x -> x + rho."""
    t2 = ChartManifold(2, (True, True), (1.0, 1.0), name="T2(x,t)", compact=True)
    vel = np.array([rho, 1.0])
    return FlowSystem(t2, lambda x: np.broadcast_to(vel, np.shape(x)).copy(),
                      name=f"suspension_rotation({rho:g})")


SYSTEMS: dict[str, Callable[[], object]] = {
    "harmonic_oscillator": harmonic_oscillator,
    "oscillator_2dof_sqrt2": oscillator_2dof,
    "canonical_r4": canonical_r4,
    "t4_product": lambda: product_system("t3"),
    "t6_product": lambda: product_system("t5"),
    "suspension_rotation": suspension_rotation,
}


def get_system(name: str):
    if name not in SYSTEMS:
        raise KeyError(f"unknown catalog system {name!r}; available: {sorted(SYSTEMS)}")
    return SYSTEMS[name]()


# -- sections and samplers ------------------------------------------------------


def product_leaf_section(system: HamiltonianSystem) -> SectionSpec:
    """Leaf {z = 0} of the foliation on the zero level of a product system
    (z is the seed angle coordinate, second to last)."""
    return coordinate_section(system.manifold, system.dim - 2, 0.0, 1, "product_leaf")


def product_energy_surface(system: HamiltonianSystem) -> EnergySurface:
    """Zero level of a product system as the angle-zero coordinate slice."""
    return EnergySurface(system, 0.0, slice_coord=system.dim - 1, slice_value=0.0)


def sample_product_leaf(system: HamiltonianSystem, rng: np.random.Generator,
                        n: int) -> np.ndarray:
    """Points of the {z = 0, angle = 0} leaf of a product system."""
    pts = system.manifold.sample(rng, n)
    pts[:, -2] = 0.0
    pts[:, -1] = 0.0
    return pts


def sample_product_surface(system: HamiltonianSystem, rng: np.random.Generator,
                           n: int) -> np.ndarray:
    """Points of the zero level {angle = 0} of a product system."""
    pts = system.manifold.sample(rng, n)
    pts[:, -1] = 0.0
    return pts


def oscillator_angle_section(index_pair: tuple[int, int] = (2, 3)) -> SectionSpec:
    """Phase-angle section of one oscillator pair, counted where the angle
    increases along the flow; singular at zero amplitude of that pair."""
    i, j = index_pair

    def theta(x):
        x = np.asarray(x, dtype=float)
        return np.arctan2(-x[..., j], x[..., i]) % TWO_PI

    def grad_theta(x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., i] ** 2 + x[..., j] ** 2
        g = np.zeros(x.shape)
        # NaN on the zero-amplitude orbit is deliberate: the section is
        # singular there and the crossing scan reports it as a failure
        with np.errstate(invalid="ignore", divide="ignore"):
            g[..., i] = x[..., j] / r2
            g[..., j] = -x[..., i] / r2
        return g

    return SectionSpec(theta, grad_theta, 0.0, 1, f"angle({i},{j})")


def sample_oscillator_surface(system: HamiltonianSystem, level: float,
                              rng: np.random.Generator, n: int,
                              freq2: float = SQRT2, on_section: bool = False) -> np.ndarray:
    """Points of the oscillator level set, splitting the energy between the
    two pairs away from the degenerate axes."""
    f = rng.uniform(0.1, 0.9, size=n)
    e1 = f * level
    r1 = np.sqrt(2.0 * e1)
    r2 = np.sqrt(2.0 * (level - e1) / freq2)
    phi1 = rng.uniform(0.0, TWO_PI, size=n)
    phi2 = np.zeros(n) if on_section else rng.uniform(0.0, TWO_PI, size=n)
    return np.stack([r1 * np.cos(phi1), -r1 * np.sin(phi1),
                     r2 * np.cos(phi2), -r2 * np.sin(phi2)], axis=-1)


# -- Betti catalog and ambient topology flags -------------------------------------


BETTI_PROFILES: dict[str, BettiProfile] = {
    "s3": BettiProfile("s3", (1, 0, 0, 1)),
    "t3": BettiProfile("t3", (1, 3, 3, 1)),
    "s2xs1": BettiProfile("s2xs1", (1, 1, 1, 1)),
    "t5": BettiProfile("t5", (1, 5, 10, 10, 5, 1)),
    "s5": BettiProfile("s5", (1, 0, 0, 0, 0, 1)),
}


#: declared (compact, simply_connected) flags of ambient manifolds
AMBIENT_TOPOLOGY: dict[str, tuple[bool, bool]] = {
    "s2xs2_split": (True, True),
    "cp2": (True, True),
    "t4": (True, False),
    "r4": (False, True),
}


# -- meshed surfaces --------------------------------------------------------------


def embedded_torus_r4(r1: float = 1.0, r2: float = 0.7,
                      center: Optional[np.ndarray] = None) -> MeshedSurface:
    """Product of circles in the (0,1) and (2,3) coordinate planes of a
    4-dimensional chart."""
    c = np.zeros(4) if center is None else np.asarray(center, dtype=float)

    def value(p):
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        return np.stack([c[0] + r1 * np.cos(u), c[1] + r1 * np.sin(u),
                         c[2] + r2 * np.cos(v), c[3] + r2 * np.sin(v)], axis=-1)

    def jacobian(p):
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        z = np.zeros_like(u)
        du = np.stack([-r1 * np.sin(u), r1 * np.cos(u), z, z], axis=-1)
        dv = np.stack([z, z, -r2 * np.sin(v), r2 * np.cos(v)], axis=-1)
        return np.stack([du, dv], axis=-1)

    return MeshedSurface(ChartMap(2, 4, value, jacobian), (TWO_PI, TWO_PI),
                         name="torus_r4")


def embedded_sphere_r4(radius: float = 1.0, center: Optional[np.ndarray] = None,
                       axes: tuple[int, int, int] = (0, 1, 2)) -> MeshedSurface:
    """Round 2-sphere inside a 3-coordinate slice of a 4-dimensional chart,
    parametrized by colatitude and longitude (poles degenerate, surface closed)."""
    c = np.zeros(4) if center is None else np.asarray(center, dtype=float)
    a0, a1, a2 = axes

    def value(p):
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        out = np.broadcast_to(c, p.shape[:-1] + (4,)).copy()
        out[..., a0] += radius * np.sin(u) * np.cos(v)
        out[..., a1] += radius * np.sin(u) * np.sin(v)
        out[..., a2] += radius * np.cos(u)
        return out

    def jacobian(p):
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        du = np.zeros(p.shape[:-1] + (4,))
        dv = np.zeros(p.shape[:-1] + (4,))
        du[..., a0] = radius * np.cos(u) * np.cos(v)
        du[..., a1] = radius * np.cos(u) * np.sin(v)
        du[..., a2] = -radius * np.sin(u)
        dv[..., a0] = -radius * np.sin(u) * np.sin(v)
        dv[..., a1] = radius * np.sin(u) * np.cos(v)
        return np.stack([du, dv], axis=-1)

    return MeshedSurface(ChartMap(2, 4, value, jacobian), (math.pi, TWO_PI),
                         name="sphere_r4")


def coordinate_torus_t4(z0: float = 0.0, theta0: float = 0.0) -> MeshedSurface:
    """Coordinate 2-torus {z = z0, theta = theta0} in the standard T^4 chart."""
    incl = ChartMap.coordinate_inclusion(4, [0, 1], {2: z0, 3: theta0})
    return MeshedSurface(incl, (TWO_PI, TWO_PI), name="coordinate_torus_t4")
