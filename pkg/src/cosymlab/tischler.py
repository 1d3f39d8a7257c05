"""Rationalization of a closed one-form on a torus chart.

The foliation of a generic closed one-form has non-compact leaves.  Replacing
the form by a nearby one whose periods are rational (a common-denominator
combination of circle-generator pullbacks) turns the foliation into a
fibration with compact leaves, each usable as a Poincaré section.  The steps:
compute the loop periods, approximate them simultaneously by fractions
n_i / d, rebuild the form with the rationalized constant part (the exact part
is kept unchanged), and extract a circle-valued section function from the
integer data.

Periods are normalized by 2*pi, so an integer entry means the form winds that
many times around the corresponding coordinate circle.  The coefficient norm
controlling closeness is the sup over samples of the coefficient-vector
infinity norm, which bounds the transversality margin loss pointwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .forms import (ChartManifold, KForm, constant_form, covector_values,
                    exterior_derivative, max_coeff_magnitude)
from .section import SectionSpec

TWO_PI = 2.0 * math.pi

CLOSED_TOL = 1e-6
QUAD_ABS_ERR = 1e-11
DEFAULT_D_CAP = 10_000


class RationalizationError(RuntimeError):
    """Denominator cap exhausted before the requested accuracy was met."""


@dataclass(frozen=True, eq=False)
class PeriodVector:
    """Normalized loop periods of a closed one-form over the generator cycles."""

    values: np.ndarray
    cycles: tuple[str, ...]
    manifold: ChartManifold

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True, eq=False)
class RationalApproximation:
    """Simultaneous approximation values[i] ~ n[i] / d with common denominator d."""

    d: int
    n: np.ndarray
    epsilon_achieved: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("denominator must be a positive integer")
        object.__setattr__(self, "n", np.asarray(self.n, dtype=int))

    @property
    def fractions(self) -> np.ndarray:
        return self.n / float(self.d)


def periods(alpha: KForm, manifold: ChartManifold, base: Optional[Sequence[float]] = None,
            closed_tol: float = CLOSED_TOL) -> PeriodVector:
    """Loop integrals of a closed one-form over the coordinate circles,
    normalized by 2*pi.

    Adaptive quadrature to absolute error 1e-10; refuses non-closed input,
    whose "periods" would be path dependent.
    """
    if alpha.degree != 1 or alpha.dim != manifold.dim:
        raise ValueError("periods need a one-form on the given chart")
    if not manifold.is_torus:
        raise ValueError("period computation needs a torus chart (all coordinates periodic)")
    rng = np.random.default_rng(7)
    residual = max_coeff_magnitude(exterior_derivative(alpha), manifold.sample(rng, 32))
    if residual >= closed_tol:
        raise ValueError(f"one-form not closed (sampled |d alpha| = {residual:.3e}); "
                         "loop integrals would be path dependent")
    base_pt = np.zeros(manifold.dim) if base is None else np.asarray(base, dtype=float)
    vals = np.empty(manifold.dim)
    cycles = []
    for i in range(manifold.dim):
        period = manifold.periods[i]

        def integrand(t: float, i=i) -> float:
            x = base_pt.copy()
            x[i] += t
            return float(covector_values(alpha, x)[i])

        raw, err = quad(integrand, 0.0, period, epsabs=QUAD_ABS_ERR, epsrel=0.0, limit=200)
        if err > 1e-10:
            raise RuntimeError(f"quadrature error estimate {err:.3e} too large on cycle {i}")
        vals[i] = raw / TWO_PI
        cycles.append(f"loop along coordinate {i}, period {period:g}")
    return PeriodVector(vals, tuple(cycles), manifold)


def rationalize(pv: PeriodVector, eps: float, d_cap: int = DEFAULT_D_CAP) -> RationalApproximation:
    """Simultaneous rational approximation with denominator up to d_cap.

    Scans every denominator.  Among those meeting the pointwise error bound
    eps, returns the one with the smallest scaled lattice error
    max_i |d * v_i - n_i| (ties to the smaller d): the classical
    best-approximation ranking, which favors the simplest rational data and
    hence the lowest-winding leaf for a given tolerance.  Exhaustive rather
    than lattice-based: dimensions are tiny and the guarantee is exact.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if d_cap < 1:
        raise ValueError("denominator cap must be >= 1")
    v = pv.values
    ds = np.arange(1, d_cap + 1, dtype=float)
    n = np.rint(ds[:, None] * v[None, :])
    lattice_errs = np.max(np.abs(ds[:, None] * v[None, :] - n), axis=1)
    errs = lattice_errs / ds
    feasible = errs <= eps
    if not feasible.any():
        best = int(np.argmin(errs))
        raise RationalizationError(
            f"no denominator <= {d_cap} achieves error {eps:g} "
            f"(best {errs[best]:.3e} at d = {best + 1})")
    candidates = np.flatnonzero(feasible)
    best = int(candidates[np.argmin(lattice_errs[candidates])])
    return RationalApproximation(best + 1, n[best].astype(int), float(errs[best]))


def build_approximation(alpha: KForm, pv: PeriodVector, ra: RationalApproximation) -> KForm:
    """Closed one-form with the rationalized periods.

    Replaces the constant (harmonic) part of alpha by the fractions n_i / d in
    normalized angular units and keeps the exact part unchanged, so re-running
    the period computation reproduces n_i / d.
    """
    m = pv.manifold
    correction = (ra.fractions - pv.values) * TWO_PI / np.asarray(m.periods)
    return alpha + constant_form(m.dim, 1, correction)


def coefficient_distance(pv: PeriodVector, ra: RationalApproximation) -> float:
    """Sup-norm coefficient distance between a form and its rationalization."""
    correction = (ra.fractions - pv.values) * TWO_PI / np.asarray(pv.manifold.periods)
    return float(np.max(np.abs(correction)))


@dataclass(eq=False)
class TransversalityReport:
    min_margin: float
    min_margin_original: Optional[float]
    passed: bool

    def as_dict(self) -> dict:
        return {"min_margin": self.min_margin,
                "min_margin_original": self.min_margin_original,
                "passed": self.passed}


def check_transversality_preserved(system, alpha_prime: KForm, samples: np.ndarray,
                                   alpha: Optional[KForm] = None) -> TransversalityReport:
    """Margin of the rationalized form against the flow over the samples.

    Transversality is an open condition, so a small enough approximation
    error keeps the margin positive; a failed report calls for a smaller eps,
    not an exception.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    field = system.field(samples)

    def margin(form: KForm) -> float:
        pairing = np.einsum("...i,...i->...", covector_values(form, samples), field)
        return float(np.min(np.abs(pairing)))

    m_prime = margin(alpha_prime)
    m_orig = margin(alpha) if alpha is not None else None
    return TransversalityReport(m_prime, m_orig, m_prime > 0.0)


def extract_leaf(ra: RationalApproximation, manifold: ChartManifold,
                 level: float = 0.0, orientation: int = 1) -> SectionSpec:
    """Compact fibration leaf of the rationalized form as a section.

    The circle-valued map winds n_i times around coordinate i; dividing by
    the gcd of the integers makes its fibers connected.  The level set is a
    compact leaf usable by the section machinery.
    """
    n = np.asarray(ra.n, dtype=int)
    if not np.any(n):
        raise ValueError("all integers vanish: the rationalized form defines no fibration")
    g = int(np.gcd.reduce(np.abs(n[n != 0])))
    weights = n / np.asarray(manifold.periods)
    scale = TWO_PI / g

    def theta(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = np.einsum("...i,i->...", x, weights)
        return (s % g) * scale

    def grad_theta(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(weights * scale, np.shape(x))

    return SectionSpec(theta, grad_theta, level=level, orientation=orientation,
                       name=f"leaf(n={n.tolist()}, d={ra.d})")
