"""Cosymplectic pairs on odd-dimensional charts and their correspondence with
transverse symplectic vector fields.

A cosymplectic structure is a closed one-form alpha and a closed two-form
beta on a (2n-1)-dimensional chart such that alpha ^ beta^(n-1) is a volume
form.  A hypersurface carries such a pair exactly when it admits a transverse
vector field X that is symplectic (d(iota_X omega) = 0); the two directions
of that correspondence are implemented as ``field_to_cosym`` and
``cosym_to_field``.

Circle coordinates use period 2*pi throughout, the product construction takes
its energy to be the sine of the suspension angle, and leaves are taken at
angle 0 where the transversality margin |cos| is maximal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .forms import (ChartManifold, ChartMap, KForm, coordinate_form,
                    covector_values, exterior_derivative, interior,
                    max_coeff_magnitude, power, pullback, two_form_matrix, wedge)
from .phase import EnergySurface, HamiltonianSystem

CLOSED_TOL = 1e-6
VOLUME_MARGIN = 1e-9
TRANSVERSALITY_MARGIN = 1e-8


class TransversalityError(RuntimeError):
    """The candidate field is tangent to the level set at a sample."""


class PathDependenceError(RuntimeError):
    """Line-integral primitive is path dependent: the one-form has nonzero
    loop periods (nontrivial first cohomology)."""


@dataclass(frozen=True, eq=False)
class CosymplecticStructure:
    """(alpha, beta) pair on an odd-dimensional chart."""

    manifold: ChartManifold
    alpha: KForm
    beta: KForm
    name: str = ""

    def __post_init__(self):
        if self.manifold.dim % 2 == 0:
            raise ValueError("cosymplectic structures live on odd-dimensional charts")
        if self.alpha.degree != 1 or self.alpha.dim != self.manifold.dim:
            raise ValueError("alpha must be a one-form on the chart")
        if self.beta.degree != 2 or self.beta.dim != self.manifold.dim:
            raise ValueError("beta must be a two-form on the chart")

    @property
    def n(self) -> int:
        return (self.manifold.dim + 1) // 2

    def volume_form(self) -> KForm:
        return wedge(self.alpha, power(self.beta, self.n - 1))


@dataclass(eq=False)
class CosymReport:
    passed: bool
    d_alpha_max: float
    d_beta_max: float
    volume_margin: float
    worst_sample: np.ndarray

    def as_dict(self) -> dict:
        return {"passed": self.passed, "d_alpha_max": self.d_alpha_max,
                "d_beta_max": self.d_beta_max, "volume_margin": self.volume_margin,
                "worst_sample": list(map(float, np.atleast_1d(self.worst_sample)))}


@dataclass(eq=False)
class TransverseFieldReport:
    field_values: np.ndarray
    symplectic_residual: float
    min_transversality: float
    field: Callable[[np.ndarray], np.ndarray]

    @property
    def passed(self) -> bool:
        return self.symplectic_residual < CLOSED_TOL and self.min_transversality > 0.0

    def as_dict(self) -> dict:
        return {"passed": self.passed, "symplectic_residual": self.symplectic_residual,
                "min_transversality": self.min_transversality}


def verify_cosymplectic(cs: CosymplecticStructure, samples: np.ndarray,
                        closed_tol: float = CLOSED_TOL,
                        volume_margin: float = VOLUME_MARGIN) -> CosymReport:
    """Sampled verification: alpha and beta closed, alpha ^ beta^(n-1)
    nonvanishing on the coordinate frame."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ValueError("verification needs a nonempty sample set")
    d_alpha = max_coeff_magnitude(exterior_derivative(cs.alpha), samples)
    dim = cs.manifold.dim
    d_beta = 0.0
    if cs.beta.degree + 1 <= dim:
        d_beta = max_coeff_magnitude(exterior_derivative(cs.beta), samples)
    vol = cs.volume_form().coeffs(samples)[..., 0]
    worst = samples[int(np.argmin(np.abs(vol)))]
    margin = float(np.min(np.abs(vol)))
    passed = d_alpha < closed_tol and d_beta < closed_tol and margin > volume_margin
    return CosymReport(passed, float(d_alpha), float(d_beta), margin, worst)


def field_to_cosym(sys: HamiltonianSystem, Z: EnergySurface,
                   X: Callable[[np.ndarray], np.ndarray], samples: np.ndarray,
                   closed_tol: float = CLOSED_TOL,
                   margin: float = TRANSVERSALITY_MARGIN) -> CosymplecticStructure:
    """Induced pair on a slice level set from a transverse symplectic field.

    alpha is the symplectic pairing of X restricted to the slice chart of Z,
    beta the restriction of the ambient form.  Raises on tangency or when X
    fails to be symplectic at the samples.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    incl = Z.inclusion()
    ambient = incl.value(samples)
    xv = np.asarray(X(ambient), dtype=float)
    dh = np.asarray(sys.grad_h(ambient), dtype=float)
    trans = np.abs(np.einsum("...i,...i->...", dh, xv))
    if float(np.min(trans)) <= margin:
        raise TransversalityError(
            f"field tangent to the level set at a sample: min |dH(X)| = {float(np.min(trans)):.3e}")
    alpha_ambient = interior(X, sys.omega)
    residual = max_coeff_magnitude(exterior_derivative(alpha_ambient), ambient)
    if residual >= closed_tol:
        raise ValueError(f"field is not symplectic: sampled |d(iota_X omega)| = {residual:.3e}")
    cs = CosymplecticStructure(Z.section_chart,
                               pullback(incl, alpha_ambient),
                               pullback(incl, sys.omega),
                               name=f"induced on {sys.name or 'system'} level set")
    report = verify_cosymplectic(cs, samples, closed_tol)
    if not report.passed:
        raise ValueError(f"induced pair fails verification: {report.as_dict()}")
    return cs


def cosym_to_field(sys: HamiltonianSystem, Z: EnergySurface, cs: CosymplecticStructure,
                   samples: np.ndarray) -> TransverseFieldReport:
    """Transverse symplectic field recovering a verified pair on Z.

    The defining one-form is extended constantly in the collar coordinate and
    the pairing equation iota_X omega = alpha is solved pointwise.  Reports
    the transversality and symplectic-closedness margins of the result.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    proj = Z.projection()
    alpha_ext = pullback(proj, cs.alpha)
    ambient = Z.inclusion().value(samples)
    if max_coeff_magnitude(alpha_ext, ambient) < 1e-14:
        raise ValueError("degenerate one-form: alpha vanishes at the samples")

    omega = sys.omega

    def field(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        M = two_form_matrix(omega, x)
        a = covector_values(alpha_ext, x)
        return np.linalg.solve(np.swapaxes(M, -1, -2), a[..., None])[..., 0]

    values = field(ambient)
    dh = np.asarray(sys.grad_h(ambient), dtype=float)
    trans = float(np.min(np.abs(np.einsum("...i,...i->...", dh, values))))
    residual = max_coeff_magnitude(exterior_derivative(interior(field, omega)), ambient)
    return TransverseFieldReport(values, float(residual), trans, field)


@dataclass(eq=False)
class SubmanifoldReport:
    min_abs_det: float
    passed: bool
    worst_sample: np.ndarray

    def as_dict(self) -> dict:
        return {"min_abs_det": self.min_abs_det, "passed": self.passed,
                "worst_sample": list(map(float, np.atleast_1d(self.worst_sample)))}


def symplectic_submanifold_test(sys: HamiltonianSystem, patch: ChartMap,
                                samples: np.ndarray,
                                margin: float = 1e-8) -> SubmanifoldReport:
    """Nondegeneracy of the restricted form on a parametrized patch.

    At each parameter sample, forms the matrix of the ambient two-form on the
    patch frame and requires |det| > margin.
    """
    if patch.source_dim % 2:
        raise ValueError("submanifold patch must be even-dimensional")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    pts = patch.value(samples)
    E = patch.jacobian(samples)
    M = two_form_matrix(sys.omega, pts)
    G = np.einsum("...ia,...ij,...jb->...ab", E, M, E)
    dets = np.linalg.det(G)
    worst = samples[int(np.argmin(np.abs(dets)))]
    min_det = float(np.min(np.abs(dets)))
    return SubmanifoldReport(min_det, min_det > margin, worst)


def build_product_system(cs: CosymplecticStructure, samples: Optional[np.ndarray] = None,
                         rng: Optional[np.random.Generator] = None) -> HamiltonianSystem:
    """Product of a verified cosymplectic chart with a circle.

    The symplectic form is the lifted beta plus the wedge of the lifted alpha
    with the circle generator; the energy is the sine of the circle angle, so
    the zero level contains the angle-zero copy of the seed chart and the
    flow there is transverse to every leaf of the foliation.
    """
    n_chart = cs.manifold
    if n_chart.dim < 3:
        raise ValueError("product construction needs a seed of dimension >= 3 "
                         "(beta powers degenerate below that)")
    rng = rng or np.random.default_rng(0)
    seed_samples = samples if samples is not None else n_chart.sample(rng, 32)
    report = verify_cosymplectic(cs, seed_samples)
    if not report.passed:
        raise ValueError(f"seed pair fails verification: {report.as_dict()}")
    dim = n_chart.dim + 1
    chart = ChartManifold(dim, n_chart.periodic + (True,), n_chart.periods + (2.0 * math.pi,),
                          name=f"{n_chart.name or 'N'}xS1",
                          compact=n_chart.compact)
    proj = ChartMap.coordinate_projection(dim, range(n_chart.dim))
    d_theta = coordinate_form(dim, dim - 1)
    omega = pullback(proj, cs.beta) + wedge(pullback(proj, cs.alpha), d_theta)

    def h(x: np.ndarray) -> np.ndarray:
        return np.sin(np.asarray(x, dtype=float)[..., dim - 1])

    def grad_h(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        g[..., dim - 1] = np.cos(x[..., dim - 1])
        return g

    system = HamiltonianSystem(chart, omega, h, grad_h,
                               name=f"product({cs.name or n_chart.name or 'seed'})")
    amb = np.concatenate([seed_samples, rng.uniform(0, 2 * math.pi, (len(seed_samples), 1))],
                         axis=-1)
    system.validate(amb)
    return system


@dataclass(frozen=True, eq=False)
class CollarModel:
    """Collar chart Z x (-eps, eps) with its symplectic form beta + alpha ^ dt."""

    chart: ChartManifold
    form: KForm
    epsilon: float


def build_collar_form(cs: CosymplecticStructure, epsilon: Optional[float] = None) -> CollarModel:
    """Symplectic collar of a verified pair; restricts to beta on the zero slice."""
    n_chart = cs.manifold
    eps = epsilon if epsilon is not None else 0.1 * min(n_chart.periods)
    if eps <= 0:
        raise ValueError("collar width must be positive")
    dim = n_chart.dim + 1
    chart = ChartManifold(dim, n_chart.periodic + (False,), n_chart.periods + (1.0,),
                          name=f"{n_chart.name or 'Z'}x(-{eps:g},{eps:g})")
    proj = ChartMap.coordinate_projection(dim, range(n_chart.dim))
    dt = coordinate_form(dim, dim - 1)
    form = pullback(proj, cs.beta) + wedge(pullback(proj, cs.alpha), dt)
    return CollarModel(chart, form, eps)


@dataclass(eq=False)
class ExtensionResult:
    h: Callable[[np.ndarray], np.ndarray]
    max_gradient_error: float
    loop_periods: np.ndarray


def extend_to_hamiltonian_field(sys: HamiltonianSystem,
                                X: Callable[[np.ndarray], np.ndarray],
                                samples: np.ndarray,
                                base_point: Optional[np.ndarray] = None,
                                gauss_order: int = 48,
                                tol: float = CLOSED_TOL) -> ExtensionResult:
    """Scalar function whose Hamiltonian field restricts to X.

    Integrates the pairing one-form iota_X omega along straight paths from a
    base point.  The primitive only exists when the form has no periods: any
    nonzero loop integral over a periodic coordinate raises
    PathDependenceError (nontrivial first cohomology; refuse).
    """
    alpha = interior(X, sys.omega)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    residual = max_coeff_magnitude(exterior_derivative(alpha), samples)
    if residual >= tol:
        raise ValueError(f"pairing form not closed: sampled |d(iota_X omega)| = {residual:.3e}")
    chart = sys.manifold
    base = np.zeros(chart.dim) if base_point is None else np.asarray(base_point, dtype=float)

    nodes, weights = np.polynomial.legendre.leggauss(gauss_order)
    s = 0.5 * (nodes + 1.0)
    w = 0.5 * weights

    loop_periods = np.zeros(chart.dim)
    for i in range(chart.dim):
        if not chart.periodic[i]:
            continue
        path = np.tile(base, (gauss_order, 1))
        path[:, i] = base[i] + s * chart.periods[i]
        a = covector_values(alpha, path)
        loop_periods[i] = chart.periods[i] * np.dot(w, a[:, i])
    if np.max(np.abs(loop_periods)) > tol:
        raise PathDependenceError(
            "loop periods of the pairing form do not vanish "
            f"(max {np.max(np.abs(loop_periods)):.3e}); no single-valued primitive exists")

    def h(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x - base
        path = base + s[:, None] * d[..., None, :]
        a = covector_values(alpha, path)
        integrand = np.einsum("...si,...i->...s", a, d)
        return integrand @ w

    fd = 1e-6
    grads = np.empty_like(samples)
    for i in range(chart.dim):
        e = np.zeros(chart.dim)
        e[i] = fd
        grads[:, i] = (h(samples + e) - h(samples - e)) / (2.0 * fd)
    err = float(np.max(np.abs(grads - covector_values(alpha, samples))))
    if err >= tol:
        raise PathDependenceError(f"primitive gradient mismatch {err:.3e} beyond tolerance")
    return ExtensionResult(h, err, loop_periods)
