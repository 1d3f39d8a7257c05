"""Hamiltonian systems on flat charts and their flows.

The Hamiltonian vector field is obtained pointwise by solving the linear
system pairing the symplectic form with the differential of the energy
("insert X into omega, read off dH").  Sign convention, fixed throughout:

    iota_{X_H} omega = dH

Classical references differ by a sign; every derived quantity here (flows,
return maps, transversality margins) uses this convention.

Flows integrate with an adaptive high-order explicit scheme (DOP853) at a
caller-given local tolerance; a fixed-step implicit midpoint rule is provided
for long-time runs.  Systems are immutable and flow evaluations independent,
so batches of initial conditions may be integrated concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .forms import (ChartManifold, KForm, Point, TangentVector,
                    exterior_derivative, max_coeff_magnitude, two_form_matrix)

RCOND_MIN = 1e-10
FIELD_RESIDUAL_MAX = 1e-10
CLOSED_TOL = 1e-6
DEFAULT_FLOW_TOL = 1e-10


class SingularOmegaError(RuntimeError):
    """The symplectic coefficient matrix is numerically degenerate."""

    def __init__(self, rcond: float, coords: np.ndarray):
        super().__init__(f"symplectic matrix near-singular (rcond estimate {rcond:.3e}) "
                         f"at {np.array2string(np.asarray(coords), precision=4)}")
        self.rcond = rcond


class StepSizeUnderflow(RuntimeError):
    """Adaptive integration failed to reach the target time."""


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """Symplectic chart, energy function and optional global primitive.

    ``h`` and ``grad_h`` are vectorised callables on coordinate arrays of
    shape (..., dim).  ``lam``, when present, is a one-form whose exterior
    derivative reproduces ``omega`` (the exact case).
    """

    manifold: ChartManifold
    omega: KForm
    h: Callable[[np.ndarray], np.ndarray]
    grad_h: Callable[[np.ndarray], np.ndarray]
    lam: Optional[KForm] = None
    name: str = ""

    def __post_init__(self):
        if self.manifold.dim % 2:
            raise ValueError("Hamiltonian system needs an even-dimensional chart")
        if self.omega.degree != 2 or self.omega.dim != self.manifold.dim:
            raise ValueError("omega must be a two-form on the system chart")
        if self.lam is not None and (self.lam.degree != 1 or self.lam.dim != self.manifold.dim):
            raise ValueError("lambda must be a one-form on the system chart")

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def point(self, coords: Sequence[float]) -> Point:
        return self.manifold.point(coords)

    def field(self, coords: np.ndarray) -> np.ndarray:
        """Hamiltonian vector field components, vectorised over (..., dim).

        Solves omega(X, .) = dH(.) at each point and verifies the residual.
        """
        coords = np.asarray(coords, dtype=float)
        M = two_form_matrix(self.omega, coords)
        g = np.asarray(self.grad_h(coords), dtype=float)
        try:
            X = np.linalg.solve(np.swapaxes(M, -1, -2), g[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularOmegaError(0.0, coords) from exc
        residual = np.max(np.abs(np.einsum("...ji,...j->...i", M, X) - g))
        scale = max(1.0, float(np.max(np.abs(g))))
        if residual > FIELD_RESIDUAL_MAX * scale:
            rcond = float(1.0 / np.max(np.linalg.cond(M)))
            raise SingularOmegaError(rcond, coords)
        return X

    def energy(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(self.h(np.asarray(coords, dtype=float)), dtype=float)

    def validate(self, samples: np.ndarray, closed_tol: float = CLOSED_TOL) -> dict:
        """Sampled structural checks: omega closed and nondegenerate, and
        d(lambda) = omega when a primitive is declared.  Returns margins."""
        samples = np.asarray(samples, dtype=float)
        report: dict = {}
        if self.omega.degree + 1 <= self.dim:
            domega = exterior_derivative(self.omega)
            report["d_omega_max"] = max_coeff_magnitude(domega, samples)
            if report["d_omega_max"] >= closed_tol:
                raise ValueError(f"omega is not closed: sampled |d omega| = {report['d_omega_max']:.3e}")
        else:
            report["d_omega_max"] = 0.0
        M = two_form_matrix(self.omega, samples)
        svals = np.linalg.svd(M, compute_uv=False)
        rcond = float(np.min(svals[..., -1] / svals[..., 0]))
        report["omega_rcond_min"] = rcond
        if rcond < RCOND_MIN:
            raise ValueError(f"omega degenerate at a sample (rcond {rcond:.3e})")
        if self.lam is not None:
            diff = exterior_derivative(self.lam) - self.omega
            report["d_lambda_minus_omega_max"] = max_coeff_magnitude(diff, samples)
            if report["d_lambda_minus_omega_max"] >= closed_tol:
                raise ValueError("declared primitive does not differentiate to omega: "
                                 f"sampled max {report['d_lambda_minus_omega_max']:.3e}")
        return report


@dataclass(frozen=True, eq=False)
class FlowSystem:
    """A plain first-order flow on a chart (no symplectic structure).

    Shares the flow/section machinery with Hamiltonian systems; suspension
    examples use it directly.
    """

    manifold: ChartManifold
    field_fn: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def point(self, coords: Sequence[float]) -> Point:
        return self.manifold.point(coords)

    def field(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(self.field_fn(np.asarray(coords, dtype=float)), dtype=float)


@dataclass(frozen=True, eq=False)
class EnergySurface:
    """Implicit level set Z = H^{-1}(level).

    For chart models whose level set is a coordinate slice, ``slice_coord``
    and ``slice_value`` describe the embedded copy used to restrict forms.
    """

    system: HamiltonianSystem
    level: float
    slice_coord: Optional[int] = None
    slice_value: Optional[float] = None

    def regularity_margin(self, samples: np.ndarray) -> float:
        """min ||dH|| over samples; must stay positive on a regular level."""
        g = np.asarray(self.system.grad_h(np.asarray(samples, dtype=float)))
        return float(np.min(np.linalg.norm(g, axis=-1)))

    @property
    def section_chart(self) -> ChartManifold:
        """Chart of the slice copy of Z (slice models only)."""
        if self.slice_coord is None:
            raise ValueError("energy surface is not a coordinate slice")
        m = self.system.manifold
        keep = [i for i in range(m.dim) if i != self.slice_coord]
        return ChartManifold(m.dim - 1,
                             tuple(m.periodic[i] for i in keep),
                             tuple(m.periods[i] for i in keep),
                             name=f"{m.name or 'chart'}|slice{self.slice_coord}")

    def inclusion(self):
        """ChartMap embedding the slice copy of Z into the ambient chart."""
        from .forms import ChartMap
        if self.slice_coord is None:
            raise ValueError("energy surface is not a coordinate slice")
        m = self.system.manifold
        keep = [i for i in range(m.dim) if i != self.slice_coord]
        return ChartMap.coordinate_inclusion(m.dim, keep, {self.slice_coord: float(self.slice_value)})

    def projection(self):
        """ChartMap collapsing the ambient chart onto the slice coordinates.

        Used to extend forms defined on Z constantly in the collar direction.
        """
        from .forms import ChartMap
        if self.slice_coord is None:
            raise ValueError("energy surface is not a coordinate slice")
        m = self.system.manifold
        keep = [i for i in range(m.dim) if i != self.slice_coord]
        return ChartMap.coordinate_projection(m.dim, keep)


@dataclass(frozen=True, eq=False)
class FlowResult:
    point: Point
    energy_error: float


def _rhs(system) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        return system.field(y)
    return rhs


def integrate(system, x0: np.ndarray, t0: float, t1: float, tol: float = DEFAULT_FLOW_TOL,
              dense: bool = False):
    """Low-level adaptive integration of the system field on raw coordinates.

    Coordinates are NOT reduced: trajectories live in the periodic cover so
    section functions can be lifted continuously.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if t1 == t0:
        raise ValueError("empty integration interval")
    x0 = np.asarray(x0, dtype=float)
    sol = solve_ivp(_rhs(system), (t0, t1), np.ravel(x0), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=dense)
    if not sol.success:
        raise StepSizeUnderflow(f"integration stalled: {sol.message}")
    return sol


def integrate_batch(system, x0: np.ndarray, t0: float, t1: float,
                    tol: float = DEFAULT_FLOW_TOL, dense: bool = False):
    """Integrate a batch of initial conditions (n, dim) as one stacked system."""
    x0 = np.asarray(x0, dtype=float)
    n, dim = x0.shape

    def rhs(_t, y):
        return system.field(y.reshape(n, dim)).ravel()

    sol = solve_ivp(rhs, (t0, t1), x0.ravel(), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=dense)
    if not sol.success:
        raise StepSizeUnderflow(f"batch integration stalled: {sol.message}")
    return sol


def flow(system, p0: Point, t: float, tol: float = DEFAULT_FLOW_TOL) -> FlowResult:
    """Time-t flow map of the system field.

    Periodic coordinates are reduced on output; the energy error along the
    step is reported (Hamiltonian systems only, else 0).
    """
    x0 = p0.coords
    if t == 0.0:
        return FlowResult(p0, 0.0)
    sol = integrate(system, x0, 0.0, t, tol)
    x1 = sol.y[:, -1]
    drift = 0.0
    if hasattr(system, "energy"):
        drift = float(abs(system.energy(x1) - system.energy(x0)))
    return FlowResult(system.manifold.point(x1), drift)


def flow_raw(system, x0: np.ndarray, t: float, tol: float = DEFAULT_FLOW_TOL) -> np.ndarray:
    """Flow on raw (unreduced) coordinates; helper for section tracking."""
    if t == 0.0:
        return np.asarray(x0, dtype=float).copy()
    return integrate(system, x0, 0.0, t, tol).y[:, -1]


def flow_implicit_midpoint(system, p0: Point, t: float, dt: float = 1e-3) -> FlowResult:
    """Fixed-step implicit midpoint flow, for long-time symplectic runs."""
    x = p0.coords.copy()
    n_steps = max(1, int(round(abs(t) / dt)))
    hstep = t / n_steps
    for _ in range(n_steps):
        mid = x + 0.5 * hstep * system.field(x)
        for _ in range(50):
            mid_new = x + 0.5 * hstep * system.field(mid)
            if np.max(np.abs(mid_new - mid)) < 1e-14:
                mid = mid_new
                break
            mid = mid_new
        x = 2.0 * mid - x
    drift = 0.0
    if hasattr(system, "energy"):
        drift = float(abs(system.energy(x) - system.energy(p0.coords)))
    return FlowResult(system.manifold.point(x), drift)


def hamiltonian_vector_field(sys: HamiltonianSystem, p: Point) -> TangentVector:
    """Hamiltonian vector field at a point, with a conditioning guard."""
    M = two_form_matrix(sys.omega, p.coords)
    svals = np.linalg.svd(M, compute_uv=False)
    rcond = float(svals[-1] / svals[0])
    if rcond < RCOND_MIN:
        raise SingularOmegaError(rcond, p.coords)
    return TangentVector(p, sys.field(p.coords))


def energy_drift(sys: HamiltonianSystem, p0: Point, t_max: float, samples: int = 200,
                 tol: float = DEFAULT_FLOW_TOL) -> float:
    """Maximum |H(flow_t(p0)) - H(p0)| over sampled times in [0, t_max]."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    sol = integrate(sys, p0.coords, 0.0, t_max, tol, dense=True)
    ts = np.linspace(0.0, t_max, samples)
    states = sol.sol(ts).T
    h0 = sys.energy(p0.coords)
    return float(np.max(np.abs(sys.energy(states) - h0)))


def divergence_check(sys, p: Point, h: float = 1e-5) -> float:
    """Finite-difference divergence of the system field at p.

    Hamiltonian fields are volume preserving, so the value is a numerical
    zero up to the finite-difference floor.
    """
    x = p.coords
    dim = x.shape[-1]
    div = 0.0
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = h
        div += (sys.field(x + e)[i] - sys.field(x - e)[i]) / (2.0 * h)
    return float(div)
