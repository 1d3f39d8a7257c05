"""Poincaré sections: crossing detection, first-return maps, globality checks
and the mapping-torus chart of a verified section.

The section function is circle valued.  Along an orbit its angle is lifted to
a continuous real value (tracked through branch cuts), and crossings of the
level set are located where the lift passes a lattice value ``level + 2*pi*k``.
Only crossings whose oriented time derivative is positive are counted; a
two-sided count would double-cover the mapping-torus fiber.  Crossing times
are refined by bracketing plus Newton on the section angle until the angular
residual falls below 1e-12.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .forms import ChartManifold, Point, two_form_matrix
from . import phase

TWO_PI = 2.0 * math.pi

TANGENCY_MARGIN = 1e-8
ANGLE_RESIDUAL = 1e-12
ON_SECTION_TOL = 1e-8
DEFAULT_T_MAX = 1e3


class TangencyError(RuntimeError):
    """Grazing crossing: the section derivative fell below the margin."""


class NoCrossingError(RuntimeError):
    """No oriented crossing found before t_max."""


class GluingError(RuntimeError):
    """Mapping-torus gluing residual beyond tolerance."""


@dataclass(frozen=True, eq=False)
class SectionSpec:
    """Circle-valued section function with level and crossing orientation.

    ``theta`` maps coordinates (..., dim) to an angle; ``grad_theta`` is its
    gradient.  Orientation +1 counts crossings where theta increases along
    the flow.
    """

    theta: Callable[[np.ndarray], np.ndarray]
    grad_theta: Callable[[np.ndarray], np.ndarray]
    level: float = 0.0
    orientation: int = 1
    name: str = ""

    def offset(self, coords: np.ndarray) -> np.ndarray:
        """Signed angular distance to the level, wrapped to (-pi, pi]."""
        v = np.asarray(self.theta(np.asarray(coords, dtype=float))) - self.level
        return -((-v + math.pi) % TWO_PI - math.pi)

    def rate(self, system, coords: np.ndarray) -> np.ndarray:
        """Time derivative of theta along the system flow."""
        coords = np.asarray(coords, dtype=float)
        g = np.asarray(self.grad_theta(coords), dtype=float)
        return np.einsum("...i,...i->...", g, system.field(coords))


def coordinate_section(chart: ChartManifold, index: int, level: float = 0.0,
                       orientation: int = 1, name: str = "") -> SectionSpec:
    """Section {x_index = level} for a periodic coordinate."""
    period = chart.periods[index]
    scale = TWO_PI / period
    grad = np.zeros(chart.dim)
    grad[index] = scale

    return SectionSpec(
        theta=lambda x: (np.asarray(x, dtype=float)[..., index] * scale) % TWO_PI,
        grad_theta=lambda x: np.broadcast_to(grad, np.shape(x)),
        level=(level * scale) % TWO_PI,
        orientation=orientation,
        name=name or f"coord{index}={level}")


@dataclass(frozen=True, eq=False)
class ReturnRecord:
    start: Point
    return_time: float
    image: Point
    transversality_margin: float
    crossings_seen: int


@dataclass(eq=False)
class Crossing:
    time: float            # absolute time along the true flow (signed)
    state: np.ndarray      # unreduced coordinates at the crossing
    rate: float            # d theta / dt at the crossing (true flow direction)
    min_rate_seen: float   # min |d theta / dt| along the scanned orbit piece
    crossings_seen: int


@dataclass(eq=False)
class GlobalityReport:
    n_samples: int
    failures: list
    min_margin: float
    max_return_time: float
    vacuous: bool = False

    @property
    def n_pass(self) -> int:
        failed_samples = {f[0] for f in self.failures}
        return self.n_samples - len(failed_samples)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"n_samples": self.n_samples, "n_pass": self.n_pass,
                "failures": [list(f) for f in self.failures],
                "min_margin": self.min_margin,
                "max_return_time": self.max_return_time,
                "vacuous": self.vacuous, "passed": self.passed}


class _Directed:
    """Time-reversal wrapper: integrating it forward traces the orbit backward."""

    def __init__(self, system, sign: int):
        self._system = system
        self.sign = sign
        self.manifold = system.manifold

    def field(self, coords: np.ndarray) -> np.ndarray:
        return self.sign * self._system.field(coords)


def _refine_grid(sec: SectionSpec, sol, ts: np.ndarray, states: np.ndarray,
                 rounds: int = 6):
    """Subdivide the sample grid until adjacent section angles differ by less
    than pi/2, so the lift cannot slip a branch."""
    n_orbit_axis = states.ndim == 3  # (m, n, dim) batched
    vals = np.asarray(sec.theta(states), dtype=float)
    for _ in range(rounds):
        dv = np.abs(-((-np.diff(vals, axis=0) + math.pi) % TWO_PI - math.pi))
        too_wide = dv > 0.5 * math.pi
        if n_orbit_axis:
            too_wide = too_wide.any(axis=1)
        if not too_wide.any():
            break
        mid = 0.5 * (ts[:-1][too_wide] + ts[1:][too_wide])
        new_states = sol(mid)
        ts = np.concatenate([ts, mid])
        order = np.argsort(ts)
        ts = ts[order]
        states = np.concatenate([states, new_states], axis=0)[order]
        vals = np.asarray(sec.theta(states), dtype=float)
    return ts, states, vals


def _lift(vals: np.ndarray) -> np.ndarray:
    return np.unwrap(vals, axis=0)


def _bracket_first_upward(w: np.ndarray, guard: float = 1e-12):
    """Index i of the first interval [i, i+1] in which w crosses the next
    integer upward, together with that integer.  Returns (None, count) when
    no upward crossing exists; count is the number of lattice passages seen.
    Non-finite entries (singular section function on this orbit) never
    bracket."""
    floors = np.floor(w + guard)
    count = 0
    for i in range(len(w) - 1):
        step = floors[i + 1] - floors[i]
        if not np.isfinite(step):
            continue
        if step > 0:
            return i, float(floors[i] + 1.0), count
        count += int(abs(step))
    return None, 0.0, count


def _scan_first_crossing(system, sec: SectionSpec, x0: np.ndarray, t_max: float,
                         tol: float, direction: int = 1,
                         min_time: float = 1e-9) -> Crossing:
    """First oriented crossing of the section along the orbit of x0.

    ``direction`` +1 scans forward time, -1 backward.  Crossings within
    ``min_time`` of the start are ignored (the start may sit on the section).
    Raises NoCrossingError or TangencyError.
    """
    x0 = np.asarray(x0, dtype=float)
    directed = _Directed(system, direction)
    oriented = sec.orientation * direction
    if not np.isfinite(float(sec.theta(x0))):
        raise NoCrossingError("section function undefined at the starting point")
    rate0 = float(sec.rate(system, x0))
    if not np.isfinite(rate0):
        rate0 = 0.0
    chunk = min(t_max, max(2.5 * TWO_PI / max(abs(rate0), 1e-6), 1e-3))
    t_accum = 0.0
    x = x0.copy()
    lift_anchor = None
    min_rate = abs(rate0)
    crossings_seen = 0
    while t_accum < t_max - 1e-15:
        t_end = min(chunk, t_max - t_accum)
        sol = phase.integrate(directed, x, 0.0, t_end, tol, dense=True)
        m = max(65, min(4097, int(16 * t_end * max(abs(rate0), 1.0 / t_end))))
        ts = np.linspace(0.0, t_end, m)
        states = sol.sol(ts).T
        ts, states, vals = _refine_grid(sec, lambda t: sol.sol(np.atleast_1d(t)).T, ts, states)
        rates = np.abs(sec.rate(system, states))
        finite_rates = rates[np.isfinite(rates)]
        if finite_rates.size:
            min_rate = min(min_rate, float(np.min(finite_rates)))
        v = _lift(vals)
        if lift_anchor is not None:
            v += lift_anchor - v[0]
        w = oriented * (v - sec.level) / TWO_PI
        start_guard = min_time if t_accum == 0.0 else 0.0
        idx, target, seen = _bracket_first_upward(w)
        while idx is not None:
            t_star = _refine_crossing(directed, sec, sol, ts, idx, w, target, oriented, tol)
            if t_accum + t_star > start_guard:
                crossings_seen += seen + 1
                x_star = np.asarray(sol.sol(t_star), dtype=float)
                x_star, t_corr = _newton_polish(directed, sec, x_star)
                rate_star = float(sec.rate(system, x_star))
                if abs(rate_star) < TANGENCY_MARGIN:
                    raise TangencyError(
                        f"grazing crossing at t={direction * (t_accum + t_star + t_corr):.6g}: "
                        f"|d theta/dt| = {abs(rate_star):.3e} < {TANGENCY_MARGIN}")
                return Crossing(direction * (t_accum + t_star + t_corr), x_star,
                                rate_star, min_rate, crossings_seen)
            # the hit was the guarded start; look further along this chunk
            idx2, target, seen2 = _bracket_first_upward(w[idx + 1:])
            seen += seen2
            idx = None if idx2 is None else idx2 + idx + 1
        crossings_seen += seen
        t_accum += t_end
        x = states[-1]
        lift_anchor = v[-1]
        chunk = min(2.0 * chunk, t_max)
    raise NoCrossingError(f"no oriented crossing before t_max = {t_max:g}")


def _refine_root(g, a: float, b: float) -> float:
    """Root of g on [a, b] bracketed by a lattice passage.

    A sample may sit on the lattice to rounding accuracy, leaving both
    endpoint values on one side; Newton polish finishes the refinement from
    the closer endpoint in that case.
    """
    ga, gb = g(a), g(b)
    if abs(ga) < 1e-13:
        return a
    if abs(gb) < 1e-13:
        return b
    if ga * gb > 0.0:
        return a if abs(ga) < abs(gb) else b
    return float(brentq(g, a, b, xtol=1e-14, rtol=8.9e-16))


def _refine_crossing(directed, sec, sol, ts, idx, w, target, oriented, tol) -> float:
    """Bracketed root of the lifted angle on [ts[idx], ts[idx+1]]."""

    def g(t: float) -> float:
        x = sol.sol(t)
        return float(oriented * sec.offset(x)) / TWO_PI

    return _refine_root(g, float(ts[idx]), float(ts[idx + 1]))


def _newton_polish(directed, sec, x: np.ndarray, max_iter: int = 8):
    """Advance the state by micro-steps until |theta - level| < 1e-12.

    The correction times are tiny, so single fourth-order steps of the flow
    keep full precision.
    """
    t_corr = 0.0
    for _ in range(max_iter):
        f = float(sec.offset(x))
        if abs(f) < ANGLE_RESIDUAL:
            break
        r = float(np.einsum("i,i->", np.asarray(sec.grad_theta(x), dtype=float),
                            directed.field(x)))
        if abs(r) < 1e-14:
            break
        dt = -f / r
        x = _rk4_step(directed, x, dt)
        t_corr += dt
    return x, t_corr


def _rk4_step(system, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = system.field(x)
    k2 = system.field(x + 0.5 * dt * k1)
    k3 = system.field(x + 0.5 * dt * k2)
    k4 = system.field(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def first_return(system, sec: SectionSpec, p: Point, t_max: float = DEFAULT_T_MAX,
                 tol: float = phase.DEFAULT_FLOW_TOL) -> ReturnRecord:
    """First positively-oriented return of a section point.

    The start must lie on the section and be transverse to the flow.  The
    crossing time is bracketed on a lifted-angle grid and polished by Newton
    to an angular residual below 1e-12.
    """
    x0 = np.asarray(p.coords, dtype=float)
    if abs(float(sec.offset(x0))) > ON_SECTION_TOL:
        raise ValueError(f"start point is not on the section: |theta - level| = "
                         f"{abs(float(sec.offset(x0))):.3e}")
    rate0 = float(sec.rate(system, x0))
    if abs(rate0) < TANGENCY_MARGIN:
        raise TangencyError(f"flow tangent to section at start: |d theta/dt| = {abs(rate0):.3e}")
    crossing = _scan_first_crossing(system, sec, x0, t_max, tol, direction=1)
    # verification pass on the true flow: re-integrate to the found time and
    # re-polish, so the image does not inherit interpolant error
    x_end = phase.flow_raw(system, x0, crossing.time, tol)
    x_end, t_corr = _newton_polish(_Directed(system, 1), sec, x_end)
    image = system.manifold.point(x_end)
    return ReturnRecord(start=p, return_time=crossing.time + t_corr, image=image,
                        transversality_margin=crossing.min_rate_seen,
                        crossings_seen=crossing.crossings_seen)


def verify_global(system, sec: SectionSpec, samples: np.ndarray,
                  t_max: float = DEFAULT_T_MAX, tol: float = phase.DEFAULT_FLOW_TOL,
                  batch: bool = True) -> GlobalityReport:
    """Check that every sampled orbit crosses the section in forward and in
    backward time within t_max.

    Failures are report entries, not exceptions.  The report carries the
    minimal transversality margin and the maximal forward crossing time seen.
    Globality is certified over the sample set only.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        return GlobalityReport(0, [], math.inf, 0.0, vacuous=True)
    failures = []
    min_margin = math.inf
    max_time = 0.0
    for direction in (1, -1):
        if batch:
            times, margins, missed = _batch_first_crossings(system, sec, samples,
                                                            t_max, tol, direction)
            for i in missed:
                failures.append((int(i), "forward" if direction == 1 else "backward",
                                 "no crossing"))
            ok = [i for i in range(len(samples)) if i not in set(missed)]
            if ok:
                min_margin = min(min_margin, float(np.min(margins[ok])))
                if direction == 1:
                    max_time = float(np.max(np.abs(times[ok])))
        else:
            for i, x in enumerate(samples):
                try:
                    c = _scan_first_crossing(system, sec, x, t_max, tol, direction)
                    min_margin = min(min_margin, c.min_rate_seen)
                    if direction == 1:
                        max_time = max(max_time, abs(c.time))
                except NoCrossingError:
                    failures.append((i, "forward" if direction == 1 else "backward",
                                     "no crossing"))
                except TangencyError as exc:
                    failures.append((i, "forward" if direction == 1 else "backward",
                                     f"tangency: {exc}"))
    return GlobalityReport(len(samples), failures, min_margin, max_time)


def _batch_first_crossings(system, sec: SectionSpec, samples: np.ndarray,
                           t_max: float, tol: float, direction: int,
                           keep_states: bool = False):
    """Vectorised first-crossing times for a batch of starting states.

    Integrates the whole batch as one stacked system, locates per-orbit
    upward lattice passages of the lifted angle on a shared refined grid, and
    refines each on the dense interpolant.  Returns (times, margins, missed)
    or, with keep_states, (times, margins, missed, crossing_states).
    """
    n, dim = samples.shape
    crossing_states = np.full((n, dim), np.nan) if keep_states else None
    directed = _Directed(system, direction)
    oriented = sec.orientation * direction
    rates0 = np.abs(sec.rate(system, samples))
    finite0 = rates0[np.isfinite(rates0)]
    typical = max(float(np.median(finite0)) if finite0.size else 0.0, 1e-6)
    chunk = min(t_max, max(2.5 * TWO_PI / typical, 1e-3))
    times = np.full(n, np.nan)
    margins = np.array(rates0, dtype=float)
    active = np.arange(n)
    states = samples.copy()
    anchors = None
    t_accum = 0.0
    while active.size and t_accum < t_max - 1e-15:
        t_end = min(chunk, t_max - t_accum)
        sol = phase.integrate_batch(directed, states, 0.0, t_end, tol, dense=True)

        def interp(t):
            out = sol.sol(np.atleast_1d(t)).T.reshape(-1, len(active), dim)
            return out

        m = max(65, min(2049, int(16 * t_end * max(typical, 1.0 / t_end))))
        ts = np.linspace(0.0, t_end, m)
        grid_states = interp(ts)
        ts, grid_states, vals = _refine_grid(sec, interp, ts, grid_states)
        rates = np.abs(sec.rate(system, grid_states))
        margins[active] = np.minimum(margins[active], rates.min(axis=0))
        v = _lift(vals)
        if anchors is not None:
            v += anchors[None, :] - v[0:1, :]
        w = oriented * (v - sec.level) / TWO_PI
        start_guard = 1e-9 if t_accum == 0.0 else 0.0
        found_local = []
        for col, orbit in enumerate(active):
            idx, target, _seen = _bracket_first_upward(w[:, col])
            while idx is not None:
                def g(t, col=col):
                    x = sol.sol(t).reshape(len(active), dim)[col]
                    return float(oriented * sec.offset(x)) / TWO_PI
                t_star = _refine_root(g, float(ts[idx]), float(ts[idx + 1]))
                if t_accum + t_star > start_guard:
                    x_star = sol.sol(t_star).reshape(len(active), dim)[col]
                    x_star, t_corr = _newton_polish(directed, sec, x_star)
                    times[orbit] = direction * (t_accum + t_star + t_corr)
                    if keep_states:
                        crossing_states[orbit] = x_star
                    found_local.append(col)
                    break
                idx2, target, _s = _bracket_first_upward(w[idx + 1:, col])
                idx = None if idx2 is None else idx2 + idx + 1
        keep = np.array([c for c in range(len(active)) if c not in set(found_local)], dtype=int)
        active = active[keep]
        states = grid_states[-1][keep]
        anchors = v[-1, keep]
        t_accum += t_end
        chunk = min(2.0 * chunk, t_max)
    missed = list(active)
    if keep_states:
        return times, margins, missed, crossing_states
    return times, margins, missed


# -- return-map Jacobian ------------------------------------------------------


def section_coordinates(system, sec: SectionSpec, p: Point):
    """Local graph coordinates on the section through p.

    Eliminates the coordinates best aligned with (d theta, dH) (only the
    theta constraint for plain flows) and treats the section as a graph over
    the remaining ones.  For Hamiltonian systems a full conjugate coordinate
    pair (2i, 2i+1) is eliminated whenever one carries the constraints: with
    a pairwise-block symplectic form the remaining coordinates then inherit a
    constant restricted form, which is what makes the return-map determinant
    equal to one.  Returns (free_indices, embed, project) where embed solves
    the constraints by Newton iteration.
    """
    x0 = np.asarray(p.coords, dtype=float)
    dim = x0.size
    has_energy = hasattr(system, "grad_h")
    level_h = float(system.energy(x0)) if has_energy else None

    def constraints(x):
        c = [float(sec.offset(x))]
        if has_energy:
            c.append(float(system.energy(x)) - level_h)
        return np.array(c)

    def constraint_grads(x):
        g = [np.asarray(sec.grad_theta(x), dtype=float)]
        if has_energy:
            g.append(np.asarray(system.grad_h(x), dtype=float))
        return np.stack(g)

    G = constraint_grads(x0)
    n_con = G.shape[0]
    from itertools import combinations as _comb
    candidates = []
    if n_con == 2 and dim % 2 == 0:
        candidates.append([(2 * i, 2 * i + 1) for i in range(dim // 2)])
    candidates.append(list(_comb(range(dim), n_con)))
    elim, best = None, -1.0
    for group in candidates:
        for cols in group:
            d = abs(np.linalg.det(G[:, cols]))
            if d > best:
                best, elim = d, cols
        if best > 1e-8:
            break
    if best < 1e-12:
        raise ValueError("degenerate constraints: no invertible elimination block")
    free = tuple(i for i in range(dim) if i not in elim)

    def embed(s: np.ndarray) -> np.ndarray:
        x = x0.copy()
        x[list(free)] = s
        for _ in range(60):
            c = constraints(x)
            if np.max(np.abs(c)) < 1e-13:
                return x
            A = constraint_grads(x)[:, list(elim)]
            x[list(elim)] -= np.linalg.solve(A, c)
        raise RuntimeError("section embedding did not converge")

    def project(x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)[list(free)]

    return free, embed, project


def section_frame(system, sec: SectionSpec, p: Point) -> np.ndarray:
    """Tangent frame of the section at p in ambient coordinates, one column
    per section coordinate (implicit-function derivative of the embedding)."""
    free, embed, _ = section_coordinates(system, sec, p)
    x0 = np.asarray(p.coords, dtype=float)
    dim = x0.size
    elim = [i for i in range(dim) if i not in free]
    g = [np.asarray(sec.grad_theta(x0), dtype=float)]
    if hasattr(system, "grad_h"):
        g.append(np.asarray(system.grad_h(x0), dtype=float))
    G = np.stack(g)
    A = G[:, elim]
    B = G[:, list(free)]
    E = np.zeros((dim, len(free)))
    E[list(free), np.arange(len(free))] = 1.0
    E[elim, :] = -np.linalg.solve(A, B)
    return E


def restricted_form_matrix(system, sec: SectionSpec, p: Point) -> np.ndarray:
    """Matrix of the ambient two-form on the section frame at p."""
    E = section_frame(system, sec, p)
    M = two_form_matrix(system.omega, np.asarray(p.coords, dtype=float))
    return E.T @ M @ E


def return_map_jacobian(system, sec: SectionSpec, p: Point, fd_step: float = 1e-6,
                        t_max: float = DEFAULT_T_MAX,
                        tol: float = phase.DEFAULT_FLOW_TOL) -> np.ndarray:
    """Central-difference Jacobian of the return map in section coordinates.

    For two-dimensional sections the determinant is 1 up to integration
    error (the return map preserves the restricted symplectic form).
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    free, embed, project = section_coordinates(system, sec, p)
    chart = system.manifold
    s0 = project(p.coords)
    base_img = first_return(system, sec, system.manifold.point(embed(s0)),
                            t_max, tol).image.coords
    k = len(free)
    J = np.zeros((k, k))
    for a in range(k):
        sp, sm = s0.copy(), s0.copy()
        sp[a] += fd_step
        sm[a] -= fd_step
        img_p = first_return(system, sec, chart.point(embed(sp)), t_max, tol).image.coords
        img_m = first_return(system, sec, chart.point(embed(sm)), t_max, tol).image.coords
        dcol = chart.wrapped_delta(img_p, base_img) - chart.wrapped_delta(img_m, base_img)
        J[:, a] = project(dcol + base_img) - project(base_img)
        J[:, a] /= (2.0 * fd_step)
    return J


def return_map_determinants(system, sec: SectionSpec, points: Sequence[np.ndarray],
                            fd_step: float = 1e-6, t_max: float = DEFAULT_T_MAX,
                            tol: float = phase.DEFAULT_FLOW_TOL) -> np.ndarray:
    """Determinants of the return-map Jacobian at many section points.

    All finite-difference stencil orbits are integrated as one batch; the
    smooth integration error is shared across a stencil and cancels in the
    central differences, so the determinants match the per-point path to
    finite-difference accuracy at a fraction of the cost.
    """
    chart = system.manifold
    stencils = []
    projections = []
    for x in points:
        p = chart.point(np.asarray(x, dtype=float))
        free, embed, project = section_coordinates(system, sec, p)
        s0 = project(p.coords)
        block = [embed(s0)]
        for a in range(len(free)):
            for sign in (1.0, -1.0):
                s = s0.copy()
                s[a] += sign * fd_step
                block.append(embed(s))
        stencils.append(np.stack(block))
        projections.append(project)
    k = stencils[0].shape[0] // 2  # section dimension
    big = np.concatenate(stencils)
    times, margins, missed, states = _batch_first_crossings(
        system, sec, big, t_max, tol, 1, keep_states=True)
    if missed:
        raise NoCrossingError(f"{len(missed)} stencil orbits did not return before t_max")
    dets = np.empty(len(stencils))
    for i, project in enumerate(projections):
        # unreduced end states are continuous in the initial condition, so raw
        # differences need no period wrapping
        block = states[i * (2 * k + 1):(i + 1) * (2 * k + 1)]
        J = np.empty((k, k))
        for a in range(k):
            J[:, a] = project(block[1 + 2 * a] - block[2 + 2 * a]) / (2.0 * fd_step)
        dets[i] = np.linalg.det(J)
    return dets


# -- mapping torus ------------------------------------------------------------


@dataclass(eq=False)
class MappingTorusChart:
    """Tabulated suspension chart Psi(p, t) = flow_{t*T(p)}(p) over a fiber grid."""

    fiber_grid: list
    records: list
    t_samples: np.ndarray
    table: np.ndarray            # (n_grid, n_t, dim), reduced coordinates
    gluing_residual: float
    energy_residual: float

    @property
    def holonomy(self) -> list:
        return [r.image for r in self.records]


def mapping_torus_chart(system, sec: SectionSpec, grid: Sequence[Point],
                        n_time: int = 9, t_max: float = DEFAULT_T_MAX,
                        tol: float = phase.DEFAULT_FLOW_TOL) -> MappingTorusChart:
    """Tabulate the suspension chart over a section grid.

    Checks the gluing Psi(p, 1) = holonomy(p) within 10*tol and, for
    Hamiltonian systems, that every table entry stays on the energy level
    within 1e-8.
    """
    chart = system.manifold
    t_samples = np.linspace(0.0, 1.0, n_time)
    records, rows = [], []
    gluing = 0.0
    energy_res = 0.0
    has_energy = hasattr(system, "energy")
    for p in grid:
        rec = first_return(system, sec, p, t_max, tol)
        records.append(rec)
        sol = phase.integrate(system, p.coords, 0.0, rec.return_time, tol, dense=True)
        states = sol.sol(t_samples * rec.return_time).T
        states[0] = p.coords
        rows.append(np.stack([chart.reduce(s) for s in states]))
        gap = np.max(np.abs(chart.wrapped_delta(chart.reduce(states[-1]),
                                                rec.image.coords)))
        gluing = max(gluing, float(gap))
        if has_energy:
            h0 = float(system.energy(p.coords))
            energy_res = max(energy_res, float(np.max(np.abs(system.energy(states) - h0))))
    gluing_tol = 10.0 * tol
    if gluing > gluing_tol:
        raise GluingError(f"gluing residual {gluing:.3e} exceeds {gluing_tol:.3e}; "
                          "section is inconsistent over the grid")
    return MappingTorusChart(list(grid), records, t_samples, np.stack(rows),
                             gluing, energy_res)


def write_crossings_csv(path, rows: Sequence[Sequence[float]], dim: int) -> None:
    """Crossing point cloud: one row per crossing.

    Columns: orbit_id, t, coord_0 .. coord_{dim-1}, margin.
    """
    header = ["orbit_id", "t"] + [f"coord_{i}" for i in range(dim)] + ["margin"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else int(v)
                             for v in row])
