"""Non-existence verdicts for global transverse Poincaré sections.

Two families of obstructions:

* exactness: when the symplectic form has a verified global primitive, no
  compact submanifold can be symplectic (its area integral would have to be
  both positive and zero by Stokes), so no compact level set of any energy
  function admits a global transverse section.  The Stokes test makes this
  computable: the integral of the restricted form over any meshed closed
  surface must vanish.
* cohomology: an energy hypersurface carrying such a section carries a
  cosymplectic pair, whose powers represent nonzero classes in every degree,
  so all Betti numbers must be positive.  Betti numbers come from a curated
  catalog of standard manifolds, not from computed homology; likewise the
  compactness/simple-connectivity flags of ambient manifolds are declared
  metadata.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .forms import ChartMap, KForm, evaluate_frame, exterior_derivative, max_coeff_magnitude
from .phase import HamiltonianSystem

PRIMITIVE_TOL = 1e-6
DEFAULT_QUAD_NODES = 256


class PrimitiveError(ValueError):
    """Declared primitive data is inconsistent with the symplectic form."""


@dataclass(frozen=True, eq=False)
class MeshedSurface:
    """Closed parametrized 2-submanifold over a rectangular parameter patch.

    ``patch`` maps parameters (u, v) in [0, extents[0]) x [0, extents[1]) into
    the ambient chart.  Closedness is encoded by the parametrization (periodic
    parameters, or degenerate edges such as sphere poles) and declared by the
    builder.
    """

    patch: ChartMap
    extents: tuple[float, float]
    closed: bool = True
    name: str = ""

    def __post_init__(self):
        if self.patch.source_dim != 2:
            raise ValueError("meshed surface needs a 2-parameter patch")
        if any(e <= 0 for e in self.extents):
            raise ValueError("parameter extents must be positive")

    def nodes(self, n: int) -> np.ndarray:
        """Tensor-product midpoint nodes, shape (n*n, 2)."""
        u = (np.arange(n) + 0.5) * self.extents[0] / n
        v = (np.arange(n) + 0.5) * self.extents[1] / n
        U, V = np.meshgrid(u, v, indexing="ij")
        return np.stack([U.ravel(), V.ravel()], axis=-1)


def surface_integral(form: KForm, surf: MeshedSurface, n: int = DEFAULT_QUAD_NODES) -> float:
    """Integral of a two-form over the surface by composite midpoint quadrature."""
    if form.degree != 2:
        raise ValueError("surface integral needs a two-form")
    params = surf.nodes(n)
    pts = surf.patch.value(params)
    frame = surf.patch.jacobian(params)
    vals = evaluate_frame(form, pts, frame)
    cell = (surf.extents[0] / n) * (surf.extents[1] / n)
    return float(np.sum(vals) * cell)


def stokes_exactness_check(sys: HamiltonianSystem, surf: MeshedSurface,
                           n: int = DEFAULT_QUAD_NODES,
                           samples: Optional[np.ndarray] = None) -> float:
    """Integral of the restricted symplectic form over a closed surface.

    Requires a verified primitive; the result must vanish within quadrature
    tolerance, certifying that no closed surface carries the strictly
    positive symplectic area a symplectic submanifold would need.
    """
    if sys.lam is None:
        raise PrimitiveError("no global primitive declared for the symplectic form")
    if not surf.closed:
        raise ValueError("the Stokes test needs a closed surface")
    check_primitive(sys, samples)
    return surface_integral(sys.omega, surf, n)


def check_primitive(sys: HamiltonianSystem, samples: Optional[np.ndarray] = None,
                    tol: float = PRIMITIVE_TOL) -> float:
    """Sampled residual of d(lambda) - omega; raises on mismatch."""
    if sys.lam is None:
        raise PrimitiveError("no global primitive declared")
    if samples is None:
        samples = sys.manifold.sample(np.random.default_rng(11), 32)
    residual = max_coeff_magnitude(exterior_derivative(sys.lam) - sys.omega, samples)
    if residual >= tol:
        raise PrimitiveError(f"declared primitive fails d(lambda) = omega: "
                             f"sampled residual {residual:.3e}")
    return float(residual)


@dataclass(frozen=True, eq=False)
class Verdict:
    verdict: str            # "negative" or "inconclusive"
    statement: str
    evidence: dict

    @property
    def negative(self) -> bool:
        return self.verdict == "negative"

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "statement": self.statement,
                "evidence": self.evidence}


def exactness_verdict(sys: HamiltonianSystem,
                      samples: Optional[np.ndarray] = None) -> Verdict:
    """Global-section verdict from exactness of the symplectic form."""
    if sys.lam is None:
        return Verdict("inconclusive",
                       "no global primitive declared; exactness obstruction does not apply",
                       {"primitive": None})
    residual = check_primitive(sys, samples)
    statement = ("exact symplectic form: no compact level set of any Hamiltonian "
                 "on this manifold admits a global transverse Poincaré section")
    evidence = {"primitive_residual": residual}
    if sys.manifold.cotangent_model:
        statement += (" (canonical cotangent-bundle form; the obstruction covers "
                      "every level energy surface)")
        evidence["cotangent_model"] = True
    return Verdict("negative", statement, evidence)


@dataclass(frozen=True, eq=False)
class BettiProfile:
    """Catalog Betti numbers b_0 .. b_{dim} of a named manifold."""

    name: str
    betti: tuple[int, ...]

    def __post_init__(self):
        betti = tuple(int(b) for b in self.betti)
        if not betti or any(b < 0 for b in betti):
            raise ValueError("malformed Betti profile")
        if betti[0] < 1:
            raise ValueError("b_0 must be at least 1")
        object.__setattr__(self, "betti", betti)

    @property
    def dim(self) -> int:
        return len(self.betti) - 1

    def satisfies_poincare_duality(self) -> bool:
        return self.betti == self.betti[::-1]


@dataclass(frozen=True, eq=False)
class BettiResult:
    passed: bool
    failing_degree: Optional[int]
    statement: str

    def as_dict(self) -> dict:
        return {"passed": self.passed, "failing_degree": self.failing_degree,
                "statement": self.statement}


def betti_necessary_condition(bp: BettiProfile) -> BettiResult:
    """Necessary condition for a hypersurface to carry a global transverse
    section: every Betti number positive.

    Applies to odd-dimensional manifolds (even-length profile).  A failure
    names the vanishing degree and rules the section out; a pass is necessary
    only, never sufficient.
    """
    if len(bp.betti) % 2:
        raise ValueError(f"profile of even-dimensional manifold {bp.name!r}: "
                         "the obstruction applies to odd-dimensional level sets")
    for degree, b in enumerate(bp.betti):
        if b < 1:
            return BettiResult(False, degree,
                               f"{bp.name}: H^{degree} is trivial, so no cosymplectic pair "
                               "and no global transverse Poincaré section can exist")
    return BettiResult(True, None,
                       f"{bp.name}: all Betti numbers positive (necessary condition only)")


def simply_connected_verdict(compact: bool, simply_connected: bool,
                             connected_level_set: bool = True,
                             name: str = "") -> Verdict:
    """Global-section verdict for level sets in a compact simply connected
    ambient manifold.

    A transverse symplectic field would push one side of a separating
    hypersurface into a proper subset of itself with the same volume, which
    is impossible; hence the negative verdict whenever both flags hold.  The
    level set must be declared connected; disconnected level sets are out of
    scope and refused.
    """
    if not connected_level_set:
        raise ValueError("level set not declared connected; verdict undefined "
                         "for disconnected hypersurfaces")
    label = f" on {name}" if name else ""
    if compact and simply_connected:
        return Verdict(
            "negative",
            f"compact simply connected ambient manifold{label}: every separating "
            "hypersurface bounds, so no transverse symplectic field and no level "
            "set with a global transverse Poincaré section exists",
            {"compact": True, "simply_connected": True})
    reason = []
    if not compact:
        reason.append("not compact")
    if not simply_connected:
        reason.append("not simply connected")
    return Verdict("inconclusive",
                   f"ambient manifold{label} is {' and '.join(reason)}; "
                   "the volume argument does not apply",
                   {"compact": compact, "simply_connected": simply_connected})
