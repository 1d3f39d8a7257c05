"""Pointwise exterior calculus on flat coordinate charts.

A degree-k form is stored as its coefficient function over the lexicographic
basis of k-element index subsets.  Coefficient callables are vectorised: they
take coordinate arrays of shape ``(..., dim)`` and return ``(..., C(dim, k))``.
Every manifold in scope is a flat chart with optional periodic coordinates
(tori), so pointwise coefficients are a complete description.

All values are immutable after construction and safe to evaluate concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: coefficient function of a form: coords (..., dim) -> (..., n_coeffs)
CoeffFn = Callable[[np.ndarray], np.ndarray]
#: vector field function: coords (..., dim) -> components (..., dim)
FieldFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_FD_STEP = 1e-5


@lru_cache(maxsize=None)
def basis_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Lexicographic k-subsets of {0..dim-1} indexing form coefficients."""
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _basis_rank(dim: int, degree: int) -> dict[tuple[int, ...], int]:
    return {idx: r for r, idx in enumerate(basis_indices(dim, degree))}


def n_coeffs(dim: int, degree: int) -> int:
    return math.comb(dim, degree)


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]):
    """Merge two disjoint sorted index tuples; returns (merged, parity sign).

    Returns None if the tuples overlap (the wedge term vanishes).
    """
    if set(left) & set(right):
        return None
    inversions = sum(1 for i in left for j in right if i > j)
    merged = tuple(sorted(left + right))
    return merged, (-1) ** inversions


@dataclass(frozen=True)
class ChartManifold:
    """Flat coordinate model: dimension plus per-coordinate periodicity.

    ``periods`` has one entry per coordinate; it is only meaningful where the
    ``periodic`` mask is set (default period 2*pi).  The topology flags are
    declared metadata for catalog entries, never inferred.
    """

    dim: int
    periodic: tuple[bool, ...] = ()
    periods: tuple[float, ...] = ()
    name: str = ""
    compact: bool = False
    simply_connected: bool = False
    cotangent_model: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"chart dimension must be >= 1, got {self.dim}")
        periodic = tuple(self.periodic) or (False,) * self.dim
        if len(periodic) != self.dim:
            raise ValueError("periodic mask length != dim")
        periods = tuple(self.periods) or (TWO_PI,) * self.dim
        if len(periods) != self.dim:
            raise ValueError("periods length != dim")
        if any(p <= 0 for p in periods):
            raise ValueError("periods must be positive")
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "periods", periods)

    @property
    def is_torus(self) -> bool:
        return all(self.periodic)

    def reduce(self, coords: np.ndarray) -> np.ndarray:
        """Reduce periodic coordinates to [0, period)."""
        out = np.array(coords, dtype=float, copy=True)
        for i, (per, p) in enumerate(zip(self.periodic, self.periods)):
            if per:
                out[..., i] %= p
        return out

    def point(self, coords: Sequence[float]) -> "Point":
        return Point(self, np.asarray(coords, dtype=float))

    def wrapped_delta(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coordinate difference a - b with periodic entries wrapped to the
        shortest representative [-period/2, period/2)."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for i, (per, p) in enumerate(zip(self.periodic, self.periods)):
            if per:
                d[..., i] = (d[..., i] + 0.5 * p) % p - 0.5 * p
        return d

    def tangent(self, coords: Sequence[float], components: Sequence[float]) -> "TangentVector":
        return TangentVector(self.point(coords), np.asarray(components, dtype=float))

    def sample(self, rng: np.random.Generator, n: int, box: float = 1.0) -> np.ndarray:
        """Uniform sample of n coordinate tuples; non-periodic coordinates are
        drawn from [-box, box]."""
        cols = []
        for i in range(self.dim):
            if self.periodic[i]:
                cols.append(rng.uniform(0.0, self.periods[i], size=n))
            else:
                cols.append(rng.uniform(-box, box, size=n))
        return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class Point:
    """A chart point; periodic coordinates are stored reduced to [0, period)."""

    chart: ChartManifold
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.chart.dim,):
            raise ValueError(f"expected {self.chart.dim} coordinates, got shape {coords.shape}")
        object.__setattr__(self, "coords", self.chart.reduce(coords))

    def __repr__(self):
        return f"Point({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Coordinate-frame components of a tangent vector at a base point."""

    base: Point
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (self.base.chart.dim,):
            raise ValueError(f"expected {self.base.chart.dim} components, got shape {comps.shape}")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True, eq=False)
class KForm:
    """Degree-k differential form on a dim-dimensional chart.

    ``coeffs`` maps coordinates to the coefficient vector over the
    lexicographic basis.  ``d_coeffs``, when given, supplies the analytic
    coefficients of the exterior derivative; otherwise central finite
    differences are used.  ``constant_value`` marks a form whose coefficients
    do not depend on the point; the algebra propagates it so that constant
    inputs stay on a fast evaluation path.
    """

    degree: int
    dim: int
    coeffs: CoeffFn
    d_coeffs: Optional[CoeffFn] = None
    constant_value: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (0 <= self.degree <= self.dim):
            raise ValueError(f"degree {self.degree} out of range for dim {self.dim}")

    @property
    def n_coeffs(self) -> int:
        return n_coeffs(self.dim, self.degree)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "KForm") -> "KForm":
        if not isinstance(other, KForm):
            return NotImplemented
        if (self.degree, self.dim) != (other.degree, other.dim):
            raise ValueError("can only add forms of equal degree and dimension")
        if self.constant_value is not None and other.constant_value is not None:
            return constant_form(self.dim, self.degree,
                                 self.constant_value + other.constant_value)
        ca, cb = self.coeffs, other.coeffs
        da, db = self.d_coeffs, other.d_coeffs
        dsum = None
        if da is not None and db is not None:
            dsum = lambda x, da=da, db=db: da(x) + db(x)
        return KForm(self.degree, self.dim, lambda x: ca(x) + cb(x), dsum)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "KForm":
        s = float(scalar)
        if self.constant_value is not None:
            return constant_form(self.dim, self.degree, s * self.constant_value)
        c, d = self.coeffs, self.d_coeffs
        dscaled = None if d is None else (lambda x, d=d: s * d(x))
        return KForm(self.degree, self.dim, lambda x: s * c(x), dscaled)

    def __neg__(self) -> "KForm":
        return (-1.0) * self


def _zero_coeffs(dim: int, degree: int) -> CoeffFn:
    nc = n_coeffs(dim, degree)

    def coeffs(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (nc,))

    return coeffs


def zero_form(dim: int, degree: int) -> KForm:
    f = KForm(degree, dim, _zero_coeffs(dim, degree))
    d = None if degree == dim else _zero_coeffs(dim, degree + 1)
    return KForm(degree, dim, f.coeffs, d)


def constant_form(dim: int, degree: int, coefficients: Sequence[float]) -> KForm:
    """Form with constant coefficients (hence analytically closed)."""
    vec = np.asarray(coefficients, dtype=float)
    if vec.shape != (n_coeffs(dim, degree),):
        raise ValueError(f"expected {n_coeffs(dim, degree)} coefficients, got {vec.shape}")

    def coeffs(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(vec, x.shape[:-1] + vec.shape).copy()

    d = None if degree == dim else _zero_coeffs(dim, degree + 1)
    return KForm(degree, dim, coeffs, d, constant_value=vec)


def coordinate_form(dim: int, index: int) -> KForm:
    """The coordinate one-form dx_index."""
    vec = np.zeros(dim)
    vec[index] = 1.0
    return constant_form(dim, 1, vec)


def function_form(dim: int, value: Callable[[np.ndarray], np.ndarray],
                  gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> KForm:
    """Degree-0 form from a scalar function, with optional analytic gradient."""

    def coeffs(x: np.ndarray) -> np.ndarray:
        return np.asarray(value(x), dtype=float)[..., None]

    d = None
    if gradient is not None:
        d = lambda x: np.asarray(gradient(x), dtype=float)
    return KForm(0, dim, coeffs, d)


# -- evaluation ---------------------------------------------------------------


def evaluate_frame(f: KForm, coords: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Evaluate f at coords on the columns of ``frame``.

    coords has shape (..., dim); frame has shape (..., dim, k) with k equal to
    the form degree.  Returns values of shape (...,).
    """
    coords = np.asarray(coords, dtype=float)
    frame = np.asarray(frame, dtype=float)
    k = f.degree
    if frame.shape[-1] != k:
        raise ValueError(f"degree-{k} form needs {k} vectors, got {frame.shape[-1]}")
    if frame.shape[-2] != f.dim:
        raise ValueError(f"vector dimension {frame.shape[-2]} != form dimension {f.dim}")
    c = f.coeffs(coords)
    if k == 0:
        return c[..., 0]
    idx = np.array(basis_indices(f.dim, k))  # (C, k)
    minors = np.linalg.det(frame[..., idx, :])  # (..., C)
    return np.einsum("...c,...c->...", c, minors)


def _perm_parity(order: np.ndarray) -> float:
    inversions = sum(1 for i in range(len(order)) for j in range(i + 1, len(order))
                     if order[i] > order[j])
    return -1.0 if inversions % 2 else 1.0


def evaluate(f: KForm, vectors: Sequence[TangentVector]) -> float:
    """Evaluate the form on k tangent vectors sharing a base point.

    Alternating and multilinear in the vectors.  The columns are brought to a
    canonical order before the determinants, so swapping two arguments flips
    the sign exactly (any argument order reduces to one computation).
    """
    if len(vectors) != f.degree:
        raise ValueError(f"degree-{f.degree} form takes {f.degree} vectors, got {len(vectors)}")
    if f.degree == 0:
        raise ValueError("degree-0 evaluation needs a base point; call f.coeffs directly")
    base = vectors[0].base
    for v in vectors[1:]:
        if v.base is not base and not np.array_equal(v.base.coords, base.coords):
            raise ValueError("all vectors must share a base point")
    if base.chart.dim != f.dim:
        raise ValueError(f"point dimension {base.chart.dim} != form dimension {f.dim}")
    frame = np.stack([v.components for v in vectors], axis=-1)
    return _evaluate_canonical(f, base.coords, frame)


def evaluate_at(f: KForm, coords: np.ndarray, *vectors: Sequence[float]) -> float:
    """Convenience: evaluate on raw coordinate/component arrays."""
    frame = np.stack([np.asarray(v, dtype=float) for v in vectors], axis=-1)
    return _evaluate_canonical(f, np.asarray(coords, dtype=float), frame)


def _evaluate_canonical(f: KForm, coords: np.ndarray, frame: np.ndarray) -> float:
    if f.degree == 0:
        raise ValueError("degree-0 evaluation needs no vectors; call f.coeffs directly")
    order = np.lexsort(frame[::-1])
    sign = _perm_parity(order)
    return sign * float(evaluate_frame(f, coords, frame[:, order]))


# -- wedge, interior, derivative, pullback ------------------------------------


def wedge(a: KForm, b: KForm) -> KForm:
    """Wedge product; graded-commutative with sign (-1)^(kl)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    k, l = a.degree, b.degree
    if k + l > a.dim:
        raise ValueError(f"wedge degree {k + l} exceeds chart dimension {a.dim}")
    dim = a.dim
    rank = _basis_rank(dim, k + l)
    terms = []
    for ra, ia in enumerate(basis_indices(dim, k)):
        for rb, ib in enumerate(basis_indices(dim, l)):
            merged = _merge_sign(ia, ib)
            if merged is None:
                continue
            key, sign = merged
            terms.append((ra, rb, rank[key], sign))
    a_idx = np.array([t[0] for t in terms])
    b_idx = np.array([t[1] for t in terms])
    signs = np.array([float(t[3]) for t in terms])
    nc = n_coeffs(dim, k + l)
    scatter = np.zeros((len(terms), nc))
    scatter[np.arange(len(terms)), [t[2] for t in terms]] = 1.0
    ca, cb = a.coeffs, b.coeffs

    def coeffs(x: np.ndarray) -> np.ndarray:
        va, vb = ca(x), cb(x)
        prod = signs * va[..., a_idx] * vb[..., b_idx]
        return prod @ scatter

    if a.constant_value is not None and b.constant_value is not None:
        return constant_form(dim, k + l, coeffs(np.zeros(dim)))
    result = KForm(k + l, dim, coeffs)
    # Leibniz rule gives an analytic derivative when both factors carry one.
    if a.d_coeffs is not None and b.d_coeffs is not None and k + l + 1 <= dim:
        da = KForm(k + 1, dim, a.d_coeffs)
        db = KForm(l + 1, dim, b.d_coeffs)
        d_total = wedge(da, KForm(l, dim, cb)) + ((-1.0) ** k) * wedge(KForm(k, dim, ca), db)
        result = KForm(k + l, dim, coeffs, d_total.coeffs)
    return result


def interior(X: FieldFn, f: KForm) -> KForm:
    """Interior product of a vector field into f; degree drops by one."""
    if f.degree < 1:
        raise ValueError("interior product needs a form of degree >= 1")
    dim, k = f.dim, f.degree
    in_rank = _basis_rank(dim, k)
    terms = []
    for rj, J in enumerate(basis_indices(dim, k - 1)):
        for i in range(dim):
            if i in J:
                continue
            merged = tuple(sorted(J + (i,)))
            pos = merged.index(i)
            terms.append((rj, i, in_rank[merged], (-1.0) ** pos))
    out_idx = [t[0] for t in terms]
    vec_idx = np.array([t[1] for t in terms])
    in_idx = np.array([t[2] for t in terms])
    signs = np.array([t[3] for t in terms])
    nc = n_coeffs(dim, k - 1)
    scatter = np.zeros((len(terms), nc))
    scatter[np.arange(len(terms)), out_idx] = 1.0
    cf = f.coeffs

    def coeffs(x: np.ndarray) -> np.ndarray:
        c = cf(x)
        xv = np.asarray(X(x), dtype=float)
        prod = signs * xv[..., vec_idx] * c[..., in_idx]
        return prod @ scatter

    return KForm(k - 1, dim, coeffs)


def exterior_derivative(f: KForm, h: float = DEFAULT_FD_STEP) -> KForm:
    """Exterior derivative; analytic coefficients when available, else central
    finite differences with step h."""
    if f.degree >= f.dim:
        raise ValueError("exterior derivative of a top-degree form")
    dim, k = f.dim, f.degree
    if f.d_coeffs is not None:
        # d of an analytic derivative is identically zero (d compose d = 0).
        dzero = None if k + 2 > dim else _zero_coeffs(dim, k + 2)
        return KForm(k + 1, dim, f.d_coeffs, dzero)
    in_rank = _basis_rank(dim, k)
    terms = []  # (out_rank, diff_direction, in_rank, sign)
    for ro, K in enumerate(basis_indices(dim, k + 1)):
        for pos, j in enumerate(K):
            rest = K[:pos] + K[pos + 1:]
            terms.append((ro, j, in_rank[rest], (-1.0) ** pos))
    cf = f.coeffs

    def coeffs(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        partials = []
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            partials.append((cf(x + e) - cf(x - e)) / (2.0 * h))
        out = np.zeros(x.shape[:-1] + (n_coeffs(dim, k + 1),))
        for ro, j, ri, sign in terms:
            out[..., ro] += sign * partials[j][..., ri]
        return out

    return KForm(k + 1, dim, coeffs)


@dataclass(frozen=True)
class ChartMap:
    """Smooth map between charts, given by value and Jacobian callbacks.

    ``value`` maps (..., source_dim) -> (..., target_dim); ``jacobian`` maps
    (..., source_dim) -> (..., target_dim, source_dim).  ``constant_jacobian``
    marks affine maps (projections, inclusions), letting pullbacks of constant
    forms stay constant.
    """

    source_dim: int
    target_dim: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    constant_jacobian: bool = False

    @staticmethod
    def identity(dim: int) -> "ChartMap":
        eye = np.eye(dim)
        return ChartMap(dim, dim,
                        lambda x: np.asarray(x, dtype=float),
                        lambda x: np.broadcast_to(eye, np.shape(x)[:-1] + (dim, dim)),
                        constant_jacobian=True)

    @staticmethod
    def coordinate_projection(source_dim: int, kept: Sequence[int]) -> "ChartMap":
        """Projection selecting the listed source coordinates."""
        kept = tuple(kept)
        jac = np.zeros((len(kept), source_dim))
        jac[np.arange(len(kept)), kept] = 1.0
        return ChartMap(source_dim, len(kept),
                        lambda x: np.asarray(x, dtype=float)[..., kept],
                        lambda x: np.broadcast_to(jac, np.shape(x)[:-1] + jac.shape),
                        constant_jacobian=True)

    @staticmethod
    def coordinate_inclusion(target_dim: int, free: Sequence[int],
                             fixed: dict[int, float]) -> "ChartMap":
        """Inclusion filling ``free`` target slots from the source coordinates
        and pinning the ``fixed`` slots to constants."""
        free = tuple(free)
        if sorted(list(free) + list(fixed)) != list(range(target_dim)):
            raise ValueError("free and fixed indices must partition the target coordinates")
        jac = np.zeros((target_dim, len(free)))
        jac[free, np.arange(len(free))] = 1.0

        def value(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1] + (target_dim,))
            out[..., free] = x
            for i, v in fixed.items():
                out[..., i] = v
            return out

        return ChartMap(len(free), target_dim, value,
                        lambda x: np.broadcast_to(jac, np.shape(x)[:-1] + jac.shape),
                        constant_jacobian=True)


def pullback(phi: ChartMap, f: KForm) -> KForm:
    """Pullback of f along phi; commutes with wedge and with d."""
    if phi.target_dim != f.dim:
        raise ValueError(f"map target dimension {phi.target_dim} != form dimension {f.dim}")
    k = f.degree
    src = phi.source_dim
    if k > src:
        raise ValueError(f"cannot pull a degree-{k} form back to a {src}-dimensional chart")
    cf, val, jac = f.coeffs, phi.value, phi.jacobian
    tgt_idx = np.array(basis_indices(f.dim, k)) if k else None
    src_idx = np.array(basis_indices(src, k)) if k else None

    def coeffs(x: np.ndarray) -> np.ndarray:
        y = val(x)
        c = cf(y)
        if k == 0:
            return c
        J = jac(x)  # (..., tgt, src)
        rows = J[..., tgt_idx, :]              # (..., Ct, k, src)
        minors = rows[..., :, :, src_idx]      # (..., Ct, k, Cs, k) -> reorder
        minors = np.swapaxes(minors, -3, -2)   # (..., Ct, Cs, k, k)
        dets = np.linalg.det(minors)           # (..., Ct, Cs)
        return np.einsum("...t,...ts->...s", c, dets)

    if f.constant_value is not None and phi.constant_jacobian:
        return constant_form(src, k, coeffs(np.zeros(src)))
    result = KForm(k, src, coeffs)
    if f.d_coeffs is not None and k + 1 <= f.dim:
        df = KForm(k + 1, f.dim, f.d_coeffs)
        result = KForm(k, src, coeffs, pullback(phi, df).coeffs)
    return result


def power(f: KForm, m: int) -> KForm:
    """Iterated wedge f^m; f^0 is the constant function 1."""
    if m < 0:
        raise ValueError("power exponent must be >= 0")
    if m * f.degree > f.dim:
        raise ValueError(f"degree {m * f.degree} exceeds chart dimension {f.dim}")
    if m == 0:
        return constant_form(f.dim, 0, [1.0])
    out = f
    for _ in range(m - 1):
        out = wedge(out, f)
    return out


@lru_cache(maxsize=None)
def _pair_rows_cols(dim: int):
    pairs = basis_indices(dim, 2)
    return (np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))


def _assemble_antisymmetric(dim: int, c: np.ndarray) -> np.ndarray:
    rows, cols = _pair_rows_cols(dim)
    out = np.zeros(c.shape[:-1] + (dim, dim))
    out[..., rows, cols] = c
    out[..., cols, rows] = -c
    return out


def two_form_matrix(f: KForm, coords: np.ndarray) -> np.ndarray:
    """Antisymmetric coefficient matrix M[i, j] = f(e_i, e_j) at coords.

    Vectorised: coords (..., dim) -> (..., dim, dim).
    """
    if f.degree != 2:
        raise ValueError("two_form_matrix needs a degree-2 form")
    coords = np.asarray(coords, dtype=float)
    if f.constant_value is not None:
        m = _assemble_antisymmetric(f.dim, f.constant_value)
        return np.broadcast_to(m, coords.shape[:-1] + m.shape).copy()
    return _assemble_antisymmetric(f.dim, f.coeffs(coords))


def covector_values(f: KForm, coords: np.ndarray) -> np.ndarray:
    """Coefficient vector of a one-form at coords, shape (..., dim)."""
    if f.degree != 1:
        raise ValueError("covector_values needs a degree-1 form")
    return f.coeffs(np.asarray(coords, dtype=float))


def max_coeff_magnitude(f: KForm, samples: np.ndarray) -> float:
    """Largest coefficient magnitude over a batch of sample coordinates."""
    return float(np.max(np.abs(f.coeffs(np.asarray(samples, dtype=float)))))
