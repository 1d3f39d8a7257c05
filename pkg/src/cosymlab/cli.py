"""Command-line front end.

    cosymlab <command> --config <path> [--out <dir>] [--seed <u64>]

Commands: demo-product, verify-cosym, tischler, obstruct, return-map.
Each command reads a single JSON config document, runs the requested
constructions and verifications, and writes report.json (plus crossings.csv
and plot.svg where applicable) into the output directory.

Exit codes: 0 all checks passed, 1 a verification failed or an obstruction
fired, 2 usage or config error.

Reports are deterministic for a fixed (config, seed): volatile data
(timestamp, wall-clock timings) is segregated under the "meta" key; the
"report" payload is byte-stable.
"""
from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import catalog, cosym, expr, obstruct, tischler
from .forms import ChartManifold, KForm, basis_indices, constant_form
from .phase import HamiltonianSystem
from .section import (SectionSpec, coordinate_section, first_return,
                      mapping_torus_chart, return_map_jacobian, verify_global,
                      write_crossings_csv)

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


# -- config helpers ---------------------------------------------------------------


def load_config(path: Path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("tol", "t_max", "eps"):
        if key in cfg and not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            raise ConfigError(f"config field {key!r} must be a positive number")
    if "samples" in cfg and (not isinstance(cfg["samples"], int) or cfg["samples"] < 1):
        raise ConfigError("config field 'samples' must be an integer >= 1")
    return cfg


def _form_from_entries(dim: int, names: Sequence[str], entries, degree: int) -> KForm:
    """Form from config entries [i, j, coeff] (degree 2) or [i, coeff] (degree 1);
    coefficients are numbers or expressions over the coordinate names."""
    rank = {idx: r for r, idx in enumerate(basis_indices(dim, degree))}
    parsed = []
    all_const = True
    for entry in entries:
        *idx, coeff = entry
        idx = tuple(int(i) for i in idx)
        if len(idx) != degree:
            raise ConfigError(f"form entry {entry!r} needs {degree} indices")
        if len(set(idx)) != degree or any(not 0 <= i < dim for i in idx):
            raise ConfigError(f"bad form indices {idx} for dimension {dim}")
        sign = 1.0
        if degree == 2 and idx[0] > idx[1]:
            idx, sign = (idx[1], idx[0]), -1.0
        if isinstance(coeff, (int, float)):
            parsed.append((rank[idx], sign, float(coeff)))
        else:
            all_const = False
            parsed.append((rank[idx], sign, expr.parse(str(coeff), names)))
    nc = len(rank)
    if all_const:
        vec = np.zeros(nc)
        for r, sign, value in parsed:
            vec[r] += sign * value
        return constant_form(dim, degree, vec)

    def coeffs(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (nc,))
        for r, sign, value in parsed:
            out[..., r] += sign * (value if isinstance(value, float) else value(x))
        return out

    return KForm(degree, dim, coeffs)


def build_inline_system(spec: dict) -> HamiltonianSystem:
    try:
        dim = int(spec["dim"])
        names = list(spec.get("coordinates") or [f"x{i}" for i in range(dim)])
        if len(names) != dim:
            raise ConfigError("coordinates list length must equal dim")
        chart = ChartManifold(
            dim,
            tuple(bool(b) for b in spec.get("periodic") or (False,) * dim),
            tuple(float(p) for p in spec.get("periods") or (TWO_PI,) * dim),
            name=str(spec.get("name", "inline")))
        omega = _form_from_entries(dim, names, spec["omega"], 2)
        h_expr = expr.parse(str(spec["hamiltonian"]), names)
        lam = None
        if "lambda" in spec:
            lam = _form_from_entries(dim, names, spec["lambda"], 1)
        system = HamiltonianSystem(chart, omega, h_expr, h_expr.gradient(), lam=lam,
                                   name=str(spec.get("name", "inline")))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, expr.ExprError) as exc:
        raise ConfigError(f"bad inline system spec: {exc}") from exc
    samples = chart.sample(np.random.default_rng(0), 32)
    system.validate(samples)
    return system


def resolve_system(cfg: dict):
    spec = cfg.get("system")
    if spec is None:
        raise ConfigError("config needs a 'system' (catalog name or inline spec)")
    if isinstance(spec, str):
        try:
            return spec, catalog.get_system(spec)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if isinstance(spec, dict):
        return spec.get("name", "inline"), build_inline_system(spec)
    raise ConfigError("'system' must be a catalog name or an object")


def build_section(cfg: dict, system) -> SectionSpec:
    sec_cfg = cfg.get("section") or {}
    kind = sec_cfg.get("kind", "coordinate")
    orientation = int(sec_cfg.get("orientation", 1))
    if kind == "coordinate":
        index = int(sec_cfg.get("index", system.dim - 2))
        return coordinate_section(system.manifold, index,
                                  float(sec_cfg.get("level", 0.0)), orientation)
    if kind == "angle":
        pair = tuple(int(i) for i in sec_cfg.get("pair", (2, 3)))
        return catalog.oscillator_angle_section(pair)
    if kind == "leaf":
        ra = tischler.RationalApproximation(int(sec_cfg["d"]),
                                            np.asarray(sec_cfg["n"], dtype=int), 0.0)
        return tischler.extract_leaf(ra, system.manifold, orientation=orientation)
    raise ConfigError(f"unknown section kind {kind!r}")


def section_start_points(name: str, system, cfg: dict, rng: np.random.Generator,
                         n: int) -> np.ndarray:
    if "points" in cfg:
        pts = np.asarray(cfg["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != system.dim:
            raise ConfigError("'points' must be a list of coordinate tuples")
        return pts
    if name.startswith("t4_product") or name.startswith("t6_product") \
            or name.startswith("product("):
        return catalog.sample_product_leaf(system, rng, n)
    if name.startswith("oscillator"):
        return catalog.sample_oscillator_surface(system, float(cfg.get("level", 1.0)),
                                                 rng, n, on_section=True)
    if name.startswith("suspension"):
        pts = system.manifold.sample(rng, n)
        pts[:, 1] = 0.0
        return pts
    raise ConfigError(f"no automatic section sampler for system {name!r}; "
                      "supply explicit 'points' in the config")


# -- SVG scatter --------------------------------------------------------------------


def svg_scatter(path: Path, points: np.ndarray, title: str,
                labels: tuple[str, str] = ("s0", "s1")) -> None:
    """Scatter plot of 2D points in a fixed 800x800 viewport."""
    size, margin = 800, 70
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        pts = np.zeros((1, 2))
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * span
    lo, hi = lo - pad, hi + pad
    span = hi - lo

    def sx(v):
        return margin + (v - lo[0]) / span[0] * (size - 2 * margin)

    def sy(v):
        return size - margin - (v - lo[1]) / span[1] * (size - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{size - 2 * margin}" '
        f'height="{size - 2 * margin}" fill="none" stroke="black"/>',
        f'<text x="{size / 2:.0f}" y="30" text-anchor="middle" font-size="18">{title}</text>',
        f'<text x="{size / 2:.0f}" y="{size - 15}" text-anchor="middle" '
        f'font-size="14">{labels[0]}</text>',
        f'<text x="20" y="{size / 2:.0f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {size / 2:.0f})">{labels[1]}</text>',
        f'<text x="{margin}" y="{size - margin + 20}" font-size="11">{lo[0]:.4g}</text>',
        f'<text x="{size - margin}" y="{size - margin + 20}" text-anchor="end" '
        f'font-size="11">{hi[0]:.4g}</text>',
        f'<text x="{margin - 5}" y="{size - margin}" text-anchor="end" '
        f'font-size="11">{lo[1]:.4g}</text>',
        f'<text x="{margin - 5}" y="{margin + 5}" text-anchor="end" '
        f'font-size="11">{hi[1]:.4g}</text>',
    ]
    for x, y in pts:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" '
                     'fill="steelblue" fill-opacity="0.7"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))


# -- report assembly ----------------------------------------------------------------


class Runner:
    """Collects named checks with timings and writes the report."""

    def __init__(self, command: str, cfg: dict, out_dir: Path, seed: int):
        self.command = command
        self.cfg = cfg
        self.out = out_dir
        self.seed = seed
        self.checks: list[dict] = []
        self.timings: dict[str, float] = {}
        self.artifacts: list[str] = []

    def check(self, name: str, passed: bool, details: Optional[dict] = None, **kw) -> bool:
        if any(c["name"] == name for c in self.checks):
            raise RuntimeError(f"duplicate check name {name!r}")
        merged = dict(details or {})
        merged.update(kw)
        merged.pop("passed", None)
        entry = {"name": name, "passed": bool(passed)}
        entry.update(_jsonable(merged))
        self.checks.append(entry)
        return passed

    def timed(self, name: str):
        runner = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()
                return self

            def __exit__(self, *exc):
                runner.timings[name] = time.perf_counter() - self.t0
                return False

        return _Timer()

    def add_artifact(self, path: Path) -> Path:
        self.artifacts.append(path.name)
        return path

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def write_report(self) -> Path:
        report = {
            "command": self.command,
            "config": _jsonable(self.cfg),
            "seed": self.seed,
            "checks": self.checks,
            "passed": self.passed,
            "artifacts": sorted(self.artifacts),
        }
        payload = {
            "meta": {
                "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "timings_seconds": {k: round(v, 6) for k, v in self.timings.items()},
            },
            "report": report,
        }
        path = self.out / "report.json"
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        self.artifacts.append(path.name)
        return path


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


# -- commands -----------------------------------------------------------------------


def cmd_demo_product(cfg: dict, out: Path, seed: int) -> int:
    """Build and verify the full section pipeline of a seeded product system.

    Constructs the product of the chosen cosymplectic seed with a circle,
    then runs globality, return-map, and mapping-torus checks on its leaf.
    """
    runner = Runner("demo-product", cfg, out, seed)
    rng = np.random.default_rng(seed)
    seed_name = cfg.get("seed", "t3")
    if seed_name not in catalog.SEEDS:
        raise ConfigError(f"unknown cosymplectic seed {seed_name!r}; "
                          f"available: {sorted(catalog.SEEDS)}")
    tol = float(cfg.get("tol", 1e-10))
    t_max = float(cfg.get("t_max", 100.0))
    n_samples = int(cfg.get("samples", 200))

    with runner.timed("build"):
        cs = catalog.SEEDS[seed_name]()
        system = cosym.build_product_system(cs, rng=rng)
        structure = system.validate(system.manifold.sample(rng, 64))
    runner.check("structure", True, **structure)

    sec = catalog.product_leaf_section(system)
    leaf_samples = catalog.sample_product_leaf(system, rng, n_samples)
    with runner.timed("verify_global"):
        rep = verify_global(system, sec, leaf_samples, t_max, tol)
    runner.check("verify_global", rep.passed, rep.as_dict())

    n_jac = int(cfg.get("n_return_points", 5))
    with runner.timed("return_map"):
        max_det_err = 0.0
        max_dev = 0.0
        for pt in leaf_samples[:n_jac]:
            J = return_map_jacobian(system, sec, system.point(pt), tol=tol)
            max_det_err = max(max_det_err, abs(np.linalg.det(J) - 1.0))
            max_dev = max(max_dev, float(np.max(np.abs(J - np.eye(len(J))))))
    runner.check("return_map_symplectic", max_det_err < 1e-6,
                 max_det_error=max_det_err, max_identity_deviation=max_dev)

    with runner.timed("mapping_torus"):
        grid = [system.point(pt) for pt in leaf_samples[:int(cfg.get("grid", 9))]]
        mt = mapping_torus_chart(system, sec, grid, tol=tol)
    runner.check("mapping_torus_gluing", mt.gluing_residual < 10 * tol,
                 gluing_residual=mt.gluing_residual, energy_residual=mt.energy_residual)

    with runner.timed("crossings"):
        times, states, margins, missed = collect_crossings(system, sec,
                                                           leaf_samples[:50], t_max, tol)
        rows = [(i, times[i], *system.manifold.reduce(states[i]), margins[i])
                for i in range(len(times)) if i not in missed]
        csv_path = runner.add_artifact(out / "crossings.csv")
        write_crossings_csv(csv_path, rows, system.dim)
        pts2 = np.array([[r[2], r[3]] for r in rows]) if rows else np.zeros((0, 2))
        svg_path = runner.add_artifact(out / "plot.svg")
        svg_scatter(svg_path, pts2, f"return-map iterates ({seed_name} seed)",
                    ("coord 0", "coord 1"))
    runner.check("crossings_emitted", not missed, n_rows=len(rows))

    runner.write_report()
    return 0 if runner.passed else 1


def collect_crossings(system, sec, samples, t_max, tol):
    """Forward crossing data for a batch of starting points."""
    from .section import _batch_first_crossings
    times, margins, missed, states = _batch_first_crossings(
        system, sec, np.atleast_2d(np.asarray(samples, dtype=float)),
        t_max, tol, 1, keep_states=True)
    return times, states, margins, set(int(i) for i in missed)


def cmd_verify_cosym(cfg: dict, out: Path, seed: int) -> int:
    """Verify a cosymplectic pair (catalog seed or inline forms)."""
    runner = Runner("verify-cosym", cfg, out, seed)
    rng = np.random.default_rng(seed)
    n_samples = int(cfg.get("samples", 128))
    spec = cfg.get("cosym", cfg.get("seed", "t3"))
    if isinstance(spec, str):
        if spec not in catalog.SEEDS:
            raise ConfigError(f"unknown cosymplectic seed {spec!r}")
        cs = catalog.SEEDS[spec]()
    else:
        try:
            dim = int(spec["dim"])
            names = list(spec.get("coordinates") or [f"x{i}" for i in range(dim)])
            chart = ChartManifold(dim, (True,) * dim, name=str(spec.get("name", "inline")))
            cs = cosym.CosymplecticStructure(
                chart,
                _form_from_entries(dim, names, spec["alpha"], 1),
                _form_from_entries(dim, names, spec["beta"], 2),
                name=str(spec.get("name", "inline")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad cosym spec: {exc}") from exc
    with runner.timed("verify"):
        report = cosym.verify_cosymplectic(cs, cs.manifold.sample(rng, n_samples))
    runner.check("cosymplectic", report.passed, report.as_dict())
    runner.write_report()
    return 0 if runner.passed else 1


def cmd_tischler(cfg: dict, out: Path, seed: int) -> int:
    """Rationalize periods (given directly or computed from an inline form)."""
    runner = Runner("tischler", cfg, out, seed)
    tcfg = cfg.get("tischler")
    if not isinstance(tcfg, dict):
        raise ConfigError("config needs a 'tischler' object")
    eps = float(tcfg.get("eps", 1e-2))
    if eps <= 0:
        raise ConfigError("'eps' must be positive")
    d_cap = int(tcfg.get("d_cap", tischler.DEFAULT_D_CAP))

    with runner.timed("periods"):
        if "periods" in tcfg:
            values = np.asarray(tcfg["periods"], dtype=float)
            manifold = catalog.torus(len(values))
            pv = tischler.PeriodVector(values, tuple(f"declared cycle {i}"
                                                     for i in range(len(values))), manifold)
            alpha = None
        elif "alpha" in tcfg:
            dim = int(tcfg["dim"])
            manifold = catalog.torus(dim)
            names = [f"x{i}" for i in range(dim)]
            alpha = _form_from_entries(dim, names, tcfg["alpha"], 1)
            pv = tischler.periods(alpha, manifold)
        else:
            raise ConfigError("'tischler' needs 'periods' or 'alpha'")
    runner.check("periods", True, values=pv.values, cycles=list(pv.cycles))

    with runner.timed("rationalize"):
        try:
            ra = tischler.rationalize(pv, eps, d_cap)
        except tischler.RationalizationError as exc:
            runner.check("rationalize", False, error=str(exc))
            runner.write_report()
            return 1
    runner.check("rationalize", ra.epsilon_achieved <= eps,
                 d=ra.d, n=ra.n, epsilon_achieved=ra.epsilon_achieved, eps=eps)

    alpha_prime = None
    if alpha is not None:
        with runner.timed("rebuild"):
            alpha_prime = tischler.build_approximation(alpha, pv, ra)
            pv_check = tischler.periods(alpha_prime, pv.manifold)
            residual = float(np.max(np.abs(pv_check.values - ra.fractions)))
        runner.check("rebuilt_periods", residual < 1e-10, residual=residual,
                     coefficient_distance=tischler.coefficient_distance(pv, ra))

    if "system" in cfg and alpha_prime is not None:
        name, system = resolve_system(cfg)
        if system.dim != alpha_prime.dim:
            raise ConfigError(f"system dimension {system.dim} does not match the "
                              f"one-form dimension {alpha_prime.dim}")
        rng = np.random.default_rng(seed)
        if name.startswith(("t4_product", "t6_product", "product(")):
            samples = catalog.sample_product_surface(system, rng, int(cfg.get("samples", 64)))
        else:
            samples = system.manifold.sample(rng, int(cfg.get("samples", 64)))
        with runner.timed("transversality"):
            trans = tischler.check_transversality_preserved(system, alpha_prime,
                                                            samples, alpha=alpha)
        runner.check("transversality", trans.passed, trans.as_dict())

    runner.write_report()
    return 0 if runner.passed else 1


def cmd_obstruct(cfg: dict, out: Path, seed: int) -> int:
    """Run the requested non-existence obstructions.

    Exit 1 when an obstruction fires (a necessary condition fails or a
    negative verdict applies): the section is ruled out.
    """
    runner = Runner("obstruct", cfg, out, seed)
    rng = np.random.default_rng(seed)
    ran_any = False

    if "betti" in cfg:
        ran_any = True
        spec = cfg["betti"]
        if isinstance(spec, str):
            if spec not in catalog.BETTI_PROFILES:
                raise ConfigError(f"unknown Betti profile {spec!r}; "
                                  f"available: {sorted(catalog.BETTI_PROFILES)}")
            profile = catalog.BETTI_PROFILES[spec]
        else:
            profile = obstruct.BettiProfile("inline", tuple(int(b) for b in spec))
        result = obstruct.betti_necessary_condition(profile)
        runner.check("betti_necessary_condition", result.passed, result.as_dict())

    if "system" in cfg:
        ran_any = True
        name, system = resolve_system(cfg)
        with runner.timed("exactness"):
            verdict = obstruct.exactness_verdict(system)
            integrals = {}
            if system.lam is not None and system.dim == 4 and not any(system.manifold.periodic):
                n_nodes = int(cfg.get("quad_nodes", 256))
                integrals["torus"] = obstruct.stokes_exactness_check(
                    system, catalog.embedded_torus_r4(), n_nodes)
                integrals["sphere"] = obstruct.stokes_exactness_check(
                    system, catalog.embedded_sphere_r4(), n_nodes)
        runner.check("exactness_verdict", not verdict.negative,
                     verdict.as_dict(), surface_integrals=integrals)

    if "ambient" in cfg:
        ran_any = True
        name = str(cfg["ambient"])
        if name not in catalog.AMBIENT_TOPOLOGY:
            raise ConfigError(f"unknown ambient manifold {name!r}; "
                              f"available: {sorted(catalog.AMBIENT_TOPOLOGY)}")
        compact, simply = catalog.AMBIENT_TOPOLOGY[name]
        verdict = obstruct.simply_connected_verdict(compact, simply, name=name)
        runner.check("simply_connected_verdict", not verdict.negative, verdict.as_dict())

    if not ran_any:
        raise ConfigError("obstruct config needs at least one of 'betti', 'system', 'ambient'")
    runner.write_report()
    return 0 if runner.passed else 1


def cmd_return_map(cfg: dict, out: Path, seed: int) -> int:
    """Return times, map iterates and symplecticity of a configured section."""
    runner = Runner("return-map", cfg, out, seed)
    rng = np.random.default_rng(seed)
    name, system = resolve_system(cfg)
    sec = build_section(cfg, system)
    tol = float(cfg.get("tol", 1e-10))
    t_max = float(cfg.get("t_max", 100.0))
    n_pts = int(cfg.get("samples", 20))
    n_iter = int(cfg.get("iterations", 50))

    starts = section_start_points(name, system, cfg, rng, n_pts)
    from .section import section_coordinates
    _, _, project = section_coordinates(system, sec, system.point(starts[0]))
    with runner.timed("iterate"):
        rows = []
        iterates = []
        max_T = 0.0
        min_margin = math.inf
        for i, x in enumerate(starts):
            p = system.point(x)
            t_accum = 0.0
            for _ in range(n_iter):
                rec = first_return(system, sec, p, t_max, tol)
                t_accum += rec.return_time
                max_T = max(max_T, rec.return_time)
                min_margin = min(min_margin, rec.transversality_margin)
                rows.append((i, t_accum, *rec.image.coords, rec.transversality_margin))
                s = project(rec.image.coords)
                iterates.append((s[0] if len(s) > 0 else t_accum,
                                 s[1] if len(s) > 1 else 0.0))
                p = rec.image
    runner.check("iterates", True, n_rows=len(rows), max_return_time=max_T,
                 min_margin=min_margin)

    n_jac = int(cfg.get("n_return_points", 10))
    with runner.timed("jacobians"):
        max_det_err = 0.0
        for x in starts[:n_jac]:
            J = return_map_jacobian(system, sec, system.point(x),
                                    fd_step=float(cfg.get("fd_step", 1e-6)),
                                    t_max=t_max, tol=tol)
            max_det_err = max(max_det_err, abs(np.linalg.det(J) - 1.0))
    runner.check("symplectic_determinant", max_det_err < 1e-6, max_det_error=max_det_err)

    csv_path = runner.add_artifact(out / "crossings.csv")
    write_crossings_csv(csv_path, rows, system.dim)
    svg_path = runner.add_artifact(out / "plot.svg")
    svg_scatter(svg_path, np.array(iterates) if iterates else np.zeros((0, 2)),
                f"return-map iterates ({name})", ("section coord 0", "section coord 1"))
    runner.write_report()
    return 0 if runner.passed else 1


COMMANDS = {
    "demo-product": cmd_demo_product,
    "verify-cosym": cmd_verify_cosym,
    "tischler": cmd_tischler,
    "obstruct": cmd_obstruct,
    "return-map": cmd_return_map,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosymlab",
        description="Global transverse Poincaré sections: constructions, "
                    "verifications and obstructions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__.splitlines()[0] if fn.__doc__ else None)
        sp.add_argument("--config", required=True, type=Path,
                        help="JSON run configuration")
        sp.add_argument("--out", type=Path, default=Path("."),
                        help="output directory (default: current)")
        sp.add_argument("--seed", type=int, default=None,
                        help="random seed (overrides config; default 0)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("rng_seed", 0))
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out, seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: cosymlab {args.command} --config <path> [--out <dir>] [--seed <u64>]",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
