"""Pipeline orchestration: mesh -> assembly -> search -> artifacts.

Every run writes its delimited outputs plus rendered figures into the
output directory together with a JSON manifest (config echo, mesh stats,
timings, content hashes).  Identical configs reproduce identical output
hashes; timings live only in the manifest.
"""

import hashlib
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import plots
from .assembly import build_bundle
from .config import RunConfig, render_config
from .errors import ConfigError, MatchError
from .mesh import mesh_at_level, mesh_stats
from .oracle import DiskProblem, contour_map, map_csv, oracle_roots, roots_csv
from .sim import (
    BundleProvider,
    MatrixProvider,
    SearchRegion,
    extract_eigenpair,
    format_trace,
    indicator_detailed,
    search,
)


def _write(out_dir, name, text):
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Manifest:
    def __init__(self, config: RunConfig, mode: str):
        self.data = {
            "mode": mode,
            "config": render_config(config),
            "outputs": {},
            "timings": {},
        }
        self._t0 = time.time()

    def add_output(self, path):
        self.data["outputs"][path.name] = _sha256(path)

    def time_step(self, name):
        now = time.time()
        self.data["timings"][name] = round(now - self._t0, 3)
        self._t0 = now

    def write(self, out_dir):
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True), encoding="utf-8")
        return path


def build_problem(config: RunConfig, level=None):
    """Mesh and assembled operators at the requested refinement level."""
    mesh = mesh_at_level(config.radius, config.base_h, level or config.level)
    bundle = build_bundle(mesh, config.potential(), order=config.truncation,
                          quad_order=config.quad_order)
    return mesh, bundle


def resonance_csv(resonances, precision=6):
    lines = ["re, im, residual, level"]
    for r in resonances:
        lines.append(f"{r.k.real:.{precision}f}, {r.k.imag:.{precision}f}, "
                     f"{r.residual:.3e}, {r.level}")
    return "\n".join(lines) + "\n"


def run_solve(config: RunConfig, out_dir, level=None):
    """Full search over the configured rectangle at one mesh level."""
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config, "solve")
    mesh, bundle = build_problem(config, level)
    manifest.data["mesh"] = mesh_stats(mesh)
    manifest.time_step("assemble")
    trace = []
    results = search(BundleProvider(bundle), config.rectangle(),
                     config.sim_config(), trace=trace)
    manifest.time_step("search")
    manifest.data["resonances"] = [
        {"re": r.k.real, "im": r.k.imag, "residual": r.residual,
         "level": r.level, "flags": r.flags, "cluster_size": r.cluster_size}
        for r in results]
    manifest.add_output(_write(out_dir, "resonances.csv",
                               resonance_csv(results, config.precision)))
    manifest.add_output(_write(out_dir, "search_trace.log", format_trace(trace)))
    fig_path = out_dir / "resonances.png"
    plots.save_resonance_scatter(fig_path, results, config.rectangle(),
                                 f"resonances, mesh level {level or config.level}")
    manifest.add_output(fig_path)
    manifest.time_step("emit")
    manifest.write(out_dir)
    return results


@dataclass
class TrackReport:
    values: list            # k per level, full precision
    errors: list = field(default_factory=list)    # E_j between levels
    orders: list = field(default_factory=list)    # log2(E_j / E_{j+1})
    exact_match: bool = False


@dataclass
class ConvergenceReport:
    tracks: list
    levels: int

    def csv(self, precision=6):
        lines = ["resonance, level, re, im, E, order"]
        for idx, track in enumerate(self.tracks, start=1):
            for j, k in enumerate(track.values, start=1):
                err = f"{track.errors[j - 1]:.3e}" if j - 1 < len(track.errors) else ""
                order = f"{track.orders[j - 2]:.2f}" if 1 <= j - 1 <= len(track.orders) else ""
                lines.append(f"{idx}, {j}, {k.real:.{precision}f}, {k.imag:.{precision}f}, "
                             f"{err}, {order}")
        return "\n".join(lines) + "\n"


def _convergence_numbers(values):
    errors = [abs(a - b) / abs(b) for a, b in zip(values, values[1:])]
    orders = []
    for e0, e1 in zip(errors, errors[1:]):
        orders.append(float(np.log2(e0 / e1)) if e0 > 0 and e1 > 0 else float("inf"))
    return errors, orders


def run_converge(config: RunConfig, out_dir):
    """Track the smallest-|k| resonances across the refinement ladder.

    The full search runs once on the coarsest mesh; finer levels continue
    each tracked resonance by the Step-2 refinement (inverse iteration
    plus the Rayleigh-functional Newton) seeded at the previous level's
    value, which is the nearest-neighbor match by construction.  A
    continuation step that fails to converge or drifts more than 10x the
    median inter-level drift raises MatchError.
    """
    if config.levels < 3:
        raise ConfigError("converge needs levels >= 3")
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config, "converge")
    base = search_at_level(config, 1, manifest)
    if not base:
        raise MatchError("no resonances found at the base level")
    tracked = sorted(base, key=lambda r: abs(r.k))[: config.track]
    tracks = [TrackReport(values=[r.k]) for r in tracked]
    cont_cfg = replace(config.sim_config(), tol_eps=max(config.tol_eps, 1e-4))
    for level in range(2, config.levels + 1):
        mesh, bundle = build_problem(config, level)
        provider = BundleProvider(bundle)
        drifts = []
        proposals = []
        for track in tracks:
            res = extract_eigenpair(provider, track.values[-1], cont_cfg)
            if not res.converged or "polish-diverged" in res.flags:
                raise MatchError(
                    f"continuation failed at level {level} near {track.values[-1]:.6f}")
            proposals.append(res.k)
            drifts.append(abs(res.k - track.values[-1]))
        median_drift = float(np.median(drifts))
        for track, k_new, drift in zip(tracks, proposals, drifts):
            if median_drift > 0 and drift > 10 * median_drift and drift > 10 * config.tol_eps:
                raise MatchError(f"tracked resonance jumped {drift:.2e} at level {level} "
                                 f"(median drift {median_drift:.2e})")
            track.values.append(k_new)
        manifest.time_step(f"level-{level}")
    for track in tracks:
        track.errors, track.orders = _convergence_numbers(track.values)
        track.exact_match = any(e == 0.0 for e in track.errors)
    report = ConvergenceReport(tracks, config.levels)
    manifest.data["tracks"] = [
        {"values": [[k.real, k.imag] for k in t.values],
         "errors": t.errors, "orders": t.orders, "exact_match": t.exact_match}
        for t in tracks]
    manifest.add_output(_write(out_dir, "convergence.csv", report.csv(config.precision)))
    fig_path = out_dir / "convergence.png"
    plots.save_convergence_plot(fig_path, report)
    manifest.add_output(fig_path)
    manifest.write(out_dir)
    return report


def search_at_level(config: RunConfig, level, manifest=None):
    mesh, bundle = build_problem(config, level)
    results = search(BundleProvider(bundle), config.rectangle(), config.sim_config())
    if manifest is not None:
        manifest.data[f"mesh-level-{level}"] = mesh_stats(mesh)
        manifest.time_step(f"level-{level}")
    return results


def oracle_problem(config: RunConfig) -> DiskProblem:
    const = config.potential().is_constant_disk()
    if const is None:
        raise ConfigError("oracle mode needs a constant potential on an origin disk")
    v0, r0 = const
    return DiskProblem(r0, v0, config.oracle_n_max)


def run_oracle_roots(config: RunConfig, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config, "oracle-roots")
    problem = oracle_problem(config)
    roots, dropped = oracle_roots(problem, config.rectangle(), config.oracle_grid_step)
    manifest.data["dropped_seeds"] = dropped
    manifest.data["roots"] = [
        {"n": r.order, "re": r.k.real, "im": r.k.imag, "residual": r.residual}
        for r in roots]
    manifest.time_step("roots")
    manifest.add_output(_write(out_dir, "oracle_roots.csv", roots_csv(roots)))
    manifest.write(out_dir)
    return roots


def run_oracle_map(config: RunConfig, out_dir, resolution=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config, "oracle-map")
    problem = oracle_problem(config)
    res = resolution or config.map_resolution
    re_axis, im_axis, values = contour_map(problem, config.rectangle(), res)
    manifest.time_step("map")
    manifest.add_output(_write(out_dir, "oracle_map.csv", map_csv(re_axis, im_axis, values)))
    fig_path = out_dir / "oracle_map.png"
    plots.save_oracle_map(fig_path, re_axis, im_axis, values)
    manifest.add_output(fig_path)
    manifest.write(out_dir)
    return re_axis, im_axis, values


def run_indicator_probe(config: RunConfig, center, radius, self_test=False):
    """One indicator evaluation with per-node diagnostics (debug view)."""
    if self_test:
        lam = center
        provider = MatrixProvider(lambda z: [[z - lam]], 1)
    else:
        _, bundle = build_problem(config)
        provider = BundleProvider(bundle)
    region = SearchRegion(center, radius, 1)
    cfg = config.sim_config()
    detail = indicator_detailed(provider, region, cfg)
    # recompute the two projection norms for the report (solves repeated;
    # a debug path, clarity beats the extra contour sweep)
    from .sim import _contour_solves, _probe_vector

    report = {
        "indicator": detail.value,
        "degenerate": detail.degenerate,
        "rotated": detail.rotated,
        "aborted": detail.aborted,
        "max_solve_residual": detail.max_solve_residual,
    }
    if not detail.aborted:
        f = _probe_vector(provider.dimension, cfg.seed)
        rotation = np.pi / cfg.n_quad if detail.rotated else 0.0
        nodes, xs, _ = _contour_solves(provider, region, f, cfg.n_quad,
                                       cfg.residual_cap, rotation)
        weights = (nodes - region.center)[:, None]
        report["norm_full"] = float(np.linalg.norm(np.mean(weights * xs, axis=0)))
        report["norm_half"] = float(np.linalg.norm(np.mean((weights * xs)[1::2], axis=0)))
        report["node_solution_norms"] = [float(v) for v in np.linalg.norm(xs, axis=1)]
    return report


def run_assemble_check(config: RunConfig, out_dir):
    """Assembly sanity report: invariant residuals at the configured level."""
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config, "assemble-check")
    mesh, bundle = build_problem(config)
    ones = np.ones(bundle.dimension)
    k_probe = complex(0.5 * (config.re_min + config.re_max) or 1.0,
                      0.5 * (config.im_min + config.im_max))
    from .assembly import assemble_F
    from .linalg import norm_inf

    f_mat = assemble_F(bundle, k_probe)
    asym = abs(f_mat - f_mat.T)
    checks = {
        "stiffness_kernel": float(np.max(np.abs(bundle.stiffness @ ones))
                                  / norm_inf(bundle.stiffness)),
        "mass_total_vs_area": float(abs(bundle.mass.sum().real - np.pi * config.radius ** 2)),
        "modes_c0_sum_minus_2pi": float(abs(np.sum(bundle.modes.cos_modes[0]) - 2 * np.pi)),
        "F_asymmetry": float(asym.max() if asym.nnz else 0.0),
        "probe_k": [k_probe.real, k_probe.imag],
    }
    manifest.data["mesh"] = mesh_stats(mesh)
    manifest.data["checks"] = checks
    manifest.time_step("assemble-check")
    lines = [f"{name}: {value}" for name, value in checks.items()]
    manifest.add_output(_write(out_dir, "assemble_check.txt", "\n".join(lines) + "\n"))
    manifest.write(out_dir)
    return checks
