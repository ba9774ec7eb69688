"""Parallel multi-step spectral indicator search for nonlinear eigenvalues.

A rectangle of the complex plane is covered by overlapping disks.  For
each disk the resolvent projection P f = (1/2 pi i) oint F(z)^{-1} f dz
is approximated by the trapezoidal rule on the contour at two quadrature
resolutions (the half-count estimate reuses the even-indexed nodes), and
the indicator

    I = (1/sqrt(N)) ||P f at N nodes|| / ||P f at N/2 nodes||

flags regions that contain eigenvalues: the two estimates agree (ratio
near 1) exactly when the projection is nonzero, while for an eigenvalue-
free region both shrink at e^{-c N} rates and their ratio stays tiny.

Regions are axis-aligned squares probed on their circumscribed circles;
a flagged square splits into its four quarters, so the live squares tile
(never overlap) and the contour radius halves per level, while adjacent
contours still overlap enough that no point of the parent square leaves
coverage.  Disk-shaped regions with radius-r/sqrt(2) children cover the
same sets but their overlaps compound: the number of live regions per
eigenvalue grows ~1.45x per level, which is exponential in the requested
precision.  The recursion stops once the contour radius reaches that
precision; surviving centers are deduplicated and refined by eigenvector
extraction.

Noise-floor guard: far from every eigenvalue both quadrature sums sink
to the rounding floor of the solver, where their ratio is an O(1) random
number and the printed indicator would subdivide forever.  The guard
estimates the floor from the same solves via the highest resolved
Fourier mode A = mean((-1)^j (z_j - c) x_j): an enclosed eigenvalue makes
||P_half|| >> ||A||, while in the floor regime (and in the pure
quadrature-decay regime, which also means "no eigenvalue here") the two
are comparable.  Regions whose solution norms are nearly constant over
the contour and whose half-projection is within a small factor of A are
declared eigenvalue-free.  An eigenvalue close to the contour always
defeats the guard through the solution-norm variation.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import OperatorBundle, assemble_F
from .errors import BudgetError, NearPoleError, SingularError
from .linalg import inverse_iteration, lu_factor

_DEG_RATIO = 3.0        # ||P_half|| <= ratio * ||A|| counts as floor-level
_DEG_VARIATION = 20.0   # max/min solution norm below this means "smooth"


@dataclass(frozen=True)
class SimConfig:
    """Search parameters; defaults follow the method's reference values."""

    n_quad: int = 32
    tol_ind: float = 0.1
    tol_eps: float = 1e-3
    r0: float = 0.25
    seed: int = 0
    max_levels: int = 64
    region_cap: int = 20000
    workers: int = 1
    residual_cap: float = 1e-8
    extract_tol: float = 1e-8
    polish: bool = True

    def __post_init__(self):
        if self.n_quad < 8 or self.n_quad % 2:
            raise ValueError("n_quad must be even and >= 8")
        if not 0 < self.tol_ind < 1:
            raise ValueError("tol_ind must be in (0, 1)")
        if not 0 < self.tol_eps < self.r0:
            raise ValueError("need 0 < tol_eps < r0")


@dataclass
class SearchRegion:
    """Square cell with side radius*sqrt(2); radius is the circumscribed
    contour radius the quadrature runs on."""

    center: complex
    radius: float
    level: int
    parent: "SearchRegion | None" = None
    indicator: float = float("nan")

    def children(self):
        off = self.radius * np.sqrt(2.0) / 4.0  # quarter-square centers
        return [SearchRegion(self.center + off * (sx + 1j * sy),
                             0.5 * self.radius, self.level + 1, self)
                for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)]

    def ancestry(self):
        chain = []
        node = self
        while node is not None:
            chain.append(node)
            node = node.parent
        return chain[::-1]


@dataclass
class ResonanceResult:
    k: complex
    residual: float
    eigenvector: np.ndarray | None
    level: int
    history: list
    indicator_trace: list
    converged: bool = True
    flags: list = field(default_factory=list)
    cluster_size: int = 1


@dataclass
class TraceEntry:
    level: int
    center: complex
    radius: float
    indicator: float
    decision: str

    def format(self):
        return (f"L{self.level} center={self.center.real:+.9f}{self.center.imag:+.9f}i "
                f"r={self.radius:.3e} I={self.indicator:.3e} {self.decision}")


class MatrixProvider:
    """Wraps a callable k -> sparse (or small dense) complex matrix."""

    def __init__(self, fn, dimension):
        self.fn = fn
        self.dimension = dimension

    def matrix(self, k):
        return sp.csr_matrix(self.fn(k), dtype=complex)

    def solver(self, k):
        return lu_factor(self.matrix(k))

    def quadratic_form(self, k, u):
        return complex(u @ (self.matrix(k) @ u))


class _BorderedSolver:
    """Solves F(k) x = f through the bordered sparse system.

    With E(k) = B diag(gamma) B^T of rank 2N+1, [[A, -B], [B^T, -1/gamma]]
    eliminates to F = A - E, so one sparse factorization with no dense
    boundary block replaces the dense-block factorization of F itself.
    Residuals are still measured against the true F action.
    """

    def __init__(self, a_k, b_cols, gamma):
        self.a_k = a_k
        self.b_cols = b_cols
        self.gamma = gamma
        self.dim = a_k.shape[0]
        aug = sp.bmat([[a_k, -b_cols],
                       [b_cols.T, sp.diags(-1.0 / gamma)]], format="csc")
        self.fact = lu_factor(aug)

    def apply_true(self, x):
        return self.a_k @ x - self.b_cols @ (self.gamma * (self.b_cols.T @ x))

    def solve_checked(self, f):
        rhs = np.concatenate([f, np.zeros(len(self.gamma), dtype=complex)])
        y = self.fact.solve(rhs)
        x = y[: self.dim]
        b_norm = np.linalg.norm(f)
        resid = np.linalg.norm(self.apply_true(x) - f) / b_norm if b_norm else 0.0
        return x, float(resid)


class BundleProvider:
    """F(k) provider backed by an assembled OperatorBundle."""

    def __init__(self, bundle: OperatorBundle):
        self.bundle = bundle
        self.dimension = bundle.dimension
        loop = bundle.modes.boundary_loop
        rows = np.tile(loop, bundle.mode_rows.shape[0])
        cols = np.repeat(np.arange(bundle.mode_rows.shape[0]), len(loop))
        self._b_cols = sp.coo_matrix(
            (bundle.mode_rows.ravel(), (rows, cols)),
            shape=(bundle.dimension, bundle.mode_rows.shape[0])).tocsc()

    def matrix(self, k):
        return assemble_F(self.bundle, k)

    def solver(self, k):
        gamma = self.bundle.dtn_coefficients(k)
        keep = np.abs(gamma) > 1e-200
        return _BorderedSolver(self.bundle.sparse_without_dtn(k).tocsc(),
                               self._b_cols[:, keep], gamma[keep])

    def quadratic_form(self, k, u):
        b = self.bundle
        val = u @ (b.base @ u) - k * k * (u @ (b.mass @ u))
        proj = self._b_cols.T @ u
        val -= np.sum(b.dtn_coefficients(k) * proj * proj)
        return complex(val)


def contour_nodes(region: SearchRegion, n_points: int, rotation: float = 0.0):
    j = np.arange(1, n_points + 1)
    return region.center + region.radius * np.exp(2j * np.pi * j / n_points + 1j * rotation)


def _contour_solves(provider, region, f, n_points, residual_cap, rotation=0.0):
    """Solutions x_j of F(z_j) x_j = f at the contour nodes."""
    nodes = contour_nodes(region, n_points, rotation)
    xs = []
    worst = 0.0
    for z in nodes:
        try:
            x, resid = provider.solver(z).solve_checked(f)
        except SingularError:
            raise NearPoleError(f"F exactly singular at node {z:.6f}")
        worst = max(worst, resid)
        if resid > residual_cap or not np.all(np.isfinite(x)):
            raise NearPoleError(
                f"solve residual {resid:.2e} at node {z:.6f} (cap {residual_cap:.0e})")
        xs.append(x)
    return nodes, np.array(xs), worst


def projection_apply(provider, region: SearchRegion, f, n_points: int,
                     residual_cap: float = 1e-8):
    """Trapezoidal contour quadrature of (1/2 pi i) oint F(z)^{-1} f dz."""
    nodes, xs, _ = _contour_solves(provider, region, np.asarray(f, dtype=complex),
                                   n_points, residual_cap)
    weights = nodes - region.center
    return np.mean(weights[:, None] * xs, axis=0)


@dataclass
class IndicatorResult:
    value: float
    degenerate: bool = False
    rotated: bool = False
    aborted: bool = False
    max_solve_residual: float = 0.0


def _indicator_from_solves(nodes, xs, center, n_quad):
    weights = (nodes - center)[:, None]
    wx = weights * xs
    p_full = np.mean(wx, axis=0)
    p_half = np.mean(wx[1::2], axis=0)          # nodes z_2, z_4, ..., z_N
    signs = np.where(np.arange(1, n_quad + 1) % 2 == 0, 1.0, -1.0)
    alt = np.mean(signs[:, None] * wx, axis=0)  # highest resolved Fourier mode
    norms = np.linalg.norm(xs, axis=1)
    n_full = np.linalg.norm(p_full)
    n_half = np.linalg.norm(p_half)
    n_alt = np.linalg.norm(alt)
    variation = norms.max() / max(norms.min(), 1e-300)
    if n_half == 0.0 and n_full == 0.0:
        return IndicatorResult(0.0, degenerate=True)
    if n_half <= _DEG_RATIO * n_alt and variation <= _DEG_VARIATION:
        return IndicatorResult(0.0, degenerate=True)
    if n_half == 0.0:
        return IndicatorResult(float("inf"))
    return IndicatorResult(float(n_full / (np.sqrt(n_quad) * n_half)))


def indicator(provider, region: SearchRegion, config: SimConfig, f=None) -> float:
    """Eigenvalue-presence indicator of one region."""
    return indicator_detailed(provider, region, config, f).value


def indicator_detailed(provider, region, config, f=None) -> IndicatorResult:
    if f is None:
        f = _probe_vector(provider.dimension, config.seed)
    f = np.asarray(f, dtype=complex)
    try:
        nodes, xs, worst = _contour_solves(provider, region, f, config.n_quad,
                                           config.residual_cap)
        res = _indicator_from_solves(nodes, xs, region.center, config.n_quad)
        res.max_solve_residual = worst
        return res
    except NearPoleError:
        pass
    try:  # one retry with the node set rotated between the old nodes
        nodes, xs, worst = _contour_solves(provider, region, f, config.n_quad,
                                           config.residual_cap,
                                           rotation=np.pi / config.n_quad)
        res = _indicator_from_solves(nodes, xs, region.center, config.n_quad)
        res.rotated = True
        res.max_solve_residual = worst
        return res
    except NearPoleError:
        return IndicatorResult(0.0, aborted=True)


def _probe_vector(dimension, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(dimension) + 1j * rng.standard_normal(dimension)
    return f / np.linalg.norm(f)


def level_one_cover(rect, r0):
    """Square cells of side r0*sqrt(2) tiling rect, contour radius r0."""
    spacing = r0 * np.sqrt(2.0)
    nx = max(1, int(np.ceil(rect.width / spacing - 1e-12)))
    ny = max(1, int(np.ceil(rect.height / spacing - 1e-12)))
    regions = []
    for iy in range(ny):
        for ix in range(nx):
            center = complex(rect.re_min + (ix + 0.5) * spacing,
                             rect.im_min + (iy + 0.5) * spacing)
            regions.append(SearchRegion(center, r0, 1))
    return regions


def _cluster(candidates, tol):
    """Union-find single linkage with link distance 2*tol."""
    n = len(candidates)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pts = np.asarray(candidates, dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(pts[i] - pts[j]) <= 2.0 * tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = [(complex(np.mean(pts[members])), members) for members in groups.values()]
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def deduplicate(candidates, tol):
    """Cluster centroids of the candidate list (single linkage, 2*tol)."""
    return [centroid for centroid, _ in _cluster(candidates, tol)]


_WORKER_STATE = {}


def _init_worker(provider, f, config):
    _WORKER_STATE["provider"] = provider
    _WORKER_STATE["f"] = f
    _WORKER_STATE["config"] = config


def _eval_region_task(region):
    return indicator_detailed(_WORKER_STATE["provider"], region,
                              _WORKER_STATE["config"], _WORKER_STATE["f"])


def _evaluate_level(provider, regions, config, f):
    if config.workers > 1 and len(regions) > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(min(config.workers, len(regions)), _init_worker,
                      (provider, f, config)) as pool:
            return pool.map(_eval_region_task, regions, chunksize=1)
    return [indicator_detailed(provider, region, config, f) for region in regions]


def search(provider, rect, config: SimConfig, trace=None):
    """All eigenvalues of F in the rectangle, to tol_eps, with extraction.

    trace, when given, is a list collecting TraceEntry records (one per
    examined region, deterministic order).
    """
    f = _probe_vector(provider.dimension, config.seed)
    live = level_one_cover(rect, config.r0)
    candidates = []
    while True:
        if len(live) > config.region_cap:
            raise BudgetError(f"{len(live)} live regions exceed cap {config.region_cap}; "
                              "indicator threshold pathology")
        level_results = _evaluate_level(provider, live, config, f)
        passers = []
        for region, res in zip(live, level_results):
            region.indicator = res.value
            if res.aborted:
                decision = "abort"
            elif res.value > config.tol_ind:
                decision = "subdivide"
                passers.append(region)
            else:
                decision = "drop"
            if trace is not None:
                trace.append(TraceEntry(region.level, region.center, region.radius,
                                        res.value, decision))
        if not passers:
            return []
        child_radius = 0.5 * passers[0].radius
        finished = child_radius <= config.tol_eps or passers[0].level + 1 > config.max_levels
        children = [child for region in passers for child in region.children()]
        if finished:
            candidates = children
            break
        live = children
    centers = [c.center for c in candidates]
    results = []
    for centroid, members in _cluster(centers, config.tol_eps):
        if not rect.contains(centroid, pad=config.tol_eps):
            continue
        rep = candidates[min(members, key=lambda i: abs(centers[i] - centroid))]
        result = extract_eigenpair(provider, centroid, config)
        chain = rep.ancestry()
        result.level = rep.level
        result.history = [node.center for node in chain]
        result.indicator_trace = [node.indicator for node in chain[:-1]]
        result.cluster_size = len(members)
        results.append(result)
    # adjacent lineages around one eigenvalue can survive as separate
    # clusters; after refinement they coincide, so merge again on k
    results.sort(key=lambda r: r.residual)
    merged = []
    for result in results:
        twin = next((m for m in merged if abs(m.k - result.k) <= config.tol_eps), None)
        if twin is None:
            merged.append(result)
        else:
            twin.cluster_size += result.cluster_size
    if trace is not None:
        for result in merged:
            trace.append(TraceEntry(result.level, result.k, config.tol_eps,
                                    result.indicator_trace[-1] if result.indicator_trace
                                    else float("nan"), "accept"))
    merged.sort(key=lambda r: (r.k.real, r.k.imag))
    return merged


def _rayleigh_newton(provider, k0, u, tol_eps):
    """Newton on g(k) = u^T F(k) u with a fixed vector; derivative by
    central difference.  Returns the root or None when it diverges."""
    k = complex(k0)
    step_scale = 1e-7 * max(1.0, abs(k))
    for _ in range(30):
        g = provider.quadratic_form(k, u)
        dg = (provider.quadratic_form(k + step_scale, u)
              - provider.quadratic_form(k - step_scale, u)) / (2 * step_scale)
        if dg == 0:
            return None
        delta = g / dg
        if abs(delta) > 10 * tol_eps:
            return None
        k = k - delta
        if abs(delta) < 1e-13 * max(abs(k), 1.0):
            return k
        if abs(k - k0) > 3 * tol_eps:
            return None
    return k


def extract_eigenpair(provider, k, config: SimConfig) -> ResonanceResult:
    """Eigenvector of the smallest eigenvalue of F(k), refining k with it.

    Alternates inverse iteration on F(k) with a Rayleigh-functional Newton
    step on u^T F(k) u = 0: the deduplicated center carries O(tol_eps)
    geometric error that the refinement removes at the cost of a couple of
    extra factorizations.  Falls back to the unrefined center when the
    functional iteration wanders (flagged, not dropped).
    """
    flags = []
    k_cur = complex(k)
    best_u = None
    for _ in range(3 if config.polish else 1):
        mat = provider.matrix(k_cur)
        it = inverse_iteration(mat, tol=config.extract_tol, seed=config.seed)
        best_u = it.vector
        if not it.converged:
            flags.append("no-convergence")
        if not config.polish:
            break
        k_new = _rayleigh_newton(provider, k_cur, it.vector, config.tol_eps)
        if k_new is None:
            if "polish-diverged" not in flags:
                flags.append("polish-diverged")
            break
        if abs(k_new - k_cur) < 1e-12 * max(abs(k_new), 1.0):
            k_cur = k_new
            break
        k_cur = k_new
    mat = provider.matrix(k_cur)
    residual = float(np.linalg.norm(mat @ best_u))
    return ResonanceResult(k_cur, residual, best_u, 0, [], [],
                           converged="no-convergence" not in flags, flags=flags)


def format_trace(trace):
    return "\n".join(entry.format() for entry in trace) + ("\n" if trace else "")
