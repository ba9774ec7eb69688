"""Analytic resonances for a constant potential on a disk.

Matching the interior Bessel expansion against the exterior outgoing
Hankel expansion at the disk boundary gives, per angular order n, the
determinant

    d_n(k) = w J_{n+1}(w r0) H^(1)_n(k r0) - k H^(1)_{n+1}(k r0) J_n(w r0),
    w = sqrt(k^2 - V0)  (principal branch),

whose zeros are the exact resonances.  Replacing w by -w only flips the
sign of d_n by (-1)^n, so |d_n| and the zero set are branch independent.
For V0 = 0 the Wronskian collapses every d_n to 2i/(pi r0).

Roots are located by scanning |d_n| on a grid over the search rectangle
and polishing each local minimum with a Newton iteration (derivative by
central difference), then deduplicated per order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParamError
from .specfun import bessel_j_table, hankel1_table

DEFAULT_GRID_STEP = 0.05
_NEWTON_STEP = 1e-7
_NEWTON_ITER = 60


@dataclass(frozen=True)
class DiskProblem:
    """Constant potential V0 on the disk |x| <= r0."""

    r0: float
    v0: complex
    n_max: int = 10

    def __post_init__(self):
        if self.r0 <= 0:
            raise ParamError("disk radius must be positive")
        if self.n_max < 0:
            raise ParamError("n_max must be >= 0")


@dataclass(frozen=True)
class OracleRoot:
    order: int
    k: complex
    residual: float


def d_n(problem: DiskProblem, n: int, k: complex, sheet: int = 0) -> complex:
    """Matching determinant for angular order n.

    sheet 0 evaluates the outgoing kernel on the principal branch of
    H^(1); sheet +1 evaluates it one counterclockwise turn around k = 0,
    where the kernel continues to H^(1) - 4J (the log branch of Y_n gains
    4i J_n per turn).  Resonances of a real potential pair up as
    k <-> -conj(k) across adjacent sheets, not within one sheet: that is
    the even-dimensional form of the usual mirror symmetry.
    """
    if k == 0:
        raise DomainError("k = 0 not allowed")
    return complex(d_n_grid(problem, n, np.array([k], dtype=complex), sheet)[0])


def d_n_grid(problem: DiskProblem, n: int, k: np.ndarray, sheet: int = 0) -> np.ndarray:
    """Vectorized d_n over an array of nonzero k."""
    if sheet not in (0, 1):
        raise ParamError("sheet must be 0 (principal) or 1 (one counterclockwise turn)")
    k = np.asarray(k, dtype=complex)
    w = np.sqrt(k * k - problem.v0)
    j = bessel_j_table(n + 1, w * problem.r0)
    h = hankel1_table(n + 1, k * problem.r0)
    if sheet == 1:
        h = h - 4.0 * bessel_j_table(n + 1, k * problem.r0)
    return w * j[n + 1] * h[n] - k * h[n + 1] * j[n]


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned box in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ParamError("degenerate rectangle")

    def contains(self, k: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= k.real <= self.re_max + pad
                and self.im_min - pad <= k.imag <= self.im_max + pad)

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min


def _newton_polish(problem, n, k0):
    k = complex(k0)
    try:
        for _ in range(_NEWTON_ITER):
            f = d_n(problem, n, k)
            df = (d_n(problem, n, k + _NEWTON_STEP) - d_n(problem, n, k - _NEWTON_STEP)) \
                / (2 * _NEWTON_STEP)
            if df == 0:
                return None
            step = f / df
            if abs(step) > 1.0:  # diverging iteration (flat |d_n| landscape)
                return None
            k = k - step
            if abs(step) < 1e-13 * max(abs(k), 1.0):
                return k
    except DomainError:
        return None
    return None


def oracle_roots(problem: DiskProblem, region: Rectangle,
                 grid_step: float = DEFAULT_GRID_STEP):
    """Zeros of d_n, n <= n_max, inside the rectangle.

    Newton is seeded from every strict local minimum of |d_n| on the scan
    grid; converged roots are accepted when |d_n| has dropped at least ten
    orders of magnitude below the grid maximum, re-verified under a 1e-3
    seed perturbation, and deduplicated per order.  Returns (roots list,
    dropped-seed count).
    """
    if grid_step <= 0:
        raise ParamError("grid_step must be positive")
    pad = 2 * grid_step
    re = np.arange(region.re_min - pad, region.re_max + pad + grid_step, grid_step)
    im = np.arange(region.im_min - pad, region.im_max + pad + grid_step, grid_step)
    kk = re[None, :] + 1j * im[:, None]
    flat = kk.ravel()
    flat = np.where(flat == 0, 1e-12 + 0j, flat)
    roots = []
    dropped = 0
    for n in range(problem.n_max + 1):
        mag = np.abs(d_n_grid(problem, n, flat)).reshape(kk.shape)
        accept = 1e-10 * float(np.max(mag))
        interior = np.ones_like(mag, dtype=bool)
        for axis in (0, 1):
            for shift in (1, -1):
                interior &= mag <= np.roll(mag, shift, axis=axis)
        interior[0, :] = interior[-1, :] = False
        interior[:, 0] = interior[:, -1] = False
        # a genuine root cell dips far below the typical |d_n| level; this
        # also rejects the flat V0 = 0 landscape where every cell ties
        interior &= mag <= 0.3 * np.median(mag)
        seeds = kk[interior]
        found = []
        for seed in seeds:
            k_root = _newton_polish(problem, n, seed)
            if k_root is None:
                dropped += 1
                continue
            resid = abs(d_n(problem, n, k_root))
            if resid > accept or not region.contains(k_root):
                continue
            # Newton basin must be stable under a small seed shake
            again = _newton_polish(problem, n, k_root + 1e-3)
            if again is None or abs(again - k_root) > 1e-6:
                dropped += 1
                continue
            found.append(OracleRoot(n, k_root, resid))
        found.sort(key=lambda r: (r.k.real, r.k.imag))
        kept = []
        for root in found:
            if all(abs(root.k - other.k) > 1e-6 for other in kept):
                kept.append(root)
        roots.extend(kept)
    roots.sort(key=lambda r: (r.k.real, r.k.imag, r.order))
    return roots, dropped


def contour_map(problem: DiskProblem, region: Rectangle, resolution: int):
    """min over n of log10 |d_n(k)| sampled on a resolution^2 grid.

    Returns (re_axis, im_axis, values) with values[i, j] at
    (re_axis[j], im_axis[i]).
    """
    if resolution < 16:
        raise ParamError("resolution must be >= 16 per axis")
    re = np.linspace(region.re_min, region.re_max, resolution)
    im = np.linspace(region.im_min, region.im_max, resolution)
    kk = re[None, :] + 1j * im[:, None]
    flat = np.where(kk.ravel() == 0, 1e-12 + 0j, kk.ravel())
    best = np.full(flat.shape, np.inf)
    for n in range(problem.n_max + 1):
        mag = np.abs(d_n_grid(problem, n, flat))
        with np.errstate(divide="ignore"):
            best = np.minimum(best, np.log10(mag))
    return re, im, best.reshape(kk.shape)


def roots_csv(roots) -> str:
    lines = ["n, re, im, residual"]
    for root in roots:
        lines.append(f"{root.order}, {root.k.real:.6f}, {root.k.imag:.6f}, {root.residual:.3e}")
    return "\n".join(lines) + "\n"


def map_csv(re_axis, im_axis, values) -> str:
    lines = ["re, im, value"]
    for i, b in enumerate(im_axis):
        for j, a in enumerate(re_axis):
            lines.append(f"{a:.6f}, {b:.6f}, {values[i, j]:.6f}")
    return "\n".join(lines) + "\n"
