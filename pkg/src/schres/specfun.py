"""Cylinder functions of integer order for complex arguments.

Bessel J via power series (small |z|) or Miller's backward recurrence
normalized with J_0 + 2*sum(J_2m) = 1 (moderate |z|).  Hankel H^(1) via
series for orders 0 and 1 (small |z|) or the large-argument expansion,
then forward recurrence, which is stable because |H_n| grows with n.
Everything works in the lower half-plane where resonances live.

Supported domain: |z| <= 100, order <= 60.  Out of range raises
DomainError instead of silently degrading.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, PoleError

ABS_Z_MAX = 100.0
ORDER_MAX = 60
_EULER_GAMMA = 0.5772156649015328606
# crossover radii: series below, Miller / asymptotic expansion above
_J_SERIES_RADIUS = 4.0
_H_SERIES_RADIUS = 12.0


class CylKind(Enum):
    BESSEL_J = "bessel_j"
    HANKEL1 = "hankel1"


@dataclass(frozen=True)
class CylSequence:
    """Values of J_n or H^(1)_n for n = 0..order_max at one argument."""

    order_max: int
    argument: complex
    values: np.ndarray
    kind: CylKind

    def __post_init__(self):
        if len(self.values) != self.order_max + 1:
            raise ValueError("sequence length must be order_max + 1")

    def __getitem__(self, n: int) -> complex:
        return self.values[n]


def _check_domain(n_max: int, z: np.ndarray, allow_zero: bool) -> None:
    if n_max < 0 or n_max > ORDER_MAX:
        raise DomainError(f"order {n_max} outside supported range [0, {ORDER_MAX}]")
    a = np.abs(z)
    if np.any(a > ABS_Z_MAX):
        raise DomainError(f"|z| = {a.max():.3g} exceeds supported radius {ABS_Z_MAX}")
    if not allow_zero and np.any(a == 0.0):
        raise DomainError("z = 0 not allowed here")


def _j_series(n_max: int, z: np.ndarray) -> np.ndarray:
    """Power series sum_m (-1)^m (z/2)^(n+2m) / (m! (n+m)!), |z| small."""
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    q = 0.25 * z * z
    half = 0.5 * z
    # term at m=0 is (z/2)^n / n!, built up order by order
    lead = np.ones_like(z)
    fact = 1.0
    for n in range(n_max + 1):
        if n > 0:
            lead = lead * half
            fact *= n
        term = lead / fact
        total = term.copy()
        for m in range(1, 60):
            term = -term * q / (m * (n + m))
            total += term
            if np.max(np.abs(term)) <= 1e-18 * max(np.max(np.abs(total)), 1e-300):
                break
        out[n] = total
    return out


def _miller_start_order(n_max: int, abs_z: float) -> int:
    # start high enough that the unwanted Y-component is damped below 1e-17
    s = max(n_max, int(np.ceil(abs_z)))
    m = s + 10
    while True:
        grow = 2.0 * m / (np.e * max(abs_z, 1e-30))
        if grow > 1.0 and (m - s) * np.log(grow) >= 40.0:
            return m
        m += 5


def _j_miller(n_max: int, z: np.ndarray) -> np.ndarray:
    """Backward recurrence seeded at a high order, normalized by
    J_0 + 2*sum_{m>=1} J_{2m} = 1 (valid for all complex z)."""
    m_start = _miller_start_order(n_max, float(np.max(np.abs(z))))
    jp = np.zeros_like(z)                       # J~_{m+1}
    jc = np.full(z.shape, 1e-30, dtype=complex)  # J~_m
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    norm = np.zeros_like(z)
    if m_start % 2 == 0:
        norm += 2.0 * jc
    for m in range(m_start, 0, -1):
        jm = (2.0 * m / z) * jc - jp
        jp, jc = jc, jm
        n = m - 1
        if n <= n_max:
            out[n] = jc
        if n % 2 == 0:
            norm += 2.0 * jc
    norm -= jc  # n = 0 counted once, not twice
    return out / norm


def _bessel_j_values(n_max: int, z: np.ndarray) -> np.ndarray:
    """J_0..J_{n_max} at each entry of z; shape (n_max+1,) + z.shape."""
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    a = np.abs(z)
    zero = a == 0.0
    small = (a <= _J_SERIES_RADIUS) & ~zero
    large = a > _J_SERIES_RADIUS
    if np.any(zero):
        out[:, zero] = 0.0
        out[0, zero] = 1.0
    if np.any(small):
        out[:, small] = _j_series(n_max, z[small])
    if np.any(large):
        out[:, large] = _j_miller(n_max, z[large])
    return out


def _y0_y1_series(z, j0, j1):
    q = 0.25 * z * z
    log_half = np.log(0.5 * z)
    # Y_0
    term = np.ones_like(z)
    h = 0.0
    total0 = np.zeros_like(z)
    for k in range(1, 80):
        term = -term * q / (k * k)
        h += 1.0 / k
        contrib = -h * term  # (-1)^{k+1} h_k (z/2)^{2k} / (k!)^2
        total0 += contrib
        if np.max(np.abs(contrib)) <= 1e-18 * max(np.max(np.abs(total0)), 1e-300):
            break
    y0 = (2.0 / np.pi) * ((log_half + _EULER_GAMMA) * j0 + total0)
    # Y_1: sum_k (-1)^k (h_k + h_{k+1}) (z/2)^{2k+1} / (k! (k+1)!)
    term = 0.5 * z
    hk = 0.0
    hk1 = 1.0
    total1 = term * (hk + hk1)
    for k in range(1, 80):
        term = -term * q / (k * (k + 1))
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        contrib = term * (hk + hk1)
        total1 += contrib
        if np.max(np.abs(contrib)) <= 1e-18 * max(np.max(np.abs(total1)), 1e-300):
            break
    y1 = (2.0 / np.pi) * (log_half + _EULER_GAMMA) * j1 - 2.0 / (np.pi * z) \
        - total1 / np.pi
    return y0, y1


def _h0_h1_asymptotic(z: np.ndarray):
    """Large-argument expansion of H^(1)_0, H^(1)_1; |z| > 17, arg z
    away from -pi (callers reflect the lower-left quadrant first)."""
    pref = np.sqrt(2.0 / (np.pi * z))
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        total = np.ones_like(z)
        term = np.ones_like(z)
        ik = 1.0 + 0.0j
        prev = np.inf
        for k in range(1, 40):
            term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k)
            ik *= 1j
            contrib = ik * term / z ** k
            size = np.max(np.abs(contrib))
            if size > prev:  # divergent tail reached
                break
            total += contrib
            prev = size
            if size <= 1e-18 * max(np.max(np.abs(total)), 1e-300):
                break
        phase = np.exp(1j * (z - 0.5 * nu * np.pi - 0.25 * np.pi))
        out.append(pref * phase * total)
    return out[0], out[1]


def _h0_h1_cf2(z: np.ndarray):
    """H^(1)_0, H^(1)_1 for Im z > 0 via Steed's continued fraction.

    In the upper half-plane H^(1) is the recessive solution, so forming
    J + iY cancels by e^{2 Im z}.  Instead compute f2 = H'_0/H_0 from
    f2 = i - 1/(2z) + (i/z) K_k[ ((2k-1)^2/4) / (2(z+ik)) ]  (Lentz),
    then H_0 from the Wronskian J_0 H'_0 - J'_0 H_0 = 2i/(pi z) and
    H_1 = -f2 H_0.  Every quantity stays O(1)-conditioned.
    """
    f = np.full(z.shape, 1e-30, dtype=complex)
    c = f.copy()
    d = np.zeros_like(z)
    for k in range(1, 2001):
        a = (k - 0.5) ** 2
        b = 2.0 * (z + 1j * k)
        d = b + a * d
        d[d == 0] = 1e-30
        c = b + a / c
        c[c == 0] = 1e-30
        d = 1.0 / d
        delta = c * d
        f = f * delta
        if np.max(np.abs(delta - 1.0)) < 1e-16:
            break
    f2 = 1j - 0.5 / z + (1j / z) * f
    jt = _bessel_j_values(1, z)
    h0 = (2j / (np.pi * z)) / (jt[0] * f2 + jt[1])
    h1 = -f2 * h0
    return h0, h1


def _h0_h1_values(z: np.ndarray):
    """Seeds H^(1)_0 and H^(1)_1 on an array of nonzero arguments."""
    h0 = np.empty_like(z)
    h1 = np.empty_like(z)
    a = np.abs(z)
    # series everywhere below the expansion radius except well inside the
    # upper half-plane, where J + iY forms the recessive solution badly
    small = (a <= _H_SERIES_RADIUS) & ((z.imag <= 2.0) | (a <= 2.0))
    upper = (a <= _H_SERIES_RADIUS) & ~small
    if np.any(small):
        zs = z[small]
        j = _bessel_j_values(1, zs)
        y0, y1 = _y0_y1_series(zs, j[0], j[1])
        h0[small] = j[0] + 1j * y0
        h1[small] = j[1] + 1j * y1
    if np.any(upper):
        h0[upper], h1[upper] = _h0_h1_cf2(z[upper])
    big = a > _H_SERIES_RADIUS
    if np.any(big):
        zb = z[big]
        # the expansion degrades near arg z = -pi; reflect lower-left
        # points with H_n(z) = (-1)^n [H_n(-z) + 2 J_n(-z)]
        refl = (zb.real < 0) & (np.angle(zb) < 0)
        direct = ~refl
        hb0 = np.empty_like(zb)
        hb1 = np.empty_like(zb)
        if np.any(direct):
            hb0[direct], hb1[direct] = _h0_h1_asymptotic(zb[direct])
        if np.any(refl):
            zr = -zb[refl]
            a0, a1 = _h0_h1_asymptotic(zr)
            j = _bessel_j_values(1, zr)
            hb0[refl] = a0 + 2.0 * j[0]
            hb1[refl] = -(a1 + 2.0 * j[1])
        h0[big] = hb0
        h1[big] = hb1
    return h0, h1


def _hankel1_values(n_max: int, z: np.ndarray) -> np.ndarray:
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    h0, h1 = _h0_h1_values(z)
    out[0] = h0
    if n_max >= 1:
        out[1] = h1
    for n in range(1, n_max):
        out[n + 1] = (2.0 * n / z) * out[n] - out[n - 1]
    return out


def bessel_j_table(n_max: int, z) -> np.ndarray:
    """Vectorized J_0..J_{n_max}; returns shape (n_max+1,) + shape(z)."""
    z = np.asarray(z, dtype=complex)
    _check_domain(n_max, z, allow_zero=True)
    return _bessel_j_values(n_max, z)


def hankel1_table(n_max: int, z) -> np.ndarray:
    """Vectorized H^(1)_0..H^(1)_{n_max}; z must be nonzero everywhere."""
    z = np.asarray(z, dtype=complex)
    _check_domain(n_max, z, allow_zero=False)
    return _hankel1_values(n_max, z)


def bessel_j_seq(n_max: int, z: complex) -> CylSequence:
    """J_0(z)..J_{n_max}(z) for complex z, |z| <= 100, n_max <= 60."""
    vals = bessel_j_table(n_max, np.array([z], dtype=complex))[:, 0]
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"non-finite J_n at z = {z}")
    return CylSequence(n_max, complex(z), vals, CylKind.BESSEL_J)


def hankel1_seq(n_max: int, z: complex) -> CylSequence:
    """H^(1)_0(z)..H^(1)_{n_max}(z); z != 0 (log singularity at 0)."""
    vals = hankel1_table(n_max, np.array([z], dtype=complex))[:, 0]
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"non-finite H^(1)_n at z = {z}")
    return CylSequence(n_max, complex(z), vals, CylKind.HANKEL1)


def hankel1_prime(n: int, z: complex, seq: CylSequence) -> complex:
    """d/dz H^(1)_n(z) from a precomputed sequence.

    Uses H'_n = H_{n-1} - (n/z) H_n; for n = 0 this is -H_1.
    """
    if seq.kind is not CylKind.HANKEL1:
        raise DomainError("sequence must hold Hankel values")
    if seq.order_max < max(n, 1):
        raise DomainError(f"sequence holds orders <= {seq.order_max}, need {max(n, 1)}")
    if n == 0:
        return -seq[1]
    return seq[n - 1] - (n / z) * seq[n]


def dtn_symbol(n: int, k: complex, radius: float) -> complex:
    """Boundary-mode symbol (k/pi) * H^(1)'_n(kR) / H^(1)_n(kR)."""
    if k == 0:
        raise DomainError("k = 0 not allowed")
    seq = hankel1_seq(max(n, 1), k * radius)
    return _symbol_from_seq(n, k, radius, seq)


def _symbol_from_seq(n: int, k: complex, radius: float, seq: CylSequence) -> complex:
    hn = seq[n]
    if not np.isfinite(hn) or abs(hn) < 1e-280:
        raise PoleError(f"H^(1)_{n}({k * radius}) vanishes; DtN symbol pole")
    val = (k / np.pi) * hankel1_prime(n, k * radius, seq) / hn
    if not np.isfinite(val):
        raise PoleError(f"DtN symbol overflow at n={n}, k={k}")
    return val


def dtn_symbols(n_max: int, k: complex, radius: float) -> np.ndarray:
    """All symbols n = 0..n_max from a single Hankel sequence."""
    if k == 0:
        raise DomainError("k = 0 not allowed")
    seq = hankel1_seq(max(n_max, 1), k * radius)
    return np.array([_symbol_from_seq(n, k, radius, seq) for n in range(n_max + 1)])
