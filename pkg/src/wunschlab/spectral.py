"""Fourier-multiplier calculus on the circle.

Fields are real functions on S^1 sampled at ``x_j = 2*pi*j/N``.  The spectral
view is the one-sided ``rfft`` scaled by ``1/N``, so that ``coeffs[k]`` is the
Fourier coefficient of ``exp(i k x)`` for ``0 <= k <= N/2``.  The trigonometric
interpolant of a field is

    f(x) = c_0 + sum_{0<k<N/2} 2 Re(c_k e^{ikx}) + c_{N/2} cos(N x / 2),

and every operation here is exact on that interpolant.  Odd multipliers
(derivative, Hilbert transform) annihilate the Nyquist mode.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateMeanError, GridMismatch, NotADiffeo

TWO_PI = 2.0 * np.pi

# Relative size of the mean tolerated by the degenerate (mean-zero) gauge.
GAUGE_TOL = 1e-9
# displacements flatter than this are treated as exact rotations
RIGID_TOL = 1e-14


@dataclass(frozen=True)
class GridSpec:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.N}")

    @cached_property
    def nodes(self) -> np.ndarray:
        x = TWO_PI * np.arange(self.N) / self.N
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Nonnegative wavenumbers 0..N/2 of the one-sided spectrum."""
        k = np.arange(self.N // 2 + 1, dtype=float)
        k.setflags(write=False)
        return k

    @property
    def cutoff(self) -> int:
        """Largest mode kept by the 2/3 dealiasing rule."""
        return self.N // 3


class PeriodicField:
    """Immutable samples of a real periodic function plus its cached spectrum."""

    __slots__ = ("grid", "values", "_coeffs")

    def __init__(self, grid: GridSpec, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} samples, got shape {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self._coeffs = None

    # construction -------------------------------------------------------
    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "PeriodicField":
        return cls(grid, np.broadcast_to(fn(grid.nodes), (grid.N,)))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "PeriodicField":
        return cls(grid, np.full(grid.N, float(c)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "PeriodicField":
        return cls(grid, np.zeros(grid.N))

    @classmethod
    def from_coeffs(cls, grid: GridSpec, coeffs) -> "PeriodicField":
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.N // 2 + 1,):
            raise ValueError("coefficient array has the wrong length")
        c = coeffs.copy()
        c[0] = c[0].real
        c[-1] = c[-1].real
        f = cls(grid, np.fft.irfft(c * grid.N, n=grid.N))
        c.setflags(write=False)
        f._coeffs = c
        return f

    @classmethod
    def from_modes(cls, grid: GridSpec, modes) -> "PeriodicField":
        """Build ``sum a*cos(n x + phase)`` from ``(n, a, phase)`` triples."""
        x = grid.nodes
        vals = np.zeros(grid.N)
        for n, a, phase in modes:
            vals = vals + a * np.cos(n * x + phase)
        return cls(grid, vals)

    # spectral view ------------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            c = np.fft.rfft(self.values) / self.grid.N
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    def full_spectrum(self) -> np.ndarray:
        """Coefficients ordered n = 0, 1, ..., N/2, -N/2+1, ..., -1."""
        return np.fft.fft(self.values) / self.grid.N

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    # arithmetic ---------------------------------------------------------
    def _other(self, other):
        if isinstance(other, PeriodicField):
            if other.grid != self.grid:
                raise GridMismatch(f"grids differ: {self.grid.N} vs {other.grid.N}")
            return other.values
        return other

    def __add__(self, other):
        return PeriodicField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PeriodicField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return PeriodicField(self.grid, self._other(other) - self.values)

    def __neg__(self):
        return PeriodicField(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, PeriodicField):
            return NotImplemented
        return PeriodicField(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PeriodicField):
            return NotImplemented
        return PeriodicField(self.grid, self.values / other)

    def __repr__(self):
        return f"PeriodicField(N={self.grid.N}, mean={self.coeffs[0].real:.6g})"

    # norms and evaluation ----------------------------------------------
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def min(self) -> float:
        return float(np.min(self.values))

    def l2(self) -> float:
        """L^2(S^1) norm of the trigonometric interpolant."""
        return float(np.sqrt(_pairing(self.coeffs, self.coeffs)))

    def at(self, y) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary points."""
        return evaluate(self.coeffs, y)

    def shift(self, theta: float) -> "PeriodicField":
        """Return ``f(. + theta)`` exactly in spectrum."""
        c = self.coeffs * np.exp(1j * self.grid.k * theta)
        c[-1] = self.coeffs[-1] * np.cos(self.grid.N / 2 * theta)
        return PeriodicField.from_coeffs(self.grid, c)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


# ---------------------------------------------------------------------------
# low-level spectral helpers (arrays of one-sided coefficients)

def _weights(K: int) -> np.ndarray:
    w = np.full(K, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def _horner(wc: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sum ``wc[k] * exp(i k y)`` over k.

    Builds the table of powers ``z**k`` (``z = exp(iy)``) by doubling, then
    contracts it with the coefficients.  ``wc`` may carry trailing axes
    (several coefficient sets evaluated at once).
    """
    y = np.asarray(y, dtype=float)
    flat = y.reshape(-1)
    K = wc.shape[0]
    out = np.empty((flat.size,) + wc.shape[1:], dtype=complex)
    # keep the power table around a few MB
    chunk = max(1, 2**18 // K)
    for s in range(0, flat.size, chunk):
        z = np.exp(1j * flat[s:s + chunk])
        P = np.empty((K, z.size), dtype=complex)
        P[0] = 1.0
        if K > 1:
            P[1] = z
        n = 2
        while n < K:
            m = min(n, K - n)
            P[n:n + m] = P[:m] * (P[n - 1] * z)
            n += m
        out[s:s + chunk] = np.tensordot(P, wc, axes=(0, 0))
    return out.reshape(y.shape + wc.shape[1:])


def _trimmed(wc: np.ndarray) -> np.ndarray:
    """Drop trailing rows that are exactly zero (dealiased or low-mode data)."""
    nz = np.flatnonzero(np.any(wc.reshape(wc.shape[0], -1) != 0, axis=1))
    return wc[: (nz[-1] + 1 if nz.size else 1)]


def evaluate(coeffs: np.ndarray, y) -> np.ndarray:
    """Evaluate the interpolant with one-sided ``coeffs`` at points ``y``."""
    y = np.asarray(y, dtype=float)
    return _horner(_trimmed(_weights(coeffs.shape[0]) * coeffs), y).real


def evaluate_with_derivative(coeffs: np.ndarray, y):
    """Values and first derivatives of the interpolant at ``y``."""
    y = np.asarray(y, dtype=float)
    K = coeffs.shape[0]
    w = _weights(K)
    dc = 1j * np.arange(K) * coeffs
    dc[-1] = 0.0
    both = _horner(_trimmed(np.stack([w * coeffs, w * dc], axis=-1)), y).real
    return both[..., 0], both[..., 1]


def _pairing(a: np.ndarray, b: np.ndarray) -> float:
    """Exact integral over [0, 2pi] of the product of two interpolants."""
    w = _weights(a.shape[0])
    w[-1] = 0.5
    return float(TWO_PI * np.sum(w * (a * np.conj(b)).real))


def _with_spectrum(f: PeriodicField, c: np.ndarray) -> PeriodicField:
    return PeriodicField.from_coeffs(f.grid, c)


def apply_multiplier(f: PeriodicField, symbol: np.ndarray, odd: bool = False) -> PeriodicField:
    """Multiply the spectrum by ``symbol[k]``, k = 0..N/2.

    For odd multipliers the Nyquist mode is dropped since its image is not
    representable on the grid.
    """
    c = f.coeffs * symbol
    if odd:
        c[-1] = 0.0
    return _with_spectrum(f, c)


def check_same_grid(*fields: PeriodicField) -> GridSpec:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch(f"grids differ: {g.N} vs {f.grid.N}")
    return g


# ---------------------------------------------------------------------------
# basic operators

def mean(f: PeriodicField) -> float:
    return float(f.coeffs[0].real)


def hilbert(f: PeriodicField) -> PeriodicField:
    """Hilbert transform: multiplier ``-i sgn(n)``."""
    sym = -1j * np.ones(f.grid.N // 2 + 1)
    sym[0] = 0.0
    return apply_multiplier(f, sym, odd=True)


def derivative(f: PeriodicField, order: int = 1) -> PeriodicField:
    sym = (1j * f.grid.k) ** order
    return apply_multiplier(f, sym, odd=bool(order % 2))


def lambda_pow(f: PeriodicField, p: float) -> PeriodicField:
    """Apply ``|D|^p`` with the convention ``|0|^p = 0`` for every p >= 0."""
    if p < 0:
        raise ValueError("lambda_pow needs p >= 0")
    sym = f.grid.k ** p
    sym[0] = 0.0
    return apply_multiplier(f, sym)


def truncate(f: PeriodicField, kmax: int) -> PeriodicField:
    """Zero every mode with ``|n| > kmax``."""
    c = f.coeffs.copy()
    c[kmax + 1:] = 0.0
    return _with_spectrum(f, c)


def product(f: PeriodicField, g: PeriodicField) -> PeriodicField:
    """Pointwise product dealiased by the 2/3 rule."""
    grid = check_same_grid(f, g)
    c = np.fft.rfft(f.values * g.values) / grid.N
    c[grid.cutoff + 1:] = 0.0
    return PeriodicField.from_coeffs(grid, c)


def pointwise(f: PeriodicField, g: PeriodicField) -> PeriodicField:
    """Raw collocation product (no dealiasing)."""
    grid = check_same_grid(f, g)
    return PeriodicField(grid, f.values * g.values)


def refine(f: PeriodicField, M: int) -> PeriodicField:
    """Resample on an M-point grid by zero padding (or truncating) the spectrum."""
    grid = GridSpec(M)
    K = M // 2 + 1
    c = np.zeros(K, dtype=complex)
    src = f.coeffs
    if K >= src.shape[0]:
        c[: src.shape[0]] = src
        if M > f.grid.N:
            # split the old Nyquist cosine over +-N/2 as an ordinary mode
            c[src.shape[0] - 1] = src[-1] / 2.0
    else:
        c[:] = src[:K]
        c[-1] = 0.0
    return PeriodicField.from_coeffs(grid, c)


def bandwidth(f: PeriodicField, tol: float = 1e-14) -> int:
    """Highest mode whose coefficient exceeds ``tol`` times the largest one."""
    a = np.abs(f.coeffs)
    if a.max() == 0:
        return 0
    idx = np.nonzero(a > tol * a.max())[0]
    return int(idx[-1])


def inner_l2(f: PeriodicField, g: PeriodicField) -> float:
    check_same_grid(f, g)
    return _pairing(f.coeffs, g.coeffs)


# ---------------------------------------------------------------------------
# principal-value quadrature of the Hilbert kernel

def hilbert_pv(f: PeriodicField, x: float, M: int | None = None) -> float:
    """Hilbert transform at ``x`` by direct quadrature of the cotangent kernel.

    Uses M nodes placed at odd multiples of pi/M from ``x``, so that the
    nodes straddle the singularity symmetrically.  The rule is exact for
    trigonometric polynomials of degree below M; the default M = N therefore
    reproduces the spectral transform up to round-off for band-limited f.
    """
    M = f.grid.N if M is None else int(M)
    offs = (2 * np.arange(M) + 1) * np.pi / M
    y = x + offs
    fy = f.at(y)
    return float(np.sum(fy / np.tan(-offs / 2.0)) / M)


# ---------------------------------------------------------------------------
# inertia operators

@dataclass(frozen=True)
class MetricKind:
    """Inertia operator ``A`` given by an even Fourier symbol ``a(n)``.

    ``variant`` is one of ``homogeneous_half`` (|n|), ``mu_half``
    (delta_0(n) + |n|), ``full_half`` (1 + |n|) or ``homogeneous_s`` (|n|^{2s}).
    """

    variant: str
    s: float = 0.5

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown metric variant {self.variant!r}")
        if self.variant == "homogeneous_s" and self.s < 0:
            raise ValueError("homogeneous_s needs s >= 0")

    def symbol(self, n) -> np.ndarray:
        n = np.abs(np.asarray(n, dtype=float))
        if self.variant == "homogeneous_half":
            return n.copy()
        if self.variant == "mu_half":
            return n + (n == 0)
        if self.variant == "full_half":
            return 1.0 + n
        # |0|^{2s} = 0 for every s, so that s = 0 gives the L^2 metric on mean-zero fields
        return np.where(n == 0, 0.0, n ** (2 * self.s))

    @property
    def degenerate(self) -> bool:
        return float(self.symbol(0)) == 0.0

    @property
    def order(self) -> float:
        return 2 * self.s if self.variant == "homogeneous_s" else 1.0

    @property
    def label(self) -> str:
        if self.variant == "homogeneous_s":
            return f"homogeneous_s({self.s:g})"
        return self.variant

    @classmethod
    def parse(cls, text: str) -> "MetricKind":
        text = text.strip()
        if text.startswith("homogeneous_s"):
            inner = text[len("homogeneous_s"):].strip("()= ")
            return cls("homogeneous_s", float(inner))
        return cls(text)


_VARIANTS = ("homogeneous_half", "mu_half", "full_half", "homogeneous_s")

HOMOGENEOUS_HALF = MetricKind("homogeneous_half")
MU_HALF = MetricKind("mu_half")
FULL_HALF = MetricKind("full_half")


def homogeneous_s(s: float) -> MetricKind:
    return MetricKind("homogeneous_s", float(s))


def inertia_apply(kind: MetricKind, u: PeriodicField) -> PeriodicField:
    return apply_multiplier(u, kind.symbol(u.grid.k))


def _gauge_ok(w: PeriodicField) -> bool:
    return abs(mean(w)) <= GAUGE_TOL * max(1.0, w.sup())


def inertia_invert(kind: MetricKind, w: PeriodicField) -> PeriodicField:
    """Solve ``A u = w``; degenerate kinds return the mean-zero preimage."""
    sym = kind.symbol(w.grid.k)
    if kind.degenerate:
        if not _gauge_ok(w):
            raise DegenerateMeanError(
                f"{kind.label} cannot invert data with mean {mean(w):.3e}")
        sym = sym.copy()
        sym[0] = np.inf
    return apply_multiplier(w, 1.0 / sym)


def inner_product(kind: MetricKind, u: PeriodicField, v: PeriodicField) -> float:
    """``int (A u) v dx`` over one period."""
    check_same_grid(u, v)
    a = kind.symbol(u.grid.k)
    return _pairing(a * u.coeffs, v.coeffs)


def norm(kind: MetricKind, u: PeriodicField) -> float:
    return float(np.sqrt(max(inner_product(kind, u, u), 0.0)))


# ---------------------------------------------------------------------------
# circle diffeomorphisms

class Diffeo:
    """Orientation-preserving circle diffeomorphism ``eta(x) = x + p(x)``."""

    __slots__ = ("grid", "p", "_eta_x")

    def __init__(self, p: PeriodicField, check: bool = True):
        self.grid = p.grid
        self.p = p
        self._eta_x = None
        if check and self.eta_x.min() <= 0:
            raise NotADiffeo(f"min eta_x = {self.eta_x.min():.3e} <= 0")

    @classmethod
    def identity(cls, grid: GridSpec) -> "Diffeo":
        return cls(PeriodicField.zeros(grid))

    @classmethod
    def rotation(cls, grid: GridSpec, theta: float) -> "Diffeo":
        return cls(PeriodicField.constant(grid, theta))

    @classmethod
    def from_displacement(cls, grid: GridSpec, fn) -> "Diffeo":
        return cls(PeriodicField.from_function(grid, fn))

    @property
    def values(self) -> np.ndarray:
        """Lifted node images ``eta(x_j)``."""
        return self.grid.nodes + self.p.values

    @property
    def eta_x(self) -> PeriodicField:
        if self._eta_x is None:
            self._eta_x = derivative(self.p) + 1.0
        return self._eta_x

    def __call__(self, y):
        return np.asarray(y, dtype=float) + self.p.at(y)

    def rigid_shift(self):
        """The angle if this map is a rotation ``x + theta``, else None."""
        v = self.p.values
        if np.ptp(v) <= RIGID_TOL:
            return float(v.mean())
        return None

    def __repr__(self):
        return f"Diffeo(N={self.grid.N}, min eta_x={self.eta_x.min():.4g})"


def compose(f: PeriodicField, eta: Diffeo) -> PeriodicField:
    """``f o eta`` sampled on the grid of ``f``."""
    check_same_grid(f, eta.p)
    theta = eta.rigid_shift()
    if theta is not None:
        return f.shift(theta) if theta else f
    return PeriodicField(f.grid, f.at(eta.values))


def invert_points(p_coeffs: np.ndarray, targets: np.ndarray, tol: float = 1e-13,
                  max_iter: int = 60) -> np.ndarray:
    """Solve ``y + p(y) = target`` for every target by bracketed Newton.

    ``p`` is given by its one-sided coefficients.  The map is increasing, so
    the root lies within ``max|p|`` of the target and bisection always
    applies when a Newton step leaves the bracket.
    """
    targets = np.asarray(targets, dtype=float)
    pmax = np.sum(_weights(p_coeffs.shape[0]) * np.abs(p_coeffs)) + 1e-12
    lo = targets - pmax
    hi = targets + pmax
    c0 = p_coeffs[0].real
    y = targets - c0
    for _ in range(max_iter):
        pv, dp = evaluate_with_derivative(p_coeffs, y)
        r = y + pv - targets
        lo = np.where(r < 0, y, lo)
        hi = np.where(r > 0, y, hi)
        if np.max(np.abs(r)) <= tol * max(1.0, np.max(np.abs(targets))):
            break
        slope = 1.0 + dp
        with np.errstate(divide="ignore", invalid="ignore"):
            step = y - r / slope
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi) | (slope <= 0)
        y = np.where(bad, 0.5 * (lo + hi), step)
    return y


def invert_diffeo(eta: Diffeo) -> Diffeo:
    theta = eta.rigid_shift()
    if theta is not None:
        return Diffeo(PeriodicField.constant(eta.grid, -theta), check=False)
    if eta.eta_x.min() <= 0:
        raise NotADiffeo("cannot invert: eta_x is not positive")
    x = eta.grid.nodes
    y = invert_points(eta.p.coeffs, x)
    return Diffeo(PeriodicField(eta.grid, y - x), check=False)


def compose_diffeo(eta: Diffeo, xi: Diffeo) -> Diffeo:
    """``eta o xi``."""
    check_same_grid(eta.p, xi.p)
    p = xi.p.values + eta.p.at(xi.values)
    return Diffeo(PeriodicField(eta.grid, p))
