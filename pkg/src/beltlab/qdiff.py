"""Integrable holomorphic quadratic differentials and their norms.

Differentials are carried as vectorized closures plus the metadata the
quadrature layer needs: known simple poles (possibly repeating with a
horizontal period), an algebraic decay degree for plane truncation, or an
exponential rate in the imaginary direction for periodic lifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .domains import Annulus, Cell, CoveringMap, Disk, PlaneMinusIntegers, RoundAnnulus, UnitDisk
from .quadrature import QuadratureResult, algebraic_tail_bound, integrate2d


@dataclass
class QuadraticDifferential:
    fun: Callable[[np.ndarray], np.ndarray]
    poles: tuple = ()  # ((location, order), ...)
    period: float | None = None  # horizontal period of the pole pattern / values
    alg_decay: float | None = None  # |phi| <= C |z|^-d on the plane
    exp_rate: float | None = None  # |phi| <= C e^{-rate |Im z|} when periodic
    label: str = ""
    tail_bound: float | None = None  # truncation tail, set by series builders

    def __call__(self, z) -> np.ndarray:
        return self.fun(np.asarray(z, dtype=complex))

    def __add__(self, other: "QuadraticDifferential") -> "QuadraticDifferential":
        f, g = self.fun, other.fun
        return QuadraticDifferential(
            fun=lambda z: f(z) + g(z),
            poles=tuple(self.poles) + tuple(other.poles),
            period=self.period if self.period == other.period else None,
            alg_decay=_min_or_none(self.alg_decay, other.alg_decay),
            exp_rate=_min_or_none(self.exp_rate, other.exp_rate),
            label=f"({self.label}+{other.label})",
        )

    def __mul__(self, c) -> "QuadraticDifferential":
        c = complex(c)
        f = self.fun
        return replace(self, fun=lambda z: c * f(z), label=f"{c:g}*{self.label}")

    __rmul__ = __mul__

    def pole_points_in(self, window) -> list[complex]:
        """Pole locations inside a rectangle window, unrolling periodicity."""
        x0, x1, y0, y1 = window
        pts = []
        for loc, _order in self.poles:
            loc = complex(loc)
            if self.period:
                n_lo = int(np.ceil((x0 - loc.real) / self.period - 1e-12))
                n_hi = int(np.floor((x1 - loc.real) / self.period + 1e-12))
                for n in range(n_lo, n_hi + 1):
                    p = loc + n * self.period
                    if y0 <= p.imag <= y1:
                        pts.append(p)
            else:
                if x0 <= loc.real <= x1 and y0 <= loc.imag <= y1:
                    pts.append(loc)
        # dedupe
        out: list[complex] = []
        for p in pts:
            if all(abs(p - q) > 1e-12 for q in out):
                out.append(p)
        return out


def _min_or_none(a, b):
    if a is None or b is None:
        return None
    return min(a, b)


def constant_qd(c: complex, label: str = "const") -> QuadraticDifferential:
    c = complex(c)
    return QuadraticDifferential(fun=lambda z: np.full(np.shape(z), c, dtype=complex), label=label)


# ---------------------------------------------------------------------------
# the two-dimensional space on the cyclic quotient


def _lifted_basis_fun(a: complex, b: complex) -> Callable[[np.ndarray], np.ndarray]:
    """Lift of (a + b*w)/(w*(w^3 - 1)) dw^2 under w = e^{2 pi i z / 3}.

    Evaluated through w on Im z >= 0 and through 1/w below the axis so neither
    branch overflows for large |Im z|.
    """
    c = -4.0 * np.pi**2 / 9.0

    def fun(z):
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape, dtype=complex)
        up = z.imag >= 0
        if np.any(up):
            w = np.exp(2j * np.pi * z[up] / 3.0)
            out[up] = c * (a + b * w) * w / (w**3 - 1.0)
        dn = ~up
        if np.any(dn):
            u = np.exp(-2j * np.pi * z[dn] / 3.0)
            out[dn] = c * (a * u + b) * u / (1.0 - u**3)
        return out

    return fun


_QS_CACHE: dict[tuple, tuple] = {}


def qs_basis(step: float = 3.0, normalized: bool = True, tol: float = 1e-9):
    """Basis pair of the quotient's integrable differentials, lifted to the
    period cell and (by default) scaled to unit q-norm.

    The quotient of the integer-punctured plane by z -> z + 3 is a
    five-punctured sphere, so the space is two-dimensional; the pair below is
    spanned from the seeds (1, 0) and (0, 1) in the quotient coordinate.
    """
    if step != 3.0:
        raise ValueError("the quotient construction is specific to deck step 3")
    key = (step, normalized)
    if key in _QS_CACHE:
        return _QS_CACHE[key]
    raw = []
    for name, (a, b) in (("qs_r", (1.0, 0.0)), ("qs_l", (0.0, 1.0))):
        raw.append(
            QuadraticDifferential(
                fun=_lifted_basis_fun(a, b),
                poles=((1.0, 1), (2.0, 1), (3.0, 1)),
                period=3.0,
                exp_rate=2.0 * np.pi / 3.0,
                label=name,
            )
        )
    if normalized:
        out = []
        for phi in raw:
            nrm = q_norm(phi, Cell(3.0, 0), tol=tol).value.real
            out.append(replace(phi, fun=_scaled(phi.fun, 1.0 / nrm), label=phi.label))
        raw = out
    pair = (raw[0], raw[1])
    _QS_CACHE[key] = pair
    return pair


def _scaled(f, c):
    return lambda z: c * f(z)


# ---------------------------------------------------------------------------
# dictionary differentials


def dictionary_differential(j: int, L: int, kind: str = "alpha") -> QuadraticDifferential:
    """Rational differential 1/((z - a)(z - 3L)(z - 6L)) with a = 3j+1 or 3j+2."""
    if L < 1:
        raise ValueError("need truncation L >= 1")
    if kind == "alpha":
        a = 3 * j + 1
    elif kind == "beta":
        a = 3 * j + 2
    else:
        raise ValueError(f"kind must be 'alpha' or 'beta', got {kind!r}")
    p, q = 3 * L, 6 * L
    if a in (p, q):
        raise ValueError(f"pole collision: {a} coincides with an anchor pole")

    def fun(z, a=a, p=p, q=q):
        z = np.asarray(z, dtype=complex)
        return 1.0 / ((z - a) * (z - p) * (z - q))

    return QuadraticDifferential(
        fun=fun,
        poles=((complex(a), 1), (complex(p), 1), (complex(q), 1)),
        alg_decay=3.0,
        label=f"dict_{kind}[{j}]",
    )


def dictionary_string(kinds: dict[int, str], L: int) -> QuadraticDifferential:
    """Sum over |j| <= L of dictionary differentials, kind chosen per slot."""
    parts = [dictionary_differential(j, L, kinds.get(j, "alpha")) for j in range(-L, L + 1)]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    label = "".join("b" if kinds.get(j, "alpha") == "beta" else "a" for j in range(-L, L + 1))
    total.label = f"string[{label}]"
    total.alg_decay = 3.0
    return total


# ---------------------------------------------------------------------------
# cyclic Poincare series


def poincare_series(f: QuadraticDifferential, step: float = 3.0, N: int = 1000) -> QuadraticDifferential:
    """Partial sum over |n| <= N of f(z + n*step); the deck derivative of a
    translation is 1, so no weight appears.

    The result records an estimated tail bound (attribute `tail_bound`) from
    the declared algebraic decay degree.
    """
    if f.alg_decay is None or f.alg_decay <= 1:
        raise ValueError("Poincare series needs a declared decay degree > 1")
    d = f.alg_decay

    def fun(z, f=f.fun, step=step, N=N):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        chunk = max(1, int(2e6 // max(z.size, 1)))
        n = -N
        while n <= N:
            ns = np.arange(n, min(n + chunk, N + 1))
            out = out + f(z[..., None] + step * ns).sum(axis=-1)
            n += chunk
        return out

    # estimate the decay constant beyond the truncation on the horizontal
    # band where the series is consumed; summands with vertical growth
    # (window-type preimages) are still algebraically small there
    Rbig = step * (N + 2.0)
    ys = np.linspace(-2.0, 2.0, 9)
    band = np.concatenate([Rbig + 1j * ys, -Rbig + 1j * ys])
    C_est = float(np.max(np.abs(f(band))) * Rbig**d)
    out = QuadraticDifferential(
        fun=fun,
        poles=f.poles,
        period=step,
        alg_decay=None,
        exp_rate=None,
        label=f"theta[{f.label},N={N}]",
    )
    out.tail_bound = algebraic_tail_bound(C_est, d, N, step)
    return out


# ---------------------------------------------------------------------------
# norms and lifts


def _cell_window(phi: QuadraticDifferential, cell: Cell, tol: float):
    """Rectangle window for a cell q-norm: shift a periodic integrand so no
    pole sits on the vertical edges, and truncate in Im z using the declared
    exponential rate."""
    shift = 0.0
    if phi.period and abs(phi.period - cell.step) < 1e-12:
        shift = -0.5
    x0, x1 = cell.x_min + shift, cell.x_max + shift
    rate = phi.exp_rate
    if rate is None:
        raise ValueError("cell integration needs a declared exponential rate")
    y_probe = 6.0
    xs = np.linspace(x0, x1, 41)
    C = 0.0
    for sgn in (1.0, -1.0):
        vals = np.abs(phi(xs + 1j * sgn * y_probe))
        C = max(C, float(np.max(vals)) * np.exp(rate * y_probe))
    C = max(C, 1e-300)
    width = x1 - x0
    # choose Y so the two exponential tails stay an order below tol
    Y = max(y_probe + 1.0, np.log(20.0 * width * C / (rate * tol)) / rate)
    tail = 2.0 * width * C * np.exp(-rate * Y) / rate
    return (x0, x1, -Y, Y), tail


def q_norm(phi: QuadraticDifferential, region, tol: float = 1e-8) -> QuadratureResult:
    """L1 mass of the differential over a region.

    For unbounded regions the window is truncated using the declared decay
    (exponential rate for periodic cells, algebraic degree on the plane with
    |Re z| <= 3*(N_trunc+1)); the truncation tail joins the error estimate.
    """
    absfun = lambda z: np.abs(phi(z)) + 0j
    if isinstance(region, Cell):
        window, tail = _cell_window(phi, region, tol)
        sing = phi.pole_points_in(window)
        return integrate2d(absfun, region=None, window=window, singularities=sing,
                           tol=tol, tail=tail, strict=False)
    if isinstance(region, (UnitDisk, Annulus, Disk, RoundAnnulus)):
        return integrate2d(absfun, region=region, tol=tol, strict=False)
    if isinstance(region, PlaneMinusIntegers):
        if phi.alg_decay is None or phi.alg_decay <= 2:
            raise ValueError("plane integration needs a declared decay degree > 2")
        return _plane_qnorm(phi, tol)
    raise TypeError(f"q_norm does not handle region {region!r}")


def _plane_qnorm(phi: QuadraticDifferential, tol: float, n_trunc: int = 64) -> QuadratureResult:
    d = phi.alg_decay
    X = 3.0 * (n_trunc + 1.0)
    th = np.linspace(0, 2 * np.pi, 33)[:-1]
    C = float(np.max(np.abs(phi(X * np.exp(1j * th)))) * X**d)
    # mass outside the disk of radius X: 2 pi C X^(2-d) / (d-2)
    tail = 2.0 * np.pi * C * X ** (2.0 - d) / (d - 2.0)
    window = (-X, X, -X, X)
    sing = phi.pole_points_in(window)
    absfun = lambda z: np.abs(phi(z)) + 0j
    return integrate2d(absfun, region=None, window=window, singularities=sing,
                       tol=max(tol, tail * 0.5), tail=tail, strict=False,
                       max_cells=12000)


def lift(phi: QuadraticDifferential, cover: CoveringMap) -> QuadraticDifferential:
    """Pullback phi(pi(z)) * pi'(z)^2 under a holomorphic covering."""

    def fun(z, phi=phi.fun, cover=cover):
        z = np.asarray(z, dtype=complex)
        return phi(cover.fun(z)) * cover.deriv(z) ** 2

    return QuadraticDifferential(fun=fun, label=f"lift[{phi.label}]")
