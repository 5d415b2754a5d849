"""Adaptive two-dimensional quadrature and spectral contour rules.

The 2D integrator works on native parameterizations of the package's regions:
rectangles are covered by tensor Gauss panels, round regions by polar panels
(the area weight rho absorbs a simple pole at the center), and declared
first-order singularities inside rectangles are carved into small squares that
are integrated in local polar coordinates with ray-box clipping, which removes
the 1/|z - p| blowup exactly.  Refinement is driven by a global priority queue
on per-panel error estimates (embedded coarse/fine comparison), so the
returned error estimate tracks the whole integral rather than a worst cell.

Contour rules are plain trapezoid sums, spectrally accurate for the periodic
and circular integrands they are used on.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .domains import (
    Annulus,
    Cell,
    Disk,
    RoundAnnulus,
    SlitDisk,
    Strip,
    UnitDisk,
)

DEFAULT_TOL = 1e-8

_NODE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _NODE_CACHE:
        _NODE_CACHE[n] = leggauss(n)
    return _NODE_CACHE[n]


@dataclass
class QuadratureResult:
    value: complex
    error_estimate: float
    cells_used: int
    converged: bool = True


class QuadratureError(RuntimeError):
    """Raised when the refinement budget is exhausted above tolerance."""

    def __init__(self, message: str, partial: QuadratureResult | None = None):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# panels


class _CartPanel:
    __slots__ = ("x0", "x1", "y0", "y1")

    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def nodes(self, order: int):
        x, w = _gauss(order)
        xm = 0.5 * (self.x0 + self.x1) + 0.5 * (self.x1 - self.x0) * x
        ym = 0.5 * (self.y0 + self.y1) + 0.5 * (self.y1 - self.y0) * x
        wx = 0.5 * (self.x1 - self.x0) * w
        wy = 0.5 * (self.y1 - self.y0) * w
        Z = xm[:, None] + 1j * ym[None, :]
        W = wx[:, None] * wy[None, :]
        return Z.ravel(), W.ravel()

    def children(self):
        xm = 0.5 * (self.x0 + self.x1)
        ym = 0.5 * (self.y0 + self.y1)
        return [
            _CartPanel(self.x0, xm, self.y0, ym),
            _CartPanel(xm, self.x1, self.y0, ym),
            _CartPanel(self.x0, xm, ym, self.y1),
            _CartPanel(xm, self.x1, ym, self.y1),
        ]


class _PolarPanel:
    """Annular sector about `center`; the integrand carries the rho weight."""

    __slots__ = ("center", "r0", "r1", "t0", "t1")

    def __init__(self, center, r0, r1, t0, t1):
        self.center, self.r0, self.r1, self.t0, self.t1 = center, r0, r1, t0, t1

    def nodes(self, order: int):
        x, w = _gauss(order)
        rm = 0.5 * (self.r0 + self.r1) + 0.5 * (self.r1 - self.r0) * x
        tm = 0.5 * (self.t0 + self.t1) + 0.5 * (self.t1 - self.t0) * x
        wr = 0.5 * (self.r1 - self.r0) * w
        wt = 0.5 * (self.t1 - self.t0) * w
        Z = self.center + rm[:, None] * np.exp(1j * tm[None, :])
        W = (rm * wr)[:, None] * wt[None, :]
        return Z.ravel(), W.ravel()

    def children(self):
        rm = 0.5 * (self.r0 + self.r1)
        tm = 0.5 * (self.t0 + self.t1)
        return [
            _PolarPanel(self.center, self.r0, rm, self.t0, tm),
            _PolarPanel(self.center, rm, self.r1, self.t0, tm),
            _PolarPanel(self.center, self.r0, rm, tm, self.t1),
            _PolarPanel(self.center, rm, self.r1, tm, self.t1),
        ]


class _SingularSquare:
    """Rectangle with a declared first-order singularity at `point` (inside or
    on the boundary), integrated in polar coordinates about the point with the
    radial extent clipped against the rectangle per angular arc."""

    __slots__ = ("point", "x0", "x1", "y0", "y1", "level")

    def __init__(self, point, x0, x1, y0, y1, level=0):
        self.point = point
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.level = level

    def _arcs(self):
        px, py = self.point.real, self.point.imag
        corners = [
            complex(self.x0, self.y0),
            complex(self.x1, self.y0),
            complex(self.x1, self.y1),
            complex(self.x0, self.y1),
        ]
        angs = sorted(np.angle(c - self.point) for c in corners if abs(c - self.point) > 0)
        if not angs:
            return []
        arcs = []
        for i in range(len(angs)):
            a = angs[i]
            b = angs[(i + 1) % len(angs)] + (2 * np.pi if i == len(angs) - 1 else 0.0)
            if b - a > 1e-13:
                arcs.append((a, b))
        return arcs

    def _rho_max(self, theta):
        px, py = self.point.real, self.point.imag
        c, s = np.cos(theta), np.sin(theta)
        rho = np.full_like(theta, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            for trig, lo, hi, p in ((c, self.x0, self.x1, px), (s, self.y0, self.y1, py)):
                cand = np.where(trig > 1e-15, (hi - p) / np.where(trig > 1e-15, trig, 1.0), np.inf)
                rho = np.minimum(rho, cand)
                cand = np.where(trig < -1e-15, (lo - p) / np.where(trig < -1e-15, trig, 1.0), np.inf)
                rho = np.minimum(rho, cand)
        return np.maximum(rho, 0.0)

    def nodes(self, order: int):
        # order plays the role of the angular count per arc; radial uses 2/3.
        nth = order
        nr = max(8, (2 * order) // 3)
        xr, wr = _gauss(nr)
        Zs, Ws = [], []
        for a, b in self._arcs():
            xt, wt = _gauss(nth)
            th = 0.5 * (a + b) + 0.5 * (b - a) * xt
            wth = 0.5 * (b - a) * wt
            rmax = self._rho_max(th)
            # radial rule per angular node, mapped to [0, rmax]
            R = 0.5 * rmax[None, :] * (xr[:, None] + 1.0)
            WR = 0.5 * rmax[None, :] * wr[:, None]
            Z = self.point + R * np.exp(1j * th[None, :])
            W = (R * WR) * wth[None, :]
            Zs.append(Z.ravel())
            Ws.append(W.ravel())
        if not Zs:
            return np.empty(0, complex), np.empty(0, float)
        Z, W = np.concatenate(Zs), np.concatenate(Ws)
        # arcs pointing outside the rectangle clip to zero rays; drop the
        # collapsed nodes so integrands are never sampled at the singularity
        keep = W != 0.0
        return Z[keep], W[keep]


_BASE_ORDER = 8
_SING_ORDER = 20


def _eval_panel(f, panel, order):
    z, w = panel.nodes(order)
    if z.size == 0:
        return 0.0 + 0.0j
    return complex(np.sum(np.asarray(f(z), dtype=complex) * w))


def _make_record(f, panel):
    """Return (value, err, n_evals) using an embedded coarse/fine pair."""
    if isinstance(panel, _SingularSquare):
        coarse = _eval_panel(f, panel, _SING_ORDER)
        fine = _eval_panel(f, panel, _SING_ORDER + 12)
        return fine, abs(fine - coarse), 2
    coarse = _eval_panel(f, panel, _BASE_ORDER)
    fine = sum(_eval_panel(f, ch, _BASE_ORDER) for ch in panel.children())
    return fine, abs(fine - coarse), 5


def _carve_rectangles(window, sing):
    """Split `window` into singular squares around each declared point plus
    plain rectangles covering the rest."""
    x0, x1, y0, y1 = window
    pts = [complex(p) for p in sing if (x0 - 1e-12 <= p.real <= x1 + 1e-12 and y0 - 1e-12 <= p.imag <= y1 + 1e-12)]
    if not pts:
        return [], [_CartPanel(x0, x1, y0, y1)]
    half = min(x1 - x0, y1 - y0) / 4.0
    for i, p in enumerate(pts):
        for q in pts[i + 1 :]:
            half = min(half, abs(p - q) / 3.0)
    half = max(min(half, 0.5), 1e-6)
    squares = []
    rects = [(x0, x1, y0, y1)]
    for p in pts:
        sx0, sx1 = max(p.real - half, x0), min(p.real + half, x1)
        sy0, sy1 = max(p.imag - half, y0), min(p.imag + half, y1)
        squares.append(_SingularSquare(p, sx0, sx1, sy0, sy1))
        new_rects = []
        for (rx0, rx1, ry0, ry1) in rects:
            ix0, ix1 = max(rx0, sx0), min(rx1, sx1)
            iy0, iy1 = max(ry0, sy0), min(ry1, sy1)
            if ix0 >= ix1 or iy0 >= iy1:
                new_rects.append((rx0, rx1, ry0, ry1))
                continue
            if rx0 < ix0:
                new_rects.append((rx0, ix0, ry0, ry1))
            if ix1 < rx1:
                new_rects.append((ix1, rx1, ry0, ry1))
            if ry0 < iy0:
                new_rects.append((ix0, ix1, ry0, iy0))
            if iy1 < ry1:
                new_rects.append((ix0, ix1, iy1, ry1))
        rects = new_rects
    return squares, [_CartPanel(*r) for r in rects]


def _initial_panels(region, window, singularities):
    sing = [complex(p) for p in (singularities or [])]
    if region is None:
        if window is None:
            raise ValueError("need a region or an explicit window")
        squares, rects = _carve_rectangles(window, sing)
        return squares + rects
    if isinstance(region, (Strip, Cell)):
        if window is None:
            if isinstance(region, Cell):
                raise ValueError("Cell integration needs an explicit window (y truncation)")
            raise ValueError("Strip integration needs an explicit window (x range)")
        squares, rects = _carve_rectangles(window, sing)
        return squares + rects
    if isinstance(region, (UnitDisk, Annulus, SlitDisk, Disk, RoundAnnulus)):
        if isinstance(region, UnitDisk):
            center, r0, r1 = 0.0 + 0.0j, 0.0, 1.0
        elif isinstance(region, Annulus):
            center, r0, r1 = 0.0 + 0.0j, region.inner, 1.0
        elif isinstance(region, SlitDisk):
            center, r0, r1 = 0.0 + 0.0j, 0.0, 1.0
        elif isinstance(region, Disk):
            center, r0, r1 = complex(region.center), 0.0, region.radius
        else:
            center, r0, r1 = complex(region.center), region.r_in, region.r_out
        off = [p for p in sing if abs(p - center) > 1e-12]
        if off:
            raise ValueError("off-center singularities are not supported in polar regions")
        n_th = 4
        panels = []
        for k in range(n_th):
            panels.append(_PolarPanel(center, r0, r1, 2 * np.pi * k / n_th, 2 * np.pi * (k + 1) / n_th))
        return panels
    raise TypeError(f"unsupported region {region!r}")


def integrate2d(
    f,
    region=None,
    tol: float = DEFAULT_TOL,
    singularities=(),
    window=None,
    max_cells: int = 8000,
    strict: bool = True,
    tail: float = 0.0,
) -> QuadratureResult:
    """Adaptively integrate `f` over a region (or explicit rectangle window).

    Parameters
    ----------
    f : callable accepting a complex ndarray, returning values to integrate
        against the area element.
    region : one of the domain types, or None for a bare rectangle window.
    singularities : points where f may blow up like 1/|z - p|.
    window : (x0, x1, y0, y1), required for Strip/Cell and bare integration.
    tail : optional bound for truncated mass outside the window, added to the
        error estimate.
    """
    panels = _initial_panels(region, window, singularities)
    heap = []
    total = 0.0 + 0.0j
    total_err = 0.0
    cells = 0
    seq = 0
    for p in panels:
        v, e, n = _make_record(f, p)
        cells += 1
        total += v
        total_err += e
        heapq.heappush(heap, (-e, seq, p, v, e))
        seq += 1
    retired: list = []
    while total_err + tail > tol and cells < max_cells and heap:
        neg_e, _, panel, v, e = heapq.heappop(heap)
        if isinstance(panel, _SingularSquare):
            if panel.level >= 2:
                # escalated twice already; its value and error stay counted
                retired.append(panel)
                continue
            newp = _SingularSquare(panel.point, panel.x0, panel.x1, panel.y0, panel.y1, panel.level + 1)
            coarse = _eval_panel(f, newp, _SING_ORDER + 16 * newp.level)
            fine = _eval_panel(f, newp, _SING_ORDER + 16 * newp.level + 12)
            total += fine - v
            total_err -= e
            e2 = abs(fine - coarse)
            total_err += e2
            heapq.heappush(heap, (-e2, seq, newp, fine, e2))
            seq += 1
            cells += 1
            continue
        total -= v
        total_err -= e
        for ch in panel.children():
            cv, ce, n = _make_record(f, ch)
            cells += 1
            total += cv
            total_err += ce
            heapq.heappush(heap, (-ce, seq, ch, cv, ce))
            seq += 1
    converged = total_err + tail <= tol
    result = QuadratureResult(total, total_err + tail, cells, converged)
    if not converged and strict:
        raise QuadratureError(
            f"quadrature did not reach tol={tol:g} (estimate {total_err + tail:.3e} after {cells} cells)",
            partial=result,
        )
    return result


# ---------------------------------------------------------------------------
# contour rules


def contour_fourier(
    f,
    mode: str = "circle",
    radius: float = 1.0,
    center: complex = 0.0,
    height: float = 0.0,
    period: float = 2 * np.pi,
    m: int = 64,
) -> complex:
    """Spectral trapezoid contour rules.

    mode="circle": (1/2 pi i) * contour integral of (z - center) * f(z) over
    the circle |z - center| = radius, i.e. the Laurent coefficient of
    (z - center)^{-2} of f about the center.

    mode="horizontal": integral of f over one horizontal period at the given
    height, i.e. period * (zeroth Fourier coefficient).
    """
    if m < 16:
        raise ValueError("need at least 16 contour nodes")
    if mode == "circle":
        th = 2 * np.pi * np.arange(m) / m
        z = center + radius * np.exp(1j * th)
        vals = np.asarray(f(z), dtype=complex)
        return complex(np.sum(vals * (z - center) ** 2) / m)
    if mode == "horizontal":
        x = period * np.arange(m) / m
        z = x + 1j * height
        vals = np.asarray(f(z), dtype=complex)
        return complex(np.sum(vals) * period / m)
    raise ValueError(f"unknown contour mode {mode!r}")


def cesaro_means(x) -> np.ndarray:
    """Running Cesaro averages of a sequence."""
    x = np.asarray(x)
    return np.cumsum(x, axis=0) / np.arange(1, x.shape[0] + 1).reshape(
        (-1,) + (1,) * (x.ndim - 1)
    )


def algebraic_tail_bound(C: float, degree: float, N: int, step: float = 3.0) -> float:
    """Bound for sum_{|n| > N} C/(step*|n|)^degree, degree > 1."""
    if degree <= 1:
        raise ValueError("tail bound needs decay degree > 1")
    return 2.0 * C * (step * N) ** (1.0 - degree) / (step * (degree - 1.0))


def gauss_segment(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on a real segment."""
    x, w = _gauss(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


def box_rule(box, order: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on a rectangle (x0, x1, y0, y1): complex nodes and
    real weights."""
    x0, x1, y0, y1 = box
    return _CartPanel(x0, x1, y0, y1).nodes(order)


def singular_box_rule(point: complex, box, order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Polar rule on a rectangle for an integrand with a first-order
    singularity at `point` (inside or on the rectangle boundary)."""
    x0, x1, y0, y1 = box
    return _SingularSquare(complex(point), x0, x1, y0, y1).nodes(order)
