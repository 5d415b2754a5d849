"""Hamilton-sequence extremality certificates for cell-periodic settings.

The certified object is a Beltrami field mu on the integer-punctured plane
whose deck translates converge to the Teichmueller direction k*|phi|/phi of a
periodic differential phi.  The certificate machinery builds a decaying
preimage f with full translation sum equal to phi, forms the partial sums

    F_n = (1/||Theta f||) * sum_{-n <= j <= 0} f(. + step*j),
    phi_n = F_n / ||F_n||,

and tracks the pairings Re int mu*phi_n together with the four diagnostic
sequences

    L1_n = (1/(n+1)) int_{D_n} mu*phi,
    L2_n = (1/(n+1)) int_{D_n} |phi - F_n|,
    L3_n = (1/(n+1)) |int_{complement of D_n} mu*F_n|,
    L4_n = ||F_n|| / (n+1),

with D_n the union of cells 0..n.  Extremality is certified when the pairing
gap closes and the twist hypothesis holds.

All per-cell integrals share one fixed quadrature rule on the fundamental
cell: polar panels about the punctures (two interior, two on the vertical
edges) and graded tensor panels above and below, truncated at |Im z| = y_cut.
Everything then reduces to dot products against cached shifted samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .domains import Cell, CellDecomposition, PlaneMinusIntegers
from .fields import BeltramiField
from .qdiff import QuadraticDifferential, q_norm
from .quadrature import (
    box_rule,
    cesaro_means,
    integrate2d,
    singular_box_rule,
)


# ---------------------------------------------------------------------------
# generic pairing by adaptive quadrature


def pairing_result(mu, phi, region=None, tol: float = 1e-8, window=None):
    """Adaptive evaluation of int int mu*phi over a region; returns the full
    quadrature record."""
    fun = phi.fun if isinstance(phi, QuadraticDifferential) else phi

    def integrand(z):
        return mu(z) * fun(z)

    sing = []
    if isinstance(phi, QuadraticDifferential) and window is not None:
        sing = phi.pole_points_in(window)
    return integrate2d(integrand, region=region, tol=tol, singularities=sing, window=window)


def pairing(mu, phi, region=None, tol: float = 1e-8, window=None) -> complex:
    """int int_region mu * phi dx dy."""
    return complex(pairing_result(mu, phi, region=region, tol=tol, window=window).value)


# ---------------------------------------------------------------------------
# the partition window and the preimage of the translation average


def partition_window(z, step: float = 3.0) -> np.ndarray:
    """g(z) = (3/4) * sinc^4(z / (2*step)).

    The Fourier transform of sinc^4 is a cubic B-spline supported exactly on
    the first dual period, so sum_n g(z + step*n) = 1 for every complex z;
    the same identity transfers off the real axis because both sides are
    entire in z.  Decay is |z|^{-4} along the real direction, at the price of
    e^{2*pi*|Im z|/step} growth, which the periodic lifts cancel.
    """
    u = np.asarray(z, dtype=complex) * (np.pi / (2.0 * step))
    out = np.ones_like(u)
    nz = u != 0
    out[nz] = np.sin(u[nz]) / u[nz]
    return 0.75 * out ** 4


def hamilton_preimage(
    phi: QuadraticDifferential, step: float = 3.0, window: str = "smooth"
) -> QuadraticDifferential:
    """A preimage f of phi under the full translation sum.

    window="smooth": f = phi * g with the band-limited partition window; the
    translation sum reproduces phi exactly and f decays like |z|^{-4}
    uniformly (the window's vertical growth cancels the lift's decay rate
    2*pi/step).  This is the representative that exercises the convergence
    diagnostics.

    window="sharp": f = phi restricted to the base cell 0 < Re z <= step.
    The translation sum telescopes exactly and the partial sums stay phase
    aligned with phi, so pairings against the matched twist direction are
    exact up to quadrature.  No smooth holomorphic window can do that: a
    nonconstant holomorphic factor cannot keep its partial sums real and
    nonnegative off the real axis.
    """
    if phi.period is None or abs(phi.period - step) > 1e-12:
        raise ValueError("preimage construction needs a differential with the cell period")
    f = phi.fun

    if window == "sharp":

        def fun(z):
            z = np.asarray(z, dtype=complex)
            x = np.real(z)
            mask = (x > 0.0) & (x <= step)
            out = np.zeros(z.shape, dtype=complex)
            if np.any(mask):
                out[mask] = f(z[mask])
            return out

        return QuadraticDifferential(
            fun=fun,
            poles=phi.poles,
            period=step,
            alg_decay=None,
            label=f"cellcut[{phi.label}]",
        )

    if window != "smooth":
        raise ValueError("window must be 'smooth' or 'sharp'")
    if phi.exp_rate is None or phi.exp_rate < 2.0 * np.pi / step - 1e-9:
        raise ValueError("vertical decay rate must be at least 2*pi/step")

    def fun(z):
        z = np.asarray(z, dtype=complex)
        return f(z) * partition_window(z, step)

    return QuadraticDifferential(
        fun=fun,
        poles=phi.poles,
        period=step,  # the pole pattern repeats; the values do not
        alg_decay=4.0,
        label=f"window[{phi.label}]",
    )


# ---------------------------------------------------------------------------
# the fixed cell rule


@dataclass
class CellRule:
    """Fixed quadrature nodes and weights for the fundamental cell
    (0, step] x [-y_cut, y_cut], with polar panels about the punctures."""

    step: float
    y_cut: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> complex:
        return complex(np.sum(values * self.weights))


def build_cell_rule(
    step: float = 3.0,
    y_cut: float = 40.0,
    order: int = 12,
    sing_order: int = 20,
) -> CellRule:
    if step != 3.0:
        raise ValueError("the cell rule is built for step 3")
    h = 0.5
    zs, ws = [], []
    # polar panels about the punctures: 0 and 3 sit on the cell edges
    for p, x0, x1 in ((0.0, 0.0, h), (1.0, 1.0 - h, 1.0 + h), (2.0, 2.0 - h, 2.0 + h), (3.0, 3.0 - h, 3.0)):
        z, w = singular_box_rule(complex(p), (x0, x1, -h, h), sing_order)
        zs.append(z)
        ws.append(w)
    # graded tensor rows away from the puncture band
    edges = [0.5, 1.0, 1.75, 3.0, 5.0, 8.0, 13.0, 24.0, y_cut]
    cols = [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]
    for lo, hi in zip(edges[:-1], edges[1:]):
        for (a, b) in cols:
            for sgn in (1.0, -1.0):
                z, w = box_rule((a, b, sgn * lo, sgn * hi) if sgn > 0 else (a, b, -hi, -lo), order)
                zs.append(z)
                ws.append(w)
    return CellRule(step, y_cut, np.concatenate(zs), np.concatenate(ws))


_RULE_CACHE: dict = {}


def default_cell_rule() -> CellRule:
    if "default" not in _RULE_CACHE:
        _RULE_CACHE["default"] = build_cell_rule()
    return _RULE_CACHE["default"]


# ---------------------------------------------------------------------------
# Hamilton terms


def build_hamilton_term(
    f: QuadraticDifferential,
    decomp: CellDecomposition,
    n: int,
    theta_norm: float | None = None,
) -> QuadraticDifferential:
    """F_n = (1/||Theta f||) sum_{-n <= j <= 0} f(. + step*j).

    theta_norm defaults to the cell norm of the full translation sum,
    approximated on the fixed rule with a wide symmetric truncation.
    """
    if n < 0:
        raise ValueError("need n >= 0")
    step = decomp.step
    if theta_norm is None:
        rule = default_cell_rule()
        total = np.zeros(rule.size, dtype=complex)
        for m in range(-200, 201):
            total += f(rule.nodes + step * m)
        theta_norm = float(np.sum(np.abs(total) * rule.weights))
    ff = f.fun

    def fun(z, ff=ff, n=n, step=step, c=1.0 / theta_norm):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for j in range(-n, 1):
            out = out + ff(z + step * j)
        return c * out

    return QuadraticDifferential(
        fun=fun,
        poles=f.poles,
        period=step,
        alg_decay=f.alg_decay,
        label=f"hamilton[{f.label},n={n}]",
    )


# ---------------------------------------------------------------------------
# the diagnostic engine


@dataclass
class FourLimits:
    """Diagnostic sequences indexed by n = 0..N, plus the raw ingredients."""

    L1: np.ndarray
    L2: np.ndarray
    L3: np.ndarray
    L4: np.ndarray
    pairings: np.ndarray  # int mu*phi_n over the truncated surface
    x_cell: np.ndarray  # per-cell pairings int_{cell l} mu*phi, l = 0..N
    theta_norm: float
    shift_mass: np.ndarray  # s_m = int_{cell} |f(. + step*m)| on the rule
    cell_range: tuple[int, int]
    tail_estimate: float  # bound for the surface mass outside the cell range

    def trend_summary(self) -> dict:
        last = -1
        return {
            "L1_last": float(self.L1[last]),
            "L2_last": float(self.L2[last]),
            "L3_last": float(self.L3[last]),
            "L4_last": float(self.L4[last]),
            "pairing_last": float(np.real(self.pairings[last])),
        }


def four_limits(
    mu: BeltramiField,
    phi: QuadraticDifferential,
    f: QuadraticDifferential,
    decomp: CellDecomposition,
    N: int,
    rule: CellRule | None = None,
    cell_margin: int = 60,
) -> FourLimits:
    """Evaluate the four diagnostic sequences and the surface pairings for
    n = 0..N on the shared cell rule.

    cell_margin controls how many cells beyond [0, N] enter the surface sums;
    the neglected mass is reported as tail_estimate.
    """
    rule = rule or default_cell_rule()
    step = decomp.step
    nodes, w = rule.nodes, rule.weights

    phi_v = phi(nodes)
    abs_phi = np.abs(phi_v)
    theta_norm = float(np.sum(abs_phi * w))

    l_lo, l_hi = -cell_margin, N + cell_margin
    m_lo, m_hi = l_lo - N, l_hi

    # shifted preimage samples and their prefix sums along the shift index
    n_m = m_hi - m_lo + 1
    F = np.empty((n_m, rule.size), dtype=complex)
    for i, m in enumerate(range(m_lo, m_hi + 1)):
        F[i] = f(nodes + step * m)
    P = np.vstack([np.zeros((1, rule.size), dtype=complex), np.cumsum(F, axis=0)])
    # S(a, b) = sum_{m=a}^{b} f(. + step*m) = P[b - m_lo + 1] - P[a - m_lo]

    s_m = np.abs(F) @ w  # cell mass of each shift

    # cached field samples per cell
    n_l = l_hi - l_lo + 1
    MU = np.empty((n_l, rule.size), dtype=complex)
    for i, l in enumerate(range(l_lo, l_hi + 1)):
        MU[i] = mu(nodes + step * l)

    # per-cell pairings with the periodic phi (same values in every cell
    # because phi is periodic; mu is not)
    x_cell = np.array([np.sum(MU[l - l_lo] * phi_v * w) for l in range(0, N + 1)])

    # algebraic tail of the shift mass beyond the computed range
    tail_deg = float(f.alg_decay or 4.0)
    edge = max(abs(m_lo), abs(m_hi)) - 2
    C_est = float(max(s_m[0], s_m[-1]) * (step * edge) ** (tail_deg - 1))
    tail_estimate = 2.0 * C_est * (step * edge) ** (1.0 - tail_deg) / (tail_deg - 1.0)

    L1 = np.real(cesaro_means(x_cell))
    L2 = np.empty(N + 1)
    L3 = np.empty(N + 1)
    L4 = np.empty(N + 1)
    pair = np.empty(N + 1, dtype=complex)

    ls = np.arange(l_lo, l_hi + 1)
    inv_theta = 1.0 / theta_norm
    for n in range(N + 1):
        # S_l over all cached cells, as one matrix slice
        hi_idx = ls - m_lo + 1
        lo_idx = ls - n - m_lo
        S = P[hi_idx] - P[lo_idx]
        absS = np.abs(S)
        inside = (ls >= 0) & (ls <= n)

        # L2 over D_n
        diff = np.abs(phi_v[None, :] - inv_theta * S[inside])
        L2[n] = float((diff @ w).sum()) / (n + 1)

        # mu-weighted sums per cell
        muS = (MU * S) @ w
        norm_cells = absS @ w
        L3[n] = abs(np.sum(muS[~inside])) * inv_theta / (n + 1)
        L4[n] = float(np.sum(norm_cells)) * inv_theta / (n + 1)
        pair[n] = np.sum(muS) / max(np.sum(norm_cells), 1e-300)

    return FourLimits(
        L1=L1,
        L2=L2,
        L3=L3,
        L4=L4,
        pairings=pair,
        x_cell=x_cell,
        theta_norm=theta_norm,
        shift_mass=s_m,
        cell_range=(l_lo, l_hi),
        tail_estimate=float(tail_estimate),
    )


# ---------------------------------------------------------------------------
# hypothesis check


@dataclass
class HypothesisReport:
    residuals: np.ndarray
    decreasing: bool
    flagged: bool
    samples: np.ndarray

    def as_dict(self) -> dict:
        return {
            "residual_first": float(self.residuals[0]),
            "residual_last": float(self.residuals[-1]),
            "decreasing": bool(self.decreasing),
            "flagged": bool(self.flagged),
            "n_samples": int(self.samples.size),
        }


def hypothesis_check(
    mu: BeltramiField,
    phi: QuadraticDifferential,
    k: float,
    decomp: CellDecomposition,
    n_max: int = 40,
    samples: int = 50,
    seed: int = 0,
) -> HypothesisReport:
    """Residuals max_z |mu(z + step*n) - k*|phi(z)|/phi(z)| for n = 0..n_max
    over well-separated sample points of the base cell; the twist hypothesis
    requires a decreasing trend."""
    rng = np.random.default_rng(seed)
    step = decomp.step
    pts = []
    target = phi
    while len(pts) < samples:
        cand = rng.uniform(0.05, step - 0.05, 4 * samples) + 1j * rng.uniform(-1.5, 1.5, 4 * samples)
        ok = PlaneMinusIntegers().puncture_distance(cand) > 0.2
        vals = np.abs(target(cand))
        ok &= vals > 1e-2
        pts.extend(cand[ok].tolist())
    z = np.array(pts[:samples])

    direction = k * np.abs(phi(z)) / phi(z)
    res = np.empty(n_max + 1)
    for n in range(n_max + 1):
        res[n] = float(np.max(np.abs(mu(z + step * n) - direction)))
    first, last = res[0], res[-1]
    decreasing = bool(last <= max(0.5 * first, 1e-9))
    return HypothesisReport(residuals=res, decreasing=decreasing, flagged=not decreasing, samples=z)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class HamiltonCertificate:
    k_target: float
    pairing_trace: list
    gap: float
    diagnostics: FourLimits
    hypothesis: HypothesisReport
    verdict: str
    tol: float
    quadrature_error: float

    def as_dict(self) -> dict:
        return {
            "k_target": self.k_target,
            "gap": self.gap,
            "verdict": self.verdict,
            "tol": self.tol,
            "quadrature_error": self.quadrature_error,
            "n_terms": len(self.pairing_trace),
            "pairing_last": [
                float(np.real(self.pairing_trace[-1][1])),
                float(np.imag(self.pairing_trace[-1][1])),
            ],
            "diagnostics": self.diagnostics.trend_summary(),
            "hypothesis": self.hypothesis.as_dict(),
        }

    def trace_rows(self) -> list:
        """CSV rows: n, Re pairing, Im pairing, L1, L2, L3, L4, gap."""
        d = self.diagnostics
        rows = []
        running = -np.inf
        for n, p in self.pairing_trace:
            running = max(running, float(np.real(p)))
            rows.append(
                (
                    n,
                    float(np.real(p)),
                    float(np.imag(p)),
                    float(d.L1[n]),
                    float(d.L2[n]),
                    float(d.L3[n]),
                    float(d.L4[n]),
                    self.k_target - running,
                )
            )
        return rows


def certify_extremal(
    mu: BeltramiField,
    hypothesis: tuple[QuadraticDifferential, float],
    N: int = 40,
    tol: float = 0.02,
    f: QuadraticDifferential | None = None,
    decomp: CellDecomposition | None = None,
    rule: CellRule | None = None,
    seed: int = 0,
) -> HamiltonCertificate:
    """Assemble the full certificate: pairing trace, gap, diagnostics, and
    hypothesis report.  The verdict is `certified` only when the gap closes
    within tol and the twist residuals decrease."""
    phi, k = hypothesis
    if not 0.0 <= k < 1.0:
        raise ValueError("need 0 <= k < 1")
    sup = mu.sup_norm()
    if sup > k + 1e-9:
        raise ValueError(f"hypothesis constant k={k} below the field sup-norm {sup}")
    decomp = decomp or CellDecomposition()
    rule = rule or default_cell_rule()
    if f is None:
        f = hamilton_preimage(phi, decomp.step)

    diag = four_limits(mu, phi, f, decomp, N, rule=rule)
    hyp = hypothesis_check(mu, phi, k, decomp, n_max=min(N, 40), seed=seed)

    trace = [(n, complex(diag.pairings[n])) for n in range(N + 1)]
    best = max(float(np.real(p)) for _, p in trace)
    gap = k - best

    # crude but honest error budget: rule truncation plus shift-mass tail
    quad_err = diag.tail_estimate + 1e-9

    certified = (gap <= tol) and (hyp.decreasing or k == 0.0)
    return HamiltonCertificate(
        k_target=k,
        pairing_trace=trace,
        gap=float(gap),
        diagnostics=diag,
        hypothesis=hyp,
        verdict="certified" if certified else "inconclusive",
        tol=tol,
        quadrature_error=float(quad_err),
    )


def teich_distance(t: float, k: float) -> float:
    """Geodesic distance tanh^{-1}(t*k) = (1/2) ln((1+tk)/(1-tk))."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("need 0 <= t <= 1")
    if not 0.0 <= k < 1.0:
        raise ValueError("need 0 <= k < 1")
    tk = t * k
    if tk >= 1.0:
        raise ValueError("t*k must be < 1")
    return float(math.atanh(tk))
