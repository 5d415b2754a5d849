"""Beltrami coefficients: piecewise closed-form fields and the model families.

A field is a first-match list of (predicate, formula) pieces over a region.
Every family here stores the exact modulus of each piece, so sup-norms are
closed-form; sampling is only a fallback for hand-built fields.

Sign conventions.  The annulus family is *defined* as the complex dilatation
of the explicit shear f(z) = z * exp(i*lambda*s(-ln|z|)), s(eta) =
min(eta, R - eta), R = -ln r.  Differentiating the shear gives

    inner piece (r < |z| <= sqrt r):   +i*lambda/(2 + i*lambda) * z/conj(z)
    outer piece (sqrt r <= |z| < 1):   -i*lambda/(2 - i*lambda) * z/conj(z)

and this choice is the one whose pullback under zeta -> e^{i*zeta} equals the
strip family, which is what the two-route tests check.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .domains import (
    Annulus,
    CellDecomposition,
    CoveringMap,
    PlaneMinusIntegers,
    RoundAnnulus,
    SlitDisk,
    Strip,
    covering_eval,
)
from .qdiff import QuadraticDifferential, qs_basis


# ---------------------------------------------------------------------------
# parameter domain


@dataclass(frozen=True)
class LambdaParam:
    """Shear parameter: |Im| < 1 and Re >= 0; Re = 0 sits on the boundary of
    the open parameter domain and is admitted with a flag."""

    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if abs(v.imag) >= 1.0:
            raise ValueError(f"|Im lambda| must be < 1, got {v}")
        if v.real < 0.0:
            raise ValueError(f"Re lambda must be >= 0, got {v}")

    @property
    def boundary(self) -> bool:
        return complex(self.value).real == 0.0


def _lam(value) -> complex:
    if isinstance(value, LambdaParam):
        return complex(value.value)
    return complex(LambdaParam(complex(value)).value)


def piece_constants(lam) -> tuple[complex, complex]:
    """(lower, upper) strip constants i*lam/(2-i*lam), -i*lam/(2+i*lam)."""
    lam = complex(lam)
    return 1j * lam / (2 - 1j * lam), -1j * lam / (2 + 1j * lam)


def piece_moduli(lam) -> tuple[float, float]:
    lo, up = piece_constants(complex(lam))
    return abs(lo), abs(up)


# ---------------------------------------------------------------------------
# fields


@dataclass
class Piece:
    pred: Callable[[np.ndarray], np.ndarray]
    fun: Callable[[np.ndarray], np.ndarray]
    const_modulus: float | None = None


@dataclass
class BeltramiField:
    pieces: list[Piece]
    domain: object = None
    label: str = ""
    support_box: tuple | None = None  # (x0, x1, y0, y1) hull of the support
    sup_override: float | None = None  # exact sup-norm when known analytically
    _sup_cache: float | None = dc_field(default=None, repr=False)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        remaining = np.ones(z.shape, dtype=bool)
        for piece in self.pieces:
            m = remaining & np.asarray(piece.pred(z), dtype=bool)
            if np.any(m):
                out[m] = piece.fun(z[m])
            remaining &= ~m
        return out

    def sup_norm(self, rng=None, samples: int = 200_000) -> float:
        """Essential sup of |mu|; exact when the pieces have constant modulus."""
        if self.sup_override is not None:
            return self.sup_override
        if self._sup_cache is not None:
            return self._sup_cache
        if all(p.const_modulus is not None for p in self.pieces):
            val = max((p.const_modulus for p in self.pieces), default=0.0)
        else:
            if self.support_box is None:
                raise ValueError("sampled sup-norm needs a support box")
            rng = np.random.default_rng(0) if rng is None else rng
            x0, x1, y0, y1 = self.support_box
            zs = rng.uniform(x0, x1, samples) + 1j * rng.uniform(y0, y1, samples)
            val = float(np.max(np.abs(self(zs))))
        self._sup_cache = val
        return val


def glue(base: BeltramiField, patch: BeltramiField, u_pred) -> BeltramiField:
    """chi_U * patch + (1 - chi_U) * base.

    `u_pred` is a region (with .contains) or a boolean predicate.
    """
    pred = u_pred.contains if hasattr(u_pred, "contains") else u_pred
    patched = [
        Piece(lambda z, pp=p.pred, up=pred: np.asarray(up(z), bool) & np.asarray(pp(z), bool),
              p.fun, p.const_modulus)
        for p in patch.pieces
    ]
    sup = None
    try:
        sup = max(base.sup_norm(), patch.sup_norm())
    except ValueError:
        pass
    box = None
    if base.support_box is not None and patch.support_box is not None:
        bx, px = base.support_box, patch.support_box
        box = (min(bx[0], px[0]), max(bx[1], px[1]), min(bx[2], px[2]), max(bx[3], px[3]))
    return BeltramiField(
        pieces=patched + list(base.pieces),
        domain=base.domain,
        label=f"glue[{base.label}|{patch.label}]",
        support_box=box,
        sup_override=sup,
    )


def pullback(mu: BeltramiField, cover: CoveringMap) -> BeltramiField:
    """mu(pi(z)) * conj(pi'(z))/pi'(z): an isometry for sup-norms."""

    def lifted_piece(p: Piece) -> Piece:
        def pred(z, pp=p.pred, cover=cover):
            return pp(cover.fun(np.asarray(z, complex)))

        def fun(z, pf=p.fun, cover=cover):
            w, dw = covering_eval(cover, z)
            return pf(w) * np.conj(dw) / dw

        return Piece(pred, fun, p.const_modulus)

    return BeltramiField(
        pieces=[lifted_piece(p) for p in mu.pieces],
        domain=cover.source,
        label=f"pullback[{mu.label}]",
        sup_override=mu.sup_override,
    )


def deck_twist(mu: BeltramiField, deck: CoveringMap, n: int) -> BeltramiField:
    """mu composed with the n-th deck power (conformal, so the modulus is
    untouched)."""

    def gamma_n(z):
        z = np.asarray(z, complex)
        d = np.ones_like(z)
        for _ in range(abs(n)):
            w, dw = covering_eval(deck, z)
            z, d = w, d * dw
        return z, d

    def lifted_piece(p: Piece) -> Piece:
        def pred(z, pp=p.pred):
            w, _ = gamma_n(z)
            return pp(w)

        def fun(z, pf=p.fun):
            w, dw = gamma_n(z)
            return pf(w) * np.conj(dw) / dw

        return Piece(pred, fun, p.const_modulus)

    if n < 0:
        raise ValueError("negative deck powers need the inverse deck map")
    return BeltramiField(
        pieces=[lifted_piece(p) for p in mu.pieces],
        domain=mu.domain,
        label=f"twist[{mu.label},{n}]",
        sup_override=mu.sup_override,
    )


# ---------------------------------------------------------------------------
# the strip family


def strip_family(lam, height: float) -> BeltramiField:
    """Piecewise-constant coefficient of the two-slope shear of a horizontal
    strip: lower half 0 < Im <= R/2 and upper half R/2 < Im < R."""
    lam = _lam(lam)
    R = float(height)
    lo, up = piece_constants(lam)
    mid = R / 2.0
    return BeltramiField(
        pieces=[
            Piece(lambda z: (z.imag > 0) & (z.imag <= mid), _const_fun(lo), abs(lo)),
            Piece(lambda z: (z.imag > mid) & (z.imag < R), _const_fun(up), abs(up)),
        ],
        domain=Strip(R),
        label=f"strip(lam={lam:g},R={R:g})",
    )


def _const_fun(c: complex):
    return lambda z: np.full(z.shape, c, dtype=complex)


def strip_shear_map(lam, height: float):
    """The shear itself: xi + lam*eta + i*eta below mid-height, reflected
    slope above."""
    lam = complex(lam)
    R = float(height)

    def F(z):
        z = np.asarray(z, complex)
        s = np.minimum(z.imag, R - z.imag)
        return z + lam * s

    return F


# ---------------------------------------------------------------------------
# the annulus family


def annulus_patch(lam, center: complex = 0.0, r_in: float = 0.0, r_out: float = 1.0) -> BeltramiField:
    """Shear coefficient on a round annulus about an arbitrary center.

    r_in = 0 degenerates to the punctured disk: one piece, the outer constant.
    """
    lam = _lam(lam)
    center = complex(center)
    lo, up = piece_constants(lam)
    c_in, c_out = -up, -lo  # +i*lam/(2+i*lam) and -i*lam/(2-i*lam)

    def phase(z):
        w = z - center
        return w / np.conj(w)

    if r_in == 0.0:
        pieces = [
            Piece(
                lambda z: (np.abs(z - center) > 0) & (np.abs(z - center) < r_out),
                lambda z: c_out * phase(z),
                abs(c_out),
            )
        ]
        region = RoundAnnulus(center, 0.0, r_out)
    else:
        r_mid = float(np.sqrt(r_in * r_out))
        pieces = [
            Piece(
                lambda z: (np.abs(z - center) > r_in) & (np.abs(z - center) <= r_mid),
                lambda z: c_in * phase(z),
                abs(c_in),
            ),
            Piece(
                lambda z: (np.abs(z - center) > r_mid) & (np.abs(z - center) < r_out),
                lambda z: c_out * phase(z),
                abs(c_out),
            ),
        ]
        region = RoundAnnulus(center, r_in, r_out)
    return BeltramiField(
        pieces=pieces,
        domain=region,
        label=f"annulus(lam={lam:g},c={center:g},r={r_in:g}..{r_out:g})",
        support_box=(center.real - r_out, center.real + r_out, center.imag - r_out, center.imag + r_out),
    )


def annulus_family(lam, inner: float) -> BeltramiField:
    """Standard unit-annulus family: inner radius in [0, 1), outer radius 1."""
    if not 0.0 <= inner < 1.0:
        raise ValueError("inner radius must be in [0, 1)")
    mu = annulus_patch(lam, 0.0, inner, 1.0)
    mu.domain = Annulus(inner)
    return mu


def annulus_shear_map(lam, inner: float):
    """z * exp(i*lambda*s(-ln|z|)) inside the annulus, identity elsewhere."""
    lam = complex(lam)
    if inner == 0.0:
        def F0(z):
            z = np.asarray(z, complex)
            out = z.astype(complex).copy()
            m = (np.abs(z) > 0) & (np.abs(z) < 1)
            eta = -np.log(np.abs(z[m]))
            out[m] = z[m] * np.exp(1j * lam * eta)
            return out

        return F0
    R = -np.log(inner)

    def F(z):
        z = np.asarray(z, complex)
        out = z.astype(complex).copy()
        m = (np.abs(z) > inner) & (np.abs(z) < 1)
        eta = -np.log(np.abs(z[m]))
        out[m] = z[m] * np.exp(1j * lam * np.minimum(eta, R - eta))
        return out

    return F


def radial_stretch(K: float) -> BeltramiField:
    """Coefficient of the radial stretch of the unit disk with dilatation K:
    (1-K)/(1+K) * z/conj(z) inside, zero outside."""
    if K < 1.0:
        raise ValueError("need K >= 1")
    c = (1.0 - K) / (1.0 + K)

    def fun(z):
        z = np.asarray(z, complex)
        out = np.zeros_like(z)
        nz = z != 0
        out[nz] = c * z[nz] / np.conj(z[nz])
        return out

    return BeltramiField(
        pieces=[Piece(lambda z: np.abs(z) < 1.0, fun, abs(c))],
        label=f"radial_stretch(K={K:g})",
        support_box=(-1.0, 1.0, -1.0, 1.0),
        sup_override=abs(c),
    )


def radial_stretch_map(K: float):
    """The stretch itself: z |z|^(1/K - 1) on the unit disk, identity
    outside, fixing the unit circle."""
    a = 1.0 / K - 1.0

    def F(z):
        z = np.asarray(z, complex)
        out = z.astype(complex).copy()
        r = np.abs(z)
        m = (r > 0) & (r < 1.0)
        out[m] = z[m] * r[m] ** a
        return out

    return F


# ---------------------------------------------------------------------------
# the slit-disk family


def disk_family(lam, cover) -> BeltramiField:
    """Pushforward of the strip family through the elliptic covering onto the
    slit disk: tau(w) = tau_hat(zeta) * rho'(zeta)/conj(rho'(zeta)) at any
    preimage zeta of w.

    `cover` is an EllipticCoverData instance; inversion is Newton with the
    covering's cached seeds.
    """
    lam = _lam(lam)
    lo, up = piece_constants(lam)
    R = cover.R

    def fun(w):
        w = np.asarray(w, complex)
        zeta = cover.invert(w)
        _, dr = cover.rho_and_deriv(zeta)
        c = np.where(zeta.imag <= R / 2.0, lo, up)
        return c * dr / np.conj(dr)

    return BeltramiField(
        pieces=[Piece(lambda w: np.abs(w) < 1.0, fun, None)],
        domain=SlitDisk(cover.t),
        label=f"slit_disk(lam={lam:g},t={cover.t:g})",
        sup_override=max(abs(lo), abs(up)),
        support_box=(-1.0, 1.0, -1.0, 1.0),
    )


# ---------------------------------------------------------------------------
# the running example on the integer-punctured plane


@dataclass(frozen=True)
class WeightSequences:
    """Cell-indexed convex weights (a_n, b_n), a_n + b_n = 1."""

    a: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def b(self, n):
        return 1.0 - self.a(n)

    @classmethod
    def logistic(cls) -> "WeightSequences":
        return cls(a=lambda n: 1.0 / (1.0 + np.exp2(-np.asarray(n, float))), name="logistic")

    @classmethod
    def teichmuller(cls) -> "WeightSequences":
        return cls(a=lambda n: np.ones(np.shape(n)), name="teichmuller")

    @classmethod
    def half(cls) -> "WeightSequences":
        """Constant weights; the deck-twist residuals do not converge, which
        makes this the hypothesis violator for negative tests."""
        return cls(a=lambda n: np.full(np.shape(n), 0.5), name="half")


def example1_field(
    k: float,
    weights: WeightSequences | None = None,
    step: float = 3.0,
    basis: Sequence[QuadraticDifferential] | None = None,
) -> BeltramiField:
    """Unit-modulus-direction field k*|psi_n|/psi_n on each deck cell, where
    psi_n = a_n*phi_r + b_n*phi_l in the lifted basis."""
    if not 0.0 <= k < 1.0:
        raise ValueError("need 0 <= k < 1")
    ws = weights or WeightSequences.logistic()
    phi_r, phi_l = basis if basis is not None else qs_basis(step)
    decomp = CellDecomposition(step)

    def fun(z):
        z = np.asarray(z, complex)
        n = decomp.cell_index(z)
        a = ws.a(n)
        b = ws.b(n)
        psi = a * phi_r(z) + b * phi_l(z)
        mag = np.abs(psi)
        out = np.zeros(z.shape, dtype=complex)
        ok = mag > 0
        out[ok] = k * mag[ok] / psi[ok]
        return out

    return BeltramiField(
        pieces=[Piece(PlaneMinusIntegers().contains, fun, k)],
        domain=PlaneMinusIntegers(),
        label=f"example1(k={k:g},{ws.name})",
    )


# ---------------------------------------------------------------------------
# finite-difference oracle


def fd_beltrami(F, z, h: float = 1e-4) -> np.ndarray:
    """Complex dilatation of a map by central differences."""
    z = np.asarray(z, complex)
    Fx = (F(z + h) - F(z - h)) / (2 * h)
    Fy = (F(z + 1j * h) - F(z - 1j * h)) / (2 * h)
    fz = 0.5 * (Fx - 1j * Fy)
    fzb = 0.5 * (Fx + 1j * Fy)
    return fzb / fz
