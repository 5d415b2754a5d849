"""Families of shear coefficients with a complex parameter.

A family member is a fixed base field outside an open set U glued to a
parametrized shear patch on U.  Three single-patch configurations are
supported (a round disk away from the punctures, a punctured round disk,
and a round annulus), plus a string of annuli indexed by a finite
truncation of a bounded sequence of parameters.

Distinct parameters are told apart by pairing the member difference
against holomorphic integrands from a fixed dictionary.  Every pairing of
a shear patch reduces to one Laurent coefficient of the integrand about
the patch center (the z^-2 coefficient for annular patches, a horizontal
mean through the slit covering for the disk patch), which makes the
separation test semi-analytic: the parameter enters only through the
rational response lambda^2 / (4 + lambda^2).

For the string of annuli the forward pairings are computed by honest
quadrature over the punctured plane (a fixed cell rule swept over cells,
fitted algebraic tails, and a graded polar rule on each annulus), while
the inverse map back to the parameters inverts the analytic response with
one calibrated scalar.  The round trip validates the quadrature against
the closed form.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import roots_legendre, zeta

from .domains import Cell, Disk, PlaneMinusIntegers, RoundAnnulus
from .fields import (
    BeltramiField,
    LambdaParam,
    Piece,
    annulus_patch,
    disk_family,
    example1_field,
    glue,
    piece_constants,
    piece_moduli,
)
from .qdiff import QuadraticDifferential, dictionary_differential, q_norm, qs_basis
from .quadrature import contour_fourier
from .extremal import default_cell_rule

STRING_KIND = "string_of_annuli"
_SINGLE_KINDS = ("disk", "punctured_disk", "annulus")

_DEFAULT_SLIT_T = 0.5
_COVER_CACHE: dict = {}
_QNORM_CACHE: dict = {}
_SLOT_RULE_CACHE: dict = {}
_CAL_CACHE: dict = {}

# graded polar rule: panel ratios and orders chosen so that an integrand
# with a simple pole on the inner circle is resolved to ~1e-12 absolute
_THETA_MIN = 1e-13
_THETA_RATIO = 0.5
_THETA_ORDER = 10
_RHO_INNER_PANELS = 13
_RHO_INNER_RATIO = 0.25
_RHO_OUTER_PANELS = 4
_RHO_ORDER = 16

# plane sweep for the string pairings
_SWEEP_CELLS = 60
_TAIL_FIT_POINTS = 20


def shear_response(lam) -> complex:
    """lambda^2 / (4 + lambda^2), the scalar through which every patch
    pairing depends on the parameter."""
    lam = complex(lam)
    return lam * lam / (4.0 + lam * lam)


def lambda_prime_contains(lam, t0: float) -> bool:
    """Membership test |(-i*lam/2) / (1 + i*lam/2)| < t0 for the admissible
    parameter region of a family with target modulus t0."""
    if not 0.0 < t0 < 1.0:
        raise ValueError("need 0 < t0 < 1")
    lam = complex(lam)
    return bool(abs(-0.5j * lam / (1.0 + 0.5j * lam)) < t0)


def _admissible_modulus(lam) -> float:
    lam = complex(lam)
    return abs(-0.5j * lam / (1.0 + 0.5j * lam))


def _patch_constants(lam) -> tuple[complex, complex]:
    """(inner, outer) constants of the annular shear patch; their sum is
    2 * shear_response(lam)."""
    lo, up = piece_constants(lam)
    return -up, -lo


def distinguished_parameter(t0: float) -> float:
    """The positive real parameter whose patch modulus equals t0."""
    if not 0.0 < t0 < 1.0:
        raise ValueError("no real parameter solves the modulus equation "
                         f"for t0 = {t0}")
    return 2.0 * t0 / math.sqrt(1.0 - t0 * t0)


def _slit_cover(t: float = _DEFAULT_SLIT_T):
    from .elliptic import elliptic_cover

    key = round(t, 12)
    if key not in _COVER_CACHE:
        _COVER_CACHE[key] = elliptic_cover(t)
    return _COVER_CACHE[key]


def _integers_near(center: complex, radius: float) -> np.ndarray:
    lo = math.floor(center.real - radius) - 1
    hi = math.ceil(center.real + radius) + 1
    return np.arange(lo, hi + 1)


# ---------------------------------------------------------------------------
# family objects


@dataclass
class SeparationCertificate:
    """Witness that two parameters give members with distinct pairings."""

    lambda1: object
    lambda2: object
    phi: QuadraticDifferential
    pairing: complex
    threshold: float
    dictionary_index: int = 0

    @property
    def valid(self) -> bool:
        return abs(self.pairing) > self.threshold


@dataclass
class HolomorphyReport:
    center: complex
    radius: float
    h: float
    cr_residual: float  # relative four-point Cauchy-Riemann defect
    circle_defect: float  # relative mean-value defect on the circle
    passed: bool


@dataclass
class GeodesicFamily:
    """A parametrized family base + patch with its admissibility data.

    Single-patch kinds ("disk", "punctured_disk", "annulus") expose
    member(lam); the annuli-string kind carries one realized member for a
    stored parameter sequence.
    """

    kind: str
    base: BeltramiField
    t0: float
    lambda0: float
    U: object
    domain: object = dc_field(default_factory=PlaneMinusIntegers)
    patch: object = None  # lam -> BeltramiField on U (single-patch kinds)
    closure_meets_punctures: bool = False
    lambda0_on_boundary: bool = True
    K: float | None = None
    L: int | None = None
    lambda_seq: np.ndarray | None = None
    member_field: BeltramiField | None = None

    def admissible(self, lam) -> bool:
        try:
            LambdaParam(complex(lam))
        except ValueError:
            return False
        m = _admissible_modulus(lam)
        return m < self.t0 or abs(m - self.t0) <= 1e-12

    def member(self, lam=None) -> BeltramiField:
        if self.kind == STRING_KIND:
            if lam is not None:
                raise ValueError("the annuli-string family fixes its "
                                 "parameters at construction")
            return self.member_field
        if lam is None:
            raise ValueError("member needs a parameter")
        lam = complex(lam)
        LambdaParam(lam)
        if not self.admissible(lam):
            raise ValueError(f"parameter {lam} is outside the admissible "
                             f"region for t0 = {self.t0}")
        return glue(self.base, self.patch(lam), self.U)

    def distinguished_member(self) -> BeltramiField:
        """The member whose modulus is constant equal to t0."""
        if self.kind == STRING_KIND:
            seq = np.full(2 * self.L + 1, self.lambda0, dtype=complex)
            twin = build_infinite_family(seq, self.K, self.t0)
            return twin.member_field
        return self.member(self.lambda0)


# ---------------------------------------------------------------------------
# construction


def _require_base(base: BeltramiField, t0: float):
    sup = base.sup_norm()
    if abs(sup - t0) > 1e-9:
        raise ValueError(f"base field must have sup-norm t0 = {t0}, "
                         f"got {sup}")


def build_family(kind: str, U, base: BeltramiField, t0: float) -> GeodesicFamily:
    """Glued family lam -> chi_(R - U) * base + chi_U * patch(lam).

    kind selects the patch: "disk" rescales the slit-covering pushforward
    onto a round disk avoiding the punctures, "punctured_disk" uses the
    degenerate annular patch on a disk about one puncture, "annulus" the
    two-ring annular patch.  The distinguished real parameter makes the
    glued modulus constant; it does not exist for t0 >= 1.
    """
    if kind not in _SINGLE_KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    lam0 = distinguished_parameter(t0)
    _require_base(base, t0)

    if kind == "disk":
        if not isinstance(U, Disk):
            raise TypeError("the disk configuration needs a Disk region")
        center, radius = complex(U.center), float(U.radius)
        ints = _integers_near(center, radius)
        dist = np.abs(ints - center)
        if np.any(dist <= radius):
            raise ValueError("the disk patch region must avoid the punctures")
        closure_meets = bool(np.any(np.abs(dist - radius) <= 1e-12))
        cover = _slit_cover()

        def patch(lam, center=center, radius=radius, cover=cover):
            df = disk_family(lam, cover)
            fun = lambda z, df=df: df((np.asarray(z, complex) - center) / radius)
            mods = piece_moduli(lam)
            const = mods[0] if abs(mods[0] - mods[1]) < 1e-15 else None
            return BeltramiField(
                pieces=[Piece(U.contains, fun, const)],
                label=f"diskpatch[{lam}]",
                support_box=(center.real - radius, center.real + radius,
                             center.imag - radius, center.imag + radius),
                sup_override=max(mods),
            )

    elif kind == "punctured_disk":
        if not isinstance(U, Disk):
            raise TypeError("the punctured-disk configuration needs a Disk "
                            "region")
        center, radius = complex(U.center), float(U.radius)
        ints = _integers_near(center, radius)
        inside = np.abs(ints - center) < radius
        if int(np.sum(inside)) != 1:
            raise ValueError("the punctured-disk region must contain exactly "
                             "one puncture")
        closure_meets = True

        def patch(lam, center=center, radius=radius):
            return annulus_patch(lam, center, 0.0, radius)

    else:  # annulus
        if not isinstance(U, RoundAnnulus) or U.r_in <= 0.0:
            raise TypeError("the annulus configuration needs a RoundAnnulus "
                            "with positive inner radius")
        center = complex(U.center)
        ints = _integers_near(center, U.r_out)
        dist = np.abs(ints - center)
        if np.any((dist > U.r_in) & (dist < U.r_out)):
            raise ValueError("the open annulus must avoid the punctures")
        closure_meets = bool(
            np.any((dist >= U.r_in - 1e-12) & (dist <= U.r_out + 1e-12))
        )

        def patch(lam, U=U):
            return annulus_patch(lam, U.center, U.r_in, U.r_out)

    return GeodesicFamily(
        kind=kind,
        base=base,
        t0=float(t0),
        lambda0=lam0,
        U=U,
        patch=patch,
        closure_meets_punctures=closure_meets,
    )


def build_infinite_family(lambda_seq, K: float, t0: float) -> GeodesicFamily:
    """Base field with a string of annular shear patches.

    The annuli sit at centers 3j + 3/2 with inner radius 1/2 and outer
    radius 1/2 + 2^-|j|, |j| <= L, so patch j surrounds the two punctures
    3j+1 and 3j+2.  K is the parameter bound matching the base modulus t0
    through K / sqrt(4 + K^2) = t0; the glued field has one piece per
    annulus plus the base piece, 2L + 2 in total.
    """
    seq = np.asarray(list(lambda_seq), dtype=complex)
    if seq.ndim != 1 or seq.size % 2 != 1 or seq.size < 3:
        raise ValueError("need an odd-length parameter sequence (indices "
                         "-L..L with L >= 1)")
    L = seq.size // 2
    if not 0.0 < t0 < 1.0:
        raise ValueError("need 0 < t0 < 1")
    K_expected = distinguished_parameter(t0)
    if not math.isfinite(K) or abs(K - K_expected) > 1e-9 * max(1.0, K_expected):
        raise ValueError(f"bound K = {K} does not match the base modulus "
                         f"t0 = {t0} (expected {K_expected})")
    for j, lam in zip(range(-L, L + 1), seq):
        if abs(lam) > K * (1.0 + 1e-12):
            raise ValueError(f"parameter out of the admissible set: "
                             f"|lambda_{j}| = {abs(lam)} > K = {K}")
        LambdaParam(lam)

    base = example1_field(t0)
    annuli = tuple(
        RoundAnnulus(3.0 * j + 1.5, 0.5, 0.5 + 2.0 ** (-abs(j)))
        for j in range(-L, L + 1)
    )
    pieces = []
    patch_mods = [t0]
    for ann, lam in zip(annuli, seq):
        ap = annulus_patch(lam, ann.center, ann.r_in, ann.r_out)
        mods = piece_moduli(lam)
        const = mods[0] if abs(mods[0] - mods[1]) < 1e-15 else None
        pieces.append(Piece(ann.contains, ap, const))
        patch_mods.append(max(mods))
    pieces.append(Piece(lambda z: np.ones(np.shape(z), dtype=bool),
                        base, t0))
    member = BeltramiField(
        pieces=pieces,
        domain=PlaneMinusIntegers(),
        label=f"annuli_string[L={L}]",
        sup_override=max(patch_mods),
    )
    return GeodesicFamily(
        kind=STRING_KIND,
        base=base,
        t0=float(t0),
        lambda0=K_expected,
        U=annuli,
        closure_meets_punctures=True,
        K=float(K),
        L=L,
        lambda_seq=seq,
        member_field=member,
    )


# ---------------------------------------------------------------------------
# semi-analytic patch pairings


def _c2_coefficient(phi, center: complex, r_hole: float) -> complex:
    """Laurent coefficient of (z - center)^-2 of phi on the annulus outside
    the hole of radius r_hole, by a spectral contour inside the annulus."""
    rho = 0.5 * r_hole
    if isinstance(phi, QuadraticDifferential):
        pad = 1.05 * r_hole
        window = (center.real - pad, center.real + pad,
                  center.imag - pad, center.imag + pad)
        inner = [abs(p - center) for p in phi.pole_points_in(window)
                 if abs(p - center) < r_hole - 1e-12]
        top = max(inner) if inner else 0.0
        rho = 0.5 * (top + r_hole)
    return contour_fourier(phi, mode="circle", radius=rho, center=center,
                           m=256)


def _ring_log_factor(lam, r_in: float, r_out: float) -> complex:
    """Radial factor of the annular patch pairing: the two ring constants
    weighted by their log-thickness.  Equals log(r_out/r_in) * G(lam)."""
    c_in, c_out = _patch_constants(lam)
    r_mid = math.sqrt(r_in * r_out)
    return c_in * math.log(r_mid / r_in) + c_out * math.log(r_out / r_mid)


def _slit_mean_cached(family: GeodesicFamily, phi) -> complex:
    cover = _slit_cover()
    center, radius = complex(family.U.center), float(family.U.radius)
    return cover.slit_mean(lambda x: phi(center + radius * np.asarray(x)))


def patch_pairing(family: GeodesicFamily, lam, phi) -> complex:
    """Closed-form pairing of the patch at lam against phi over U.

    Annular kinds reduce to 2*pi * c_-2 * ring log factor; the disk kind
    to -R * r^2 * (slit mean of the rescaled integrand) * G(lam).  The
    degenerate punctured-disk patch pairs to zero against any integrand
    with at most a simple pole at the puncture; a nonzero z^-2
    coefficient there would make the pairing divergent, which is refused.
    """
    if family.kind == "annulus":
        U = family.U
        c2 = _c2_coefficient(phi, complex(U.center), U.r_in)
        return 2.0 * np.pi * c2 * _ring_log_factor(lam, U.r_in, U.r_out)
    if family.kind == "punctured_disk":
        U = family.U
        c2 = _c2_coefficient(phi, complex(U.center), U.radius)
        if abs(c2) > 1e-9:
            raise ValueError("pairing with the degenerate patch diverges for "
                             "an integrand with a z^-2 part at the puncture")
        return 0.0j
    if family.kind == "disk":
        cover = _slit_cover()
        mean = _slit_mean_cached(family, phi)
        r = float(family.U.radius)
        return -cover.R * r * r * mean * shear_response(lam)
    if family.kind == STRING_KIND:
        total = 0.0j
        for ann, lam_j in zip(family.U, np.asarray(lam, complex)):
            c2 = _c2_coefficient(phi, complex(ann.center), ann.r_in)
            total += 2.0 * np.pi * c2 * _ring_log_factor(lam_j, ann.r_in,
                                                         ann.r_out)
        return total
    raise ValueError(f"unknown family kind {family.kind!r}")


def pairing_observable(family: GeodesicFamily, phi):
    """lam -> patch pairing as a plain callable, with the lam-independent
    geometry factors precomputed.  This is the parameter-dependent part of
    the full member pairing (the base contribution is constant in lam)."""
    if family.kind == "annulus":
        U = family.U
        c2 = _c2_coefficient(phi, complex(U.center), U.r_in)
        return lambda lam: 2.0 * np.pi * c2 * _ring_log_factor(
            lam, U.r_in, U.r_out)
    if family.kind == "disk":
        cover = _slit_cover()
        mean = _slit_mean_cached(family, phi)
        r = float(family.U.radius)
        scale = -cover.R * r * r * mean
        return lambda lam: scale * shear_response(lam)
    return lambda lam: patch_pairing(family, lam, phi)


# ---------------------------------------------------------------------------
# separation


@functools.lru_cache(maxsize=8)
def default_dictionary(L: int = 4) -> tuple[QuadraticDifferential, ...]:
    """Deterministic witness candidates: the periodic basis pair first, then
    the rational substitution differentials in slot order.  Cached so the
    per-element size normalizations are computed once."""
    phis = list(qs_basis())
    for j in range(-L, L + 1):
        for kind in ("alpha", "beta"):
            phis.append(dictionary_differential(j, L, kind))
    return tuple(phis)


def _dictionary_scale(phi: QuadraticDifferential) -> float:
    """L1 size of a dictionary element: over one period cell for periodic
    integrands, over the whole punctured plane otherwise."""
    key = id(phi)
    if key in _QNORM_CACHE:
        return _QNORM_CACHE[key][1]
    region = Cell(3.0, 0) if phi.period else PlaneMinusIntegers()
    val = float(q_norm(phi, region, tol=1e-3).value.real)
    _QNORM_CACHE[key] = (phi, val)
    return val


def separate(
    family: GeodesicFamily,
    lam1,
    lam2,
    dictionary=None,
    threshold: float | None = None,
) -> SeparationCertificate | None:
    """First dictionary element whose pairing against the member difference
    clears the threshold, or None.

    The member difference is supported on U, so the pairing is the patch
    pairing difference, evaluated in closed form.  The default per-element
    threshold is 1e-8 * t0 * (element L1 size).
    """
    if family.kind == STRING_KIND:
        s1 = np.asarray(lam1, complex)
        s2 = np.asarray(lam2, complex)
        if s1.shape != s2.shape or s1.size != 2 * family.L + 1:
            raise ValueError("parameter sequences must both have length "
                             f"{2 * family.L + 1}")
    else:
        for lam in (lam1, lam2):
            if not family.admissible(lam):
                raise ValueError(f"parameter {lam} is not admissible")

    phis = default_dictionary(family.L or 4) if dictionary is None else dictionary
    for idx, phi in enumerate(phis):
        pair = patch_pairing(family, lam1, phi) - patch_pairing(family, lam2, phi)
        if pair == 0.0:
            continue
        thr = threshold if threshold is not None else \
            1e-8 * family.t0 * _dictionary_scale(phi)
        if abs(pair) > thr:
            return SeparationCertificate(
                lambda1=lam1, lambda2=lam2, phi=phi, pairing=complex(pair),
                threshold=float(thr), dictionary_index=idx,
            )
    return None


def sample_lambda_prime(t0: float, n: int, rng) -> np.ndarray:
    """n admissible parameters with nonnegative imaginary part, by rejection
    from the bounding rectangle.  The lower half-plane is excluded because
    there the glued modulus can exceed t0 even when the membership formula
    holds."""
    lam0 = distinguished_parameter(t0)
    out = []
    while len(out) < n:
        cand = complex(rng.uniform(1e-3, lam0), rng.uniform(0.0, 0.999))
        if lambda_prime_contains(cand, t0):
            out.append(cand)
    return np.asarray(out)


# ---------------------------------------------------------------------------
# forward pairings for the annuli string


def _gauss_panels(edges: np.ndarray, order: int):
    x, w = roots_legendre(order)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    half = 0.5 * (b - a)
    nodes = a + half * (x[None, :] + 1.0)
    weights = np.broadcast_to(w[None, :], nodes.shape) * half
    return nodes.ravel(), weights.ravel()


def _theta_panels() -> tuple[np.ndarray, np.ndarray]:
    """Angular panels graded toward the two inner-circle pole directions
    (angles 0 and pi)."""
    n = int(math.ceil(math.log(0.5 * np.pi / _THETA_MIN)
                      / math.log(1.0 / _THETA_RATIO)))
    bounds = 0.5 * np.pi * _THETA_RATIO ** np.arange(n + 1)
    nodes, weights = [], []
    for pole in (0.0, np.pi):
        for sign in (1.0, -1.0):
            edges = pole + sign * bounds
            for k in range(n):
                a, b = sorted((edges[k], edges[k + 1]))
                nn, ww = _gauss_panels(np.array([a, b]), _THETA_ORDER)
                nodes.append(nn)
                weights.append(ww)
    return np.concatenate(nodes), np.concatenate(weights)


def _rho_panels(r_in: float, r_out: float):
    r_mid = math.sqrt(r_in * r_out)
    g = _RHO_INNER_RATIO ** np.arange(_RHO_INNER_PANELS, -1, -1)
    inner_edges = r_in + (r_mid - r_in) * np.concatenate([[0.0], g])
    outer_edges = np.linspace(r_mid, r_out, _RHO_OUTER_PANELS + 1)
    n1, w1 = _gauss_panels(inner_edges, _RHO_ORDER)
    n2, w2 = _gauss_panels(outer_edges, _RHO_ORDER)
    return np.concatenate([n1, n2]), np.concatenate([w1, w2]), r_mid


def _slot_rule(r_in: float, r_out: float):
    """Product rule on the annulus r_in < |w| < r_out (local coordinates),
    graded for integrands with simple poles at w = +-r_in and a circular
    piece boundary at the geometric mean radius.

    Returns (nodes, area weights, radii, phase e^{2 i theta}, r_mid).
    """
    key = (round(r_in, 12), round(r_out, 12))
    if key in _SLOT_RULE_CACHE:
        return _SLOT_RULE_CACHE[key]
    th, wth = _theta_panels()
    rho, wrho, r_mid = _rho_panels(r_in, r_out)
    e = np.exp(1j * th)
    nodes = (rho[None, :] * e[:, None]).ravel()
    weights = ((rho * wrho)[None, :] * wth[:, None]).ravel()
    phase = ((e * e)[:, None] * np.ones_like(rho)[None, :]).ravel()
    radii = np.broadcast_to(rho[None, :], (th.size, rho.size)).ravel()
    out = (nodes, weights, radii, phase, r_mid)
    _SLOT_RULE_CACHE[key] = out
    return out


def _string_term_values(z: np.ndarray, L: int) -> np.ndarray:
    """Values of the 2*(2L+1) substitution differentials at z, rows ordered
    alpha_-L..alpha_L then beta_-L..beta_L."""
    P, Q = 3.0 * L, 6.0 * L
    anchor = (z - P) * (z - Q)
    rows = np.empty((2 * (2 * L + 1), z.size), dtype=complex)
    for i, j in enumerate(range(-L, L + 1)):
        rows[i] = 1.0 / ((z - (3.0 * j + 1.0)) * anchor)
        rows[i + 2 * L + 1] = 1.0 / ((z - (3.0 * j + 2.0)) * anchor)
    return rows


def _term_tail(vals: np.ndarray, ms: np.ndarray, M: int) -> complex:
    """Closed-form sum of the fitted 1/m^3..1/m^5 model beyond m = M."""
    A = np.column_stack([ms ** -3.0, ms ** -4.0, ms ** -5.0])
    hurwitz = np.array([zeta(3.0, M + 1), zeta(4.0, M + 1), zeta(5.0, M + 1)])
    cr, *_ = np.linalg.lstsq(A, vals.real, rcond=None)
    ci, *_ = np.linalg.lstsq(A, vals.imag, rcond=None)
    return complex(np.dot(cr, hurwitz), np.dot(ci, hurwitz))


def _plane_term_pairings(base: BeltramiField, L: int) -> np.ndarray:
    """Pairing of the base field against each substitution differential over
    the punctured plane: fixed cell rule swept over cells plus fitted
    algebraic tails on both sides."""
    rule = default_cell_rule()
    M = _SWEEP_CELLS
    n_terms = 2 * (2 * L + 1)
    dots = np.zeros((2 * M + 1, n_terms), dtype=complex)
    for i, m in enumerate(range(-M, M + 1)):
        z = rule.nodes + 3.0 * m
        wmu = rule.weights * base(z)
        dots[i] = _string_term_values(z, L) @ wmu
    total = dots.sum(axis=0)
    ms = np.arange(M - _TAIL_FIT_POINTS + 1, M + 1, dtype=float)
    for a in range(n_terms):
        pos = dots[(M + ms).astype(int), a]
        neg = dots[(M - ms).astype(int), a]
        total[a] += _term_tail(pos, ms, M) + _term_tail(neg, ms, M)
    return total


def _annulus_term_dots(family: GeodesicFamily) -> tuple[np.ndarray, np.ndarray]:
    """Per-term quadratures over each annulus: (slots, holes).

    slots[a] = sum_j int_{A_j} patch_j * term_a, holes[a] = sum_j
    int_{A_j} base * term_a, all terms sharing one node set per annulus so
    that differences of string pairings inherit the local accuracy.
    """
    L = family.L
    n_terms = 2 * (2 * L + 1)
    slots = np.zeros(n_terms, dtype=complex)
    holes = np.zeros(n_terms, dtype=complex)
    for ann, lam in zip(family.U, family.lambda_seq):
        nodes, weights, radii, phase, r_mid = _slot_rule(ann.r_in, ann.r_out)
        z = complex(ann.center) + nodes
        terms = _string_term_values(z, L)
        c_in, c_out = _patch_constants(lam)
        nu = np.where(radii < r_mid, c_in, c_out) * phase
        slots += terms @ (weights * nu)
        holes += terms @ (weights * family.base(z))
    return slots, holes


def _substitution_matrix(L: int) -> np.ndarray:
    """Row s, column a coefficients expressing string s in the term basis:
    row 0 the all-alpha string, row 1+k the single substitution at slot
    j = k - L."""
    n_slots = 2 * L + 1
    mat = np.zeros((n_slots + 1, 2 * n_slots))
    mat[0, :n_slots] = 1.0
    for k in range(n_slots):
        mat[1 + k, :n_slots] = 1.0
        mat[1 + k, k] = 0.0
        mat[1 + k, n_slots + k] = 1.0
    return mat


def forward_pairings(family: GeodesicFamily, L: int) -> np.ndarray:
    """Pairings of the member (row 0) and of the bare truncated base
    (row 1) against the all-alpha string and the 2L+1 single-substitution
    strings, as a 2 x (2L+2) matrix.

    Row 1 repeats the quadrature with all patches removed, so that row
    differences cancel the base contribution exactly and isolate the
    patch response.
    """
    if family.kind != STRING_KIND:
        raise ValueError("forward pairings apply to the annuli-string family")
    if L != family.L:
        raise ValueError(f"truncation mismatch: family has L = {family.L}")
    cell_terms = _plane_term_pairings(family.base, L)
    slot_terms, hole_terms = _annulus_term_dots(family)
    S = _substitution_matrix(L)
    member_terms = cell_terms - hole_terms + slot_terms
    base_terms = cell_terms - hole_terms
    out = np.vstack([S @ member_terms, S @ base_terms])
    if not np.all(np.isfinite(out)):
        raise RuntimeError("quadrature failure in the forward pairings")
    return out


# ---------------------------------------------------------------------------
# parameter recovery


def _delta_c2(j: int, L: int) -> float:
    """Change of the z^-2 coefficient about the annulus center when the
    slot-j term switches from the alpha to the beta pole."""
    a_alpha = 3.0 * j + 1.0
    a_beta = 3.0 * j + 2.0
    P, Q = 3.0 * L, 6.0 * L
    return (0.5 / ((a_beta - P) * (a_beta - Q))
            + 0.5 / ((a_alpha - P) * (a_alpha - Q)))


def recovery_calibration() -> float:
    """Scalar tying the quadrature pairings to the analytic patch response,
    measured once from a reference string with a known unit parameter."""
    if "sigma" in _CAL_CACHE:
        return _CAL_CACHE["sigma"]
    t0 = 0.46
    K = distinguished_parameter(t0)
    ref = build_infinite_family([0.0, 1.0, 0.0], K, t0)
    slots, _ = _annulus_term_dots(ref)
    L = 1
    d0 = slots[(2 * L + 1) + L] - slots[L]  # beta_0 minus alpha_0
    r = ref.U[L]
    kappa = 2.0 * np.pi * math.log(r.r_out / r.r_in) * _delta_c2(0, L)
    A2 = (-0.5j * 1.0) ** 2
    response = A2 / (1.0 - A2)
    sigma = float((d0 / (kappa * response)).real)
    _CAL_CACHE["sigma"] = sigma
    return sigma


def recover_parameters(
    pairings: np.ndarray,
    L: int,
    geometry: GeodesicFamily,
    calibration: float | None = None,
) -> np.ndarray:
    """Invert the forward pairings back to the parameter sequence.

    For each slot the double difference (substitution minus all-alpha,
    member row minus base row) isolates kappa_j * A_j^2 / (1 - A_j^2)
    with A_j = -i lambda_j / 2; the quotient is inverted on the branch
    Re lambda >= 0.  The response is even in lambda, so purely imaginary
    parameters (both signs of which are admissible) come back with the
    Im >= 0 representative.  kappa_j carries the annulus log-thickness,
    the coefficient change delta c_-2, and the calibrated scalar.
    """
    M = np.asarray(pairings, dtype=complex)
    if M.shape != (2, 2 * L + 2):
        raise ValueError(f"expected a 2 x {2 * L + 2} pairing matrix, got "
                         f"{M.shape}")
    if geometry.kind != STRING_KIND or geometry.L != L:
        raise ValueError("geometry must be the matching annuli-string family")
    sigma = recovery_calibration() if calibration is None else calibration
    out = np.empty(2 * L + 1, dtype=complex)
    for k, (j, ann) in enumerate(zip(range(-L, L + 1), geometry.U)):
        d = (M[0, 1 + k] - M[0, 0]) - (M[1, 1 + k] - M[1, 0])
        kappa = sigma * 2.0 * np.pi * math.log(ann.r_out / ann.r_in) \
            * _delta_c2(j, L)
        w = d / kappa  # A^2 / (1 - A^2)
        denom = 1.0 + w
        if abs(denom) < 1e-9:
            raise ValueError(f"slot {j}: response outside the invertible "
                             "branch")
        a2 = w / denom
        lam = np.sqrt(-4.0 * a2 + 0j)
        if lam.real < 0.0:
            lam = -lam
        if lam.imag < 0.0 and lam.real <= 1e-8 * abs(lam):
            lam = -lam
        out[k] = lam
    return out


# ---------------------------------------------------------------------------
# holomorphy in the parameter


def holomorphy_check(map_fn, center: complex, radius: float) -> HolomorphyReport:
    """Four-point Cauchy-Riemann stencil plus the circle mean-value test.

    Both defects are relative; an antiholomorphic map fails with a
    Cauchy-Riemann defect near 2.
    """
    if radius <= 0.0:
        raise ValueError("need a positive radius")
    center = complex(center)
    h = min(1e-4, radius / 100.0)
    fx = (map_fn(center + h) - map_fn(center - h)) / (2.0 * h)
    fy = (map_fn(center + 1j * h) - map_fn(center - 1j * h)) / (2.0 * h)
    denom = max(abs(fx), abs(fy), 1e-300)
    cr = abs(fx + 1j * fy) / denom

    f0 = map_fn(center)
    ring = [map_fn(center + radius * np.exp(2j * np.pi * k / 16.0))
            for k in range(16)]
    mean = sum(ring) / 16.0
    scale = max(abs(f0), max(abs(v) for v in ring), 1e-300)
    circ = abs(mean - f0) / scale

    return HolomorphyReport(
        center=center,
        radius=float(radius),
        h=float(h),
        cr_residual=float(cr),
        circle_defect=float(circ),
        passed=bool(cr < 1e-6 and circ < 1e-6),
    )


# ---------------------------------------------------------------------------
# honest annulus pairing (shared by the constants audit)


def annulus_pairing_quadrature(lam, center, r_in: float, r_out: float,
                               fun) -> complex:
    """Quadrature pairing of the annular shear patch against a pointwise
    integrand, on the graded polar rule."""
    nodes, weights, radii, phase, r_mid = _slot_rule(float(r_in), float(r_out))
    z = complex(center) + nodes
    c_in, c_out = _patch_constants(lam)
    nu = np.where(radii < r_mid, c_in, c_out) * phase
    return complex(np.sum(weights * nu * fun(z)))
