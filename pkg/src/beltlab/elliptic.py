"""Covering of the slit disk by a horizontal strip.

The disk minus a centered slit [-t, t] is a doubly connected domain; its
universal curve here is the strip 0 < Im zeta < R with deck translation
zeta -> zeta + 2*pi, and the covering rho satisfies the algebraic ODE

    rho'(zeta) = c * w,   w^2 = (rho^2 - t^2) * (rho^2 - 1/t^2),

with c = 2*t*K(t^2)/pi fixed by the 2*pi period (K is the complete elliptic
integral in modulus convention).  The strip height R is pinned by the
Groetzsch-type identity mu(t^2) = 2*R.

Everything downstream needs three things: R(t) and its inverse, pointwise
values of rho and rho' (for pullbacks and pushforwards), and horizontal
Fourier means of lifted integrands (closed form via a slit integral).  A
Dirichlet-energy collocation solver for the same modulus is kept as an
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import ellipk, roots_jacobi


def complete_K(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus convention
    K(k) = int_0^{pi/2} (1 - k^2 sin^2)^{-1/2}."""
    return float(ellipk(k * k))


def grotzsch_mu(s: float) -> float:
    """(pi/2) * K(sqrt(1-s^2)) / K(s) for 0 < s < 1."""
    if not 0.0 < s < 1.0:
        raise ValueError("need 0 < s < 1")
    return float(0.5 * np.pi * ellipk(1.0 - s * s) / ellipk(s * s))


def slit_modulus_R(t: float) -> float:
    """Strip height of the disk minus [-t, t]: R = mu(t^2)/2."""
    if not 0.0 < t < 1.0:
        raise ValueError("need 0 < t < 1")
    return 0.5 * grotzsch_mu(t * t)


def slit_t_of_R(R: float) -> float:
    """Inverse of slit_modulus_R by bracketing."""
    if R <= 0:
        raise ValueError("need R > 0")
    f = lambda t: slit_modulus_R(t) - R
    lo, hi = 1e-12, 1.0 - 1e-12
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16))


def ode_scale(t: float) -> float:
    """Coefficient c with rho' = c*w; the value 2*t*K(t^2)/pi makes the
    horizontal period exactly 2*pi."""
    return float(2.0 * t * ellipk(t ** 4) / np.pi)


def _rhs_factory(t: float, c: float, direction):
    """Real 4-vector RHS for (rho, w) along zeta(s) = zeta0 + s*direction,
    vectorized over a batch: y = [Re rho*, Im rho*, Re w*, Im w*]."""
    s2 = t * t + 1.0 / (t * t)

    def rhs(_, y):
        n = y.size // 4
        rho = y[0:n] + 1j * y[n:2 * n]
        w = y[2 * n:3 * n] + 1j * y[3 * n:4 * n]
        drho = direction * c * w
        dw = direction * c * (2.0 * rho ** 3 - s2 * rho)
        return np.concatenate([drho.real, drho.imag, dw.real, dw.imag])

    return rhs


def _pack(rho, w):
    return np.concatenate([rho.real, rho.imag, w.real, w.imag])


def _unpack(y):
    n = y.size // 4
    return y[0:n] + 1j * y[n:2 * n], y[2 * n:3 * n] + 1j * y[3 * n:4 * n]


@dataclass
class EllipticCoverData:
    """Covering data for one slit half-length t: strip height, ODE scale,
    a dense axis profile, and batch evaluation/inversion of rho."""

    t: float
    R: float
    c: float
    axis_defect: float = 0.0  # |rho(iR) - t| from the axis integration
    _axis: object = dc_field(default=None, repr=False)
    _seeds: tuple | None = dc_field(default=None, repr=False)

    # -- axis profile ------------------------------------------------------

    def _axis_state(self, eta):
        """(rho, w) on the vertical axis zeta = i*eta, 0 <= eta <= R."""
        eta = np.asarray(eta, float)
        y = self._axis.sol(np.clip(eta, 0.0, self.R))
        if y.ndim == 1:
            y = y[:, None]
        rho = y[0] + 1j * y[1]
        w = y[2] + 1j * y[3]
        return rho, w

    # -- pointwise covering values ----------------------------------------

    def rho_and_deriv(self, zeta, rtol: float = 1e-12):
        """rho(zeta) and rho'(zeta) for an array of strip points.

        Points are reduced mod 2*pi horizontally; each is reached by one
        horizontal integration from its axis anchor.
        """
        zeta = np.asarray(zeta, dtype=complex)
        flat = zeta.ravel()
        eta = flat.imag
        if np.any((eta <= 0) | (eta >= self.R)):
            raise ValueError("rho is defined for 0 < Im zeta < R only")
        # reduce to [-pi, pi) to shorten the integration paths
        xi = np.angle(np.exp(1j * flat.real))
        rho = np.empty(flat.size, complex)
        w = np.empty(flat.size, complex)
        for start in range(0, flat.size, 256):
            sl = slice(start, min(start + 256, flat.size))
            r0, w0 = self._axis_state(eta[sl])
            # fold the per-point horizontal distance into the state by
            # scaling the direction: integrate s in [0, 1] with speed xi_j
            rhs_scaled = _scaled_rhs(self.t, self.c, xi[sl])
            sol = solve_ivp(
                rhs_scaled, (0.0, 1.0), _pack(r0, w0),
                method="DOP853", rtol=rtol, atol=1e-13, dense_output=False,
            )
            if not sol.success:
                raise RuntimeError(f"covering integration failed: {sol.message}")
            rr, ww = _unpack(sol.y[:, -1])
            rho[sl], w[sl] = rr, ww
        return rho.reshape(zeta.shape), (self.c * w).reshape(zeta.shape)

    # -- inversion ---------------------------------------------------------

    def _seed_grid(self):
        if self._seeds is None:
            nxi, neta = 64, 40
            xi = np.linspace(-np.pi, np.pi, nxi, endpoint=False)
            eta = np.linspace(self.R / (neta + 1), self.R * (1 - 1 / (neta + 1)), neta)
            Z = xi[None, :] + 1j * eta[:, None]
            Rho, _ = self.rho_and_deriv(Z, rtol=1e-9)
            self._seeds = (Z.ravel(), Rho.ravel())
        return self._seeds

    def invert(self, w, tol: float = 1e-11, max_iter: int = 40):
        """Preimage zeta with rho(zeta) = w, Im zeta in (0, R), Re in [-pi, pi).

        Newton from the nearest coarse-grid seed; steps are damped so the
        iterate never leaves the strip.
        """
        w = np.asarray(w, dtype=complex)
        flat = w.ravel()
        zs, rs = self._seed_grid()
        zeta = zs[np.argmin(np.abs(rs[None, :] - flat[:, None]), axis=1)].copy()
        active = np.ones(flat.size, bool)
        eps = 1e-9 * self.R
        for _ in range(max_iter):
            if not np.any(active):
                break
            rho, drho = self.rho_and_deriv(zeta[active])
            F = rho - flat[active]
            done = np.abs(F) < tol
            step = F / drho
            newz = zeta[active] - step
            # damp any step that would leave the strip
            bad = (newz.imag <= 0) | (newz.imag >= self.R)
            damp = np.ones(step.size)
            while np.any(bad):
                damp[bad] *= 0.5
                newz = zeta[active] - damp * step
                bad = (newz.imag <= 0) | (newz.imag >= self.R)
                if np.min(damp) < 1e-6:
                    newz = np.where(bad, np.clip(newz.imag, eps, self.R - eps) * 1j + newz.real, newz)
                    break
            upd = zeta[active]
            upd = np.where(done, upd, newz)
            zeta[active] = upd
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        if np.any(active):
            rho, _ = self.rho_and_deriv(zeta[active])
            worst = float(np.max(np.abs(rho - flat[active])))
            if worst > 1e3 * tol:
                raise RuntimeError(f"covering inversion stalled, residual {worst:.2e}")
        zeta.real[:] = np.angle(np.exp(1j * zeta.real))
        return zeta.reshape(w.shape)

    # -- lifted integrands -------------------------------------------------

    def lift(self, phi_star):
        """phi_tilde(zeta) = phi_star(rho) * rho'^2 as a plain callable."""

        def phi_tilde(zeta):
            rho, drho = self.rho_and_deriv(zeta)
            return phi_star(rho) * drho * drho

        return phi_tilde

    def slit_mean(self, phi_star, n: int = 160, check_tol: float = 1e-8) -> complex:
        """Full-period horizontal integral int_0^{2pi} phi_tilde(xi+i eta) dxi,
        independent of eta.

        Collapsing the contour onto the slit gives
            2*c * int_{-t}^{t} phi_star(x) * sqrt((t^2-x^2)(1/t^2-x^2)) dx,
        evaluated with a Gauss-Jacobi rule that absorbs the edge square roots.
        Orders n and 2n must agree to check_tol.
        """

        def quad(order):
            u, wts = roots_jacobi(order, 0.5, 0.5)
            x = self.t * u
            vals = np.asarray(phi_star(x + 0j), complex)
            rad = np.sqrt(1.0 / self.t ** 2 - x * x)
            return 2.0 * self.c * self.t ** 2 * np.sum(wts * vals * rad)

        a, b = quad(n), quad(2 * n)
        if abs(a - b) > check_tol * max(1.0, abs(b)):
            raise RuntimeError(f"slit quadrature not converged: {abs(a - b):.2e}")
        return complex(b)

    def period_integral_via_rho(self, phi_star, height: float | None = None, m: int = 64) -> complex:
        """Same quantity by the trapezoid rule on a horizontal line; used as a
        two-route check of slit_mean."""
        eta = 0.5 * self.R if height is None else float(height)
        xi = 2.0 * np.pi * np.arange(m) / m
        phi_tilde = self.lift(phi_star)
        vals = phi_tilde(xi + 1j * eta)
        return complex(2.0 * np.pi * np.mean(vals))


def _scaled_rhs(t: float, c: float, speeds):
    """RHS with a per-point horizontal speed, so one unit of s covers each
    point's own distance from the axis."""
    s2 = t * t + 1.0 / (t * t)
    speeds = np.asarray(speeds, float)

    def rhs(_, y):
        n = y.size // 4
        rho = y[0:n] + 1j * y[n:2 * n]
        w = y[2 * n:3 * n] + 1j * y[3 * n:4 * n]
        drho = speeds * c * w
        dw = speeds * c * (2.0 * rho ** 3 - s2 * rho)
        return np.concatenate([drho.real, drho.imag, dw.real, dw.imag])

    return rhs


def elliptic_cover(t: float, rtol: float = 1e-12) -> EllipticCoverData:
    """Build the covering data for slit half-length t: integrates the axis
    profile rho(i*eta) from rho(0) = 1 down to rho(iR) = t and records the
    endpoint defect."""
    if not 0.0 < t < 1.0:
        raise ValueError("need 0 < t < 1")
    R = slit_modulus_R(t)
    c = ode_scale(t)
    rho0 = np.array([1.0 + 0j])
    w0 = np.array([1j * np.sqrt((1.0 - t * t) * (1.0 / (t * t) - 1.0))])
    rhs = _rhs_factory(t, c, 1j)
    sol = solve_ivp(
        rhs, (0.0, R), _pack(rho0, w0),
        method="DOP853", rtol=rtol, atol=1e-13, dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"axis integration failed: {sol.message}")
    rho_end, _ = _unpack(sol.y[:, -1])
    defect = float(abs(rho_end[0] - t))
    data = EllipticCoverData(t=t, R=R, c=c, axis_defect=defect, _axis=sol)
    return data


def height_identity_defect(t: float) -> float:
    """| int_t^1 drho / (c*sqrt((rho^2-t^2)(1/t^2-rho^2))) - R |.

    This single number ties the ODE scale c to the strip height R; both come
    from independent elliptic-integral formulas, so a small defect validates
    the pair.
    """
    from scipy.integrate import quad

    R = slit_modulus_R(t)
    c = ode_scale(t)

    def f(rho):
        return 1.0 / (c * np.sqrt((rho * rho - t * t) * (1.0 / (t * t) - rho * rho)))

    # integrable inverse-square-root endpoints; split at the midpoint and let
    # quad's algebraic weighting handle each end
    val, _ = quad(f, t, 1.0, points=None, limit=200, epsabs=1e-13, epsrel=1e-12)
    return float(abs(val - R))


# ---------------------------------------------------------------------------
# independent modulus check by Dirichlet collocation


def _slit_to_circle(z):
    """v = (z + z*sqrt(1 - t^2/z^2))/t with t scaled out by the caller:
    maps the complement of [-1, 1] to |v| > 1 (inverse Joukowski)."""
    z = np.asarray(z, complex)
    root = np.sqrt(1.0 - 1.0 / (z * z))
    v = z * (1.0 + root)
    # pick the branch with |v| >= 1
    flip = np.abs(v) < 1.0
    v[flip] = z[flip] * (1.0 - root[flip])
    return v


def dirichlet_modulus(t: float, tol: float = 1e-6) -> float:
    """Strip height of the disk minus [-t, t] by harmonic collocation.

    Map z -> v = J^{-1}(z/t); the slit becomes the unit circle and the disk
    boundary a smooth curve.  Fit u = beta*ln|v| + harmonic tail with u = 0
    on the slit and u = 1 on the outer curve; the flux term gives the
    modulus as 1/beta in strip units.  The mode count escalates until the
    boundary residual drops below tol.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("need 0 < t < 1")
    last = None
    for n_modes in (16, 24, 32, 48, 64, 96):
        n_pts = 10 * n_modes
        th = 2.0 * np.pi * (np.arange(n_pts) + 0.5) / n_pts
        # slit side: v on the unit circle; disk side: image of the circle
        v_in = np.exp(1j * th)
        v_out = _slit_to_circle(np.exp(1j * th) / t)

        def design(v):
            cols = [np.log(np.abs(v)), np.ones(v.size)]
            for k in range(1, n_modes + 1):
                vk = v ** k
                vmk = v ** (-k)
                cols += [vk.real, vk.imag, vmk.real, vmk.imag]
            return np.column_stack(cols)

        A = np.vstack([design(v_in), design(v_out)])
        rhs = np.concatenate([np.zeros(n_pts), np.ones(n_pts)])
        scale = np.max(np.abs(A), axis=0)
        scale[scale == 0] = 1.0
        coef, *_ = np.linalg.lstsq(A / scale, rhs, rcond=None)
        resid = float(np.max(np.abs((A / scale) @ coef - rhs)))
        beta = coef[0] / scale[0]
        last = (resid, float(1.0 / beta))
        if resid < tol:
            return last[1]
    raise RuntimeError(f"collocation residual too large: {last[0]:.2e}")
