"""Spectral reference charts for the plasma disk and the vacuum annulus.

Both domains are meshed in fixed reference coordinates (s, phi):

* disk chart     y(s, phi) = s * c(phi)                     s in (0, 1]
* annulus chart  y(s, phi) = (1-s) * c_G(phi) + s * c_W(phi)  s in [0, 1]

where c, c_G are the interface reference curve and c_W the wall curve, all
star-shaped about the origin and sampled on a uniform phi grid.  Radial
directions use Chebyshev-Lobatto collocation, the angular direction uses
Fourier collocation, so derivatives of smooth fields are spectrally accurate.

The disk avoids a center node with the classical doubled-grid construction:
a Lobatto grid on [-1, 1] with an odd polynomial degree has no node at 0,
and a grid function F on the positive half extends to the negative half via

    F(-s, phi) = F(s, phi + pi),

because y(-s, phi) = y(s, phi + pi) is the same label point.  That identity
requires the chart curve to satisfy c(phi + pi) = -c(phi), i.e. only even
Fourier modes in the radius; the constructor validates this.  Components of
tensors are stored in Cartesian label indices, so the extension rule above
applies to every stored field with no sign bookkeeping.

Row 0 of every grid array is the interface boundary on both charts.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError, ResolutionError


def fourier_diff(F, order=1):
    """Spectral d/dphi along the last axis (uniform periodic grid on [0, 2pi)).

    The Nyquist mode is zeroed for odd derivative orders (standard choice:
    the sawtooth mode has no well-defined collocation derivative).
    """
    n = F.shape[-1]
    Fh = np.fft.rfft(F, axis=-1)
    k = np.arange(n // 2 + 1)
    fac = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        fac[-1] = 0.0
    return np.fft.irfft(Fh * fac, n=n, axis=-1)


def drop_nyquist(F):
    """Zero the angular Nyquist mode (last axis).

    Divergence-form operators built from chained first derivatives are
    rank-deficient on the Nyquist band (odd-order spectral derivatives of the
    sawtooth vanish), so elliptic solves restrict to the sub-Nyquist space.
    Fields that need the Nyquist mode are under-resolved anyway.
    """
    n = F.shape[-1]
    if n % 2 != 0:
        return F
    Fh = np.fft.rfft(F, axis=-1)
    Fh[..., -1] = 0.0
    return np.fft.irfft(Fh, n=n, axis=-1)


def fourier_eval(values, params, deriv=0):
    """Evaluate the trigonometric interpolant of ``values`` (last axis) at params."""
    vals = np.asarray(values, dtype=float)
    n = vals.shape[-1]
    params = np.atleast_1d(np.asarray(params, dtype=float))
    k = np.fft.rfftfreq(n, d=1.0 / n)
    coef = np.fft.rfft(vals, axis=-1)
    coef = coef * (1j * k) ** deriv
    if deriv % 2 == 1 and n % 2 == 0:
        coef[..., -1] = 0.0
    w = np.full(k.shape, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    ph = np.exp(1j * np.outer(params, k))  # (npts, nk)
    out = np.real(coef @ (ph * w).T) / n
    return out


def chebyshev_lobatto(N):
    """Nodes t_j = cos(pi j / N) (descending) and the differentiation matrix.

    Standard collocation formula (Trefethen, Spectral Methods in MATLAB).
    """
    if N < 1:
        raise ResolutionError("Chebyshev degree must be >= 1")
    j = np.arange(N + 1)
    t = np.cos(np.pi * j / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    T = np.tile(t, (N + 1, 1)).T
    dT = T - T.T + np.eye(N + 1)
    D = np.outer(c, 1.0 / c) / dT
    D -= np.diag(D.sum(axis=1))
    return t, D


def clenshaw_curtis_weights(N):
    """Quadrature weights for the Lobatto nodes cos(pi j / N) on [-1, 1]."""
    if N == 1:
        return np.array([1.0, 1.0])
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    ii = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k * k - 1.0)
        v -= np.cos(N * theta[ii]) / (N * N - 1.0)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k * k - 1.0)
    w[ii] = 2.0 * v / N
    return w


def chebyshev_halfrange_weights(N):
    """Weights on the full Lobatto grid that integrate the interpolant on [0, 1].

    Exact for polynomials of degree <= N.  Built by mapping values to
    Chebyshev coefficients and integrating T_k over the half interval, where

        int_0^1 T_k = -1/(k^2-1)                                (k even)
        int_0^1 T_k = sum at 1 minus T_{k+1}(0), T_{k-1}(0) terms (k odd).
    """
    j = np.arange(N + 1)
    cj = np.ones(N + 1)
    cj[0] = cj[N] = 2.0
    A = 2.0 / (N * np.outer(cj, cj)) * np.cos(np.pi * np.outer(j, j) / N)
    I = np.empty(N + 1)
    I[0] = 1.0
    I[1] = 0.5
    for k in range(2, N + 1):
        if k % 2 == 0:
            I[k] = -1.0 / (k * k - 1.0)
        else:
            sgn = (-1.0) ** ((k + 1) // 2)
            I[k] = (1.0 / (2.0 * (k + 1)) - 1.0 / (2.0 * (k - 1))) - sgn * (
                1.0 / (2.0 * (k + 1)) + 1.0 / (2.0 * (k - 1))
            )
    return I @ A


def _filter_matrix(M, cut, alpha):
    """Dense low-pass operator V diag(sigma) V^-1 on the degree-M Lobatto grid.

    sigma is exactly 1 for k <= cut*M and exp(-alpha ((k/M-cut)/(1-cut))^2)
    beyond, the standard exponential spectral filter with an untouched
    passband.
    """
    j = np.arange(M + 1)
    cj = np.ones(M + 1)
    cj[0] = cj[M] = 2.0
    phase = np.cos(np.pi * np.outer(j, j) / M)
    analysis = 2.0 / (M * np.outer(cj, cj)) * phase
    x = j / M
    sigma = np.ones(M + 1)
    tail = x > cut
    sigma[tail] = np.exp(-alpha * ((x[tail] - cut) / (1.0 - cut)) ** 2)
    return (phase * sigma) @ analysis


def _check_star_shaped(positions, label):
    x = np.asarray(positions, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        raise GeometryError(f"{label}: expected (n, 2) positions")
    r = np.hypot(x[:, 0], x[:, 1])
    if np.any(r <= 0):
        raise GeometryError(f"{label}: curve passes through the origin")
    dx = fourier_diff(x.T, 1).T
    cross = x[:, 0] * dx[:, 1] - x[:, 1] * dx[:, 0]
    if np.any(cross <= 0):
        raise GeometryError(
            f"{label}: curve is not star-shaped about the origin with "
            "counterclockwise orientation"
        )
    return x


class DiskChart:
    """Star-shaped disk chart with doubled-Chebyshev radial collocation.

    Parameters
    ----------
    boundary : (n_phi, 2) array
        Interface reference curve sampled at phi_k = 2 pi k / n_phi.  Must be
        counterclockwise, star-shaped, and satisfy c(phi+pi) = -c(phi).
    n_s : int
        Number of (positive) radial collocation nodes; the interface row is
        s = 1, and no node sits at the center.
    """

    interface_row = 0

    def __init__(self, boundary, n_s):
        boundary = _check_star_shaped(boundary, "disk chart boundary")
        n_phi = boundary.shape[0]
        if n_phi % 2 != 0:
            raise ResolutionError("angular resolution must be even")
        if n_s < 4:
            raise ResolutionError("need at least 4 radial nodes")
        half = np.roll(boundary, n_phi // 2, axis=0)
        sym = np.max(np.abs(half + boundary))
        scale = np.max(np.abs(boundary))
        if sym > 1e-10 * max(scale, 1.0):
            raise GeometryError(
                "disk chart requires c(phi+pi) = -c(phi) (even radius modes); "
                f"got asymmetry {sym:.3e}"
            )

        M = 2 * n_s - 1  # odd polynomial degree -> no node at t = 0
        t, D = chebyshev_lobatto(M)
        D2 = D @ D
        self.n_s = n_s
        self.n_phi = n_phi
        self.shape = (n_s, n_phi)
        self.s = t[:n_s]
        self.phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        self._Dp = D[:n_s, :n_s]
        self._Dm = D[:n_s, n_s:]
        self._D2p = D2[:n_s, :n_s]
        self._D2m = D2[:n_s, n_s:]
        # The integrand F * |det C| has a |t| kink at the (virtual) center in
        # the doubled-grid extension, but F * det C extends smoothly (odd), so
        # integrate the signed extension over [0, 1] with half-range weights
        # folded back onto the positive nodes.
        omega = chebyshev_halfrange_weights(M)
        self._w_s = omega[:n_s] - omega[::-1][:n_s]

        self.boundary = boundary
        c = boundary.T  # (2, n_phi)
        cp = fourier_diff(c, 1)
        S = self.s[:, None]
        # label positions and chart Jacobian C[i, k] = d y^i / d (s, phi)^k
        self.y = np.empty((2, n_s, n_phi))
        self.y[0] = S * c[0]
        self.y[1] = S * c[1]
        C = np.empty((2, 2, n_s, n_phi))
        C[0, 0] = np.broadcast_to(c[0], (n_s, n_phi))
        C[1, 0] = np.broadcast_to(c[1], (n_s, n_phi))
        C[0, 1] = S * cp[0]
        C[1, 1] = S * cp[1]
        self.detC = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
        if np.any(self.detC <= 0):
            raise GeometryError("disk chart is not a diffeomorphism")
        self.A = np.empty_like(C)  # A[k, a] = d (s,phi)^k / d y^a
        self.A[0, 0] = C[1, 1] / self.detC
        self.A[0, 1] = -C[0, 1] / self.detC
        self.A[1, 0] = -C[1, 0] / self.detC
        self.A[1, 1] = C[0, 0] / self.detC
        self.quad_weights = np.abs(self.detC) * self._w_s[:, None] * (2.0 * np.pi / n_phi)

    def _extend(self, F):
        return np.roll(F[..., ::-1, :], self.n_phi // 2, axis=-1)

    def d_ds(self, F):
        G = self._extend(F)
        return np.einsum("ij,...jk->...ik", self._Dp, F) + np.einsum(
            "ij,...jk->...ik", self._Dm, G
        )

    def d_ds2(self, F):
        G = self._extend(F)
        return np.einsum("ij,...jk->...ik", self._D2p, F) + np.einsum(
            "ij,...jk->...ik", self._D2m, G
        )

    def d_dphi(self, F, order=1):
        return fourier_diff(F, order)

    def partial(self, F):
        """Label-space gradient: returns (2, ...) with [a] = dF/dy^a."""
        Fs = self.d_ds(F)
        Fp = self.d_dphi(F)
        return np.stack([self.A[0, 0] * Fs + self.A[1, 0] * Fp,
                         self.A[0, 1] * Fs + self.A[1, 1] * Fp])

    def quad_flat(self, F):
        """Integral of a grid scalar against the flat label measure dy."""
        return float(np.sum(self.quad_weights * F))

    def radial_fold(self, mode):
        """Folded radial differentiation blocks for one angular Fourier mode.

        The doubled-grid extension multiplies the reflected rows of mode m by
        (-1)^m; folding that sign into the negative-node columns gives dense
        (n_s, n_s) first/second derivative matrices on the positive nodes.
        """
        sgn = 1.0 if mode % 2 == 0 else -1.0
        D1 = self._Dp + sgn * self._Dm[:, ::-1]
        D2 = self._D2p + sgn * self._D2m[:, ::-1]
        return D1, D2

    def radial_smooth(self, F, cut=0.25, alpha=60.0):
        """Exponential low-pass filter on the radial Chebyshev coefficients.

        Coefficients up to degree cut*M pass through unchanged, so smooth
        resolved fields (in particular polynomial equilibria) are reproduced
        exactly; above the cutoff the damping exp(-alpha ((x-cut)/(1-cut))^2)
        in x = k/M crushes the near-grid modes whose effective wave CFL
        exceeds the explicit stability limit.  The filter acts on the doubled
        grid, which preserves the center-crossing symmetry of stored fields.
        """
        if not hasattr(self, "_smooth_cache"):
            self._smooth_cache = {}
        key = (float(cut), float(alpha))
        blocks = self._smooth_cache.get(key)
        if blocks is None:
            Phi = _filter_matrix(2 * self.n_s - 1, cut, alpha)
            blocks = (Phi[:self.n_s, :self.n_s], Phi[:self.n_s, self.n_s:])
            self._smooth_cache[key] = blocks
        Pp, Pm = blocks
        G = self._extend(F)
        return np.einsum("ij,...jk->...ik", Pp, F) + np.einsum(
            "ij,...jk->...ik", Pm, G
        )


class AnnulusChart:
    """Radial-blend annulus chart between the interface and the wall."""

    interface_row = 0
    wall_row = -1

    def __init__(self, interface, wall, n_s):
        cG = _check_star_shaped(interface, "annulus interface")
        cW = _check_star_shaped(wall, "annulus wall")
        if cG.shape != cW.shape:
            raise ResolutionError("interface and wall need matching angular grids")
        n_phi = cG.shape[0]
        if n_phi % 2 != 0:
            raise ResolutionError("angular resolution must be even")
        if n_s < 4:
            raise ResolutionError("need at least 4 radial nodes")
        rG = np.hypot(cG[:, 0], cG[:, 1])
        rW = np.hypot(cW[:, 0], cW[:, 1])
        if np.any(rW <= rG):
            raise GeometryError("wall must strictly enclose the interface")

        N = n_s - 1
        t, Dt = chebyshev_lobatto(N)
        self.n_s = n_s
        self.n_phi = n_phi
        self.shape = (n_s, n_phi)
        self.s = (1.0 - t) / 2.0  # ascending: row 0 -> interface, row -1 -> wall
        self._D = -2.0 * Dt
        self._D2 = self._D @ self._D
        self._w_s = 0.5 * clenshaw_curtis_weights(N)
        self.phi = 2.0 * np.pi * np.arange(n_phi) / n_phi

        a = cG.T
        b = cW.T
        ap = fourier_diff(a, 1)
        bp = fourier_diff(b, 1)
        S = self.s[:, None]
        self.y = np.empty((2, n_s, n_phi))
        self.y[0] = (1.0 - S) * a[0] + S * b[0]
        self.y[1] = (1.0 - S) * a[1] + S * b[1]
        C = np.empty((2, 2, n_s, n_phi))
        C[0, 0] = np.broadcast_to(b[0] - a[0], (n_s, n_phi))
        C[1, 0] = np.broadcast_to(b[1] - a[1], (n_s, n_phi))
        C[0, 1] = (1.0 - S) * ap[0] + S * bp[0]
        C[1, 1] = (1.0 - S) * ap[1] + S * bp[1]
        self.detC = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
        if np.any(self.detC <= 0):
            raise GeometryError("annulus chart is not a diffeomorphism")
        self.A = np.empty_like(C)
        self.A[0, 0] = C[1, 1] / self.detC
        self.A[0, 1] = -C[0, 1] / self.detC
        self.A[1, 0] = -C[1, 0] / self.detC
        self.A[1, 1] = C[0, 0] / self.detC
        self.quad_weights = np.abs(self.detC) * self._w_s[:, None] * (2.0 * np.pi / n_phi)

    def d_ds(self, F):
        return np.einsum("ij,...jk->...ik", self._D, F)

    def d_ds2(self, F):
        return np.einsum("ij,...jk->...ik", self._D2, F)

    def d_dphi(self, F, order=1):
        return fourier_diff(F, order)

    def partial(self, F):
        Fs = self.d_ds(F)
        Fp = self.d_dphi(F)
        return np.stack([self.A[0, 0] * Fs + self.A[1, 0] * Fp,
                         self.A[0, 1] * Fs + self.A[1, 1] * Fp])

    def quad_flat(self, F):
        return float(np.sum(self.quad_weights * F))

    def radial_smooth(self, F, cut=0.25, alpha=60.0):
        """Exponential low-pass filter on the radial Chebyshev coefficients.

        Same passband/damping profile as the disk chart's filter, on the
        plain single-sided Lobatto grid of this chart.
        """
        if not hasattr(self, "_smooth_cache"):
            self._smooth_cache = {}
        key = (float(cut), float(alpha))
        Phi = self._smooth_cache.get(key)
        if Phi is None:
            Phi = _filter_matrix(self.n_s - 1, cut, alpha)
            self._smooth_cache[key] = Phi
        return np.einsum("ij,...jk->...ik", Phi, F)
