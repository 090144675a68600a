"""Covariant tensor calculus on a chart carrying a pulled-back metric.

A ``Domain`` bundles a reference chart with a flow map x(y) and exposes the
Lagrangian metric machinery:

    J^i_a   = dx^i/dy^a,        g_ab = delta_ij J^i_a J^j_b,
    Gamma^c_ab = (J^{-1})^c_i d_a J^i_b      (pullback of the flat connection),

covariant derivatives of arbitrary-rank covariant tensors, index raising,
integration against the Riemannian measure, and the perp gradient

    (grad^perp f)^a = (1/sqrt(g)) (d_2 f, -d_1 f)^a ,

which is the pullback of the Eulerian (d_2, -d_1) applied to the pushforward
scalar.  det g = 1 is never assumed: all measures carry sqrt(det g), which
makes every identity here exact for arbitrary smooth test maps.

Tensor components are stored covariant, in Cartesian label indices, shaped
(2,)*rank + grid.shape; a covariant derivative prepends the new index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SLOT_LETTERS = "defghijklm"


@dataclass
class TensorField:
    """Covariant tensor field on one of the computational domains."""

    comp: np.ndarray
    rank: int
    domain: str  # "plasma" | "vacuum" | "interface" | "wall"

    def __post_init__(self):
        expected = self.comp.ndim - (1 if self.domain in ("interface", "wall") else 2)
        if expected != self.rank:
            raise ValueError(f"component array has {expected} index axes, rank says {self.rank}")


class Domain:
    """Chart + flow map + metric with covariant calculus.

    ``set_map`` recomputes the Jacobian and metric; Christoffel symbols are
    built lazily since purely algebraic operations do not need them.
    """

    def __init__(self, chart, xmap=None, tag="plasma"):
        self.chart = chart
        self.tag = tag
        self.set_map(chart.y.copy() if xmap is None else xmap)

    def set_map(self, xmap):
        xmap = np.asarray(xmap, dtype=float)
        if xmap.shape != (2,) + self.chart.shape:
            raise ValueError("flow map must have shape (2, n_s, n_phi)")
        self.x = xmap
        # J[i, a] = d x^i / d y^a
        self.J = np.empty((2, 2) + self.chart.shape)
        self.J[0] = self.chart.partial(xmap[0])
        self.J[1] = self.chart.partial(xmap[1])
        self.detJ = self.J[0, 0] * self.J[1, 1] - self.J[0, 1] * self.J[1, 0]
        self.Jinv = np.empty_like(self.J)  # Jinv[a, i] = d y^a / d x^i
        self.Jinv[0, 0] = self.J[1, 1] / self.detJ
        self.Jinv[0, 1] = -self.J[0, 1] / self.detJ
        self.Jinv[1, 0] = -self.J[1, 0] / self.detJ
        self.Jinv[1, 1] = self.J[0, 0] / self.detJ
        self.g = np.einsum("ia...,ib...->ab...", self.J, self.J)
        self.detg = self.g[0, 0] * self.g[1, 1] - self.g[0, 1] * self.g[1, 0]
        self.sqrtg = np.sqrt(self.detg)
        self.ginv = np.empty_like(self.g)
        self.ginv[0, 0] = self.g[1, 1] / self.detg
        self.ginv[0, 1] = -self.g[0, 1] / self.detg
        self.ginv[1, 0] = -self.g[1, 0] / self.detg
        self.ginv[1, 1] = self.g[0, 0] / self.detg
        self._Gamma = None

    @property
    def Gamma(self):
        """Christoffel symbols Gamma^c_ab of the pulled-back metric."""
        if self._Gamma is None:
            H = np.empty((2, 2, 2) + self.chart.shape)  # H[i, a, b] = d_a d_b x^i
            for i in range(2):
                Hi = np.empty((2, 2) + self.chart.shape)
                Hi[0] = self.chart.partial(self.J[i, 0])
                Hi[1] = self.chart.partial(self.J[i, 1])
                H[i] = 0.5 * (Hi + np.swapaxes(Hi, 0, 1))
            self._Gamma = np.einsum("ci...,iab...->cab...", self.Jinv, H)
        return self._Gamma

    # -- differential operators -------------------------------------------

    def partial_tensor(self, T):
        """Coordinate derivative d_a T, prepended index."""
        T = np.asarray(T)
        flat = T.reshape((-1,) + self.chart.shape)
        dflat = np.empty((2,) + flat.shape)
        for k in range(flat.shape[0]):
            dflat[:, k] = self.chart.partial(flat[k])
        return dflat.reshape((2,) + T.shape)

    def cov_deriv(self, T, rank=None):
        """Covariant derivative of a covariant tensor; new index is axis 0."""
        T = np.asarray(T)
        if rank is None:
            rank = T.ndim - 2
        out = self.partial_tensor(T)
        if rank == 0:
            return out
        G = self.Gamma
        idx = _SLOT_LETTERS[:rank]
        for slot in range(rank):
            src = idx[:slot] + "c" + idx[slot + 1:]
            out -= np.einsum(f"ca{idx[slot]}...,{src}...->a{idx}...", G, T)
        return out

    def raise_index(self, T, slot=0):
        T = np.asarray(T)
        return np.moveaxis(
            np.einsum("ab...,b...->a...", self.ginv, np.moveaxis(T, slot, 0)), 0, slot
        )

    def lower_index(self, T, slot=0):
        T = np.asarray(T)
        return np.moveaxis(
            np.einsum("ab...,b...->a...", self.g, np.moveaxis(T, slot, 0)), 0, slot
        )

    def inner(self, T, S, rank=None):
        """Pointwise full metric contraction <T, S>_g of covariant tensors."""
        T = np.asarray(T)
        S = np.asarray(S)
        if rank is None:
            rank = T.ndim - 2
        R = S
        for slot in range(rank):
            R = self.raise_index(R, slot)
        axes = tuple(range(rank))
        return np.einsum(T, list(range(T.ndim)), R, list(range(T.ndim)),
                         list(range(rank, T.ndim)))

    def norm2(self, T, rank=None):
        return self.inner(T, T, rank)

    def divergence(self, w):
        """div_g w for a covariant vector field w_a."""
        dw = self.cov_deriv(w, 1)
        return np.einsum("ab...,ab...->...", self.ginv, dw)

    def curl(self, w):
        """Scalar curl (1/sqrt g)(d_1 w_2 - d_2 w_1) of a covariant field."""
        dw = self.partial_tensor(w)
        return (dw[0, 1] - dw[1, 0]) / self.sqrtg

    def perp_grad(self, f, covariant=True):
        """Perp gradient of a scalar; covariant components by default."""
        df = self.chart.partial(f) if f.ndim == 2 else self.partial_tensor(f)
        Wup = np.stack([df[1], -df[0]]) / self.sqrtg
        if not covariant:
            return Wup
        return np.einsum("ab...,b...->a...", self.g, Wup)

    def laplace_beltrami(self, f):
        df = self.chart.partial(f)
        flux = np.einsum("ab...,b...->a...", self.ginv, df) * self.sqrtg
        return (self.chart.partial(flux[0])[0] + self.chart.partial(flux[1])[1]) / self.sqrtg

    # -- integration and traces --------------------------------------------

    def quad(self, f):
        """Integral against the Riemannian measure d mu_g."""
        return self.chart.quad_flat(f * self.sqrtg)

    def volume(self):
        return self.quad(np.ones(self.chart.shape))

    def row(self, T, row):
        """Boundary-row trace of a grid or tensor array."""
        return np.asarray(T)[..., row, :]

    # -- Eulerian conversions ----------------------------------------------

    def eulerian_grad(self, f):
        """d f / d x^i as a (2, grid) array."""
        df = self.chart.partial(f)
        return np.einsum("ai...,a...->i...", self.Jinv, df)

    def pushforward_covector(self, u):
        """Covariant label components u_a -> Eulerian components v_i."""
        return np.einsum("ai...,a...->i...", self.Jinv, u)

    def pullback_covector(self, v):
        """Eulerian components v_i -> covariant label components u_a."""
        return np.einsum("ia...,i...->a...", self.J, v)


@dataclass
class BoundaryFrame:
    """Lagrangian boundary frame on one boundary row of a domain.

    The conormal follows the source convention: outward from the plasma on
    the interface, pointing *into* the vacuum on the wall (``flipped``).
    All index placements are with respect to the domain metric at the row.
    """

    row: int
    N_lower: np.ndarray   # (2, n) unit conormal N_a = n_i J^i_a
    N_upper: np.ndarray   # (2, n) N^a = g^{ab} N_b
    T_lower: np.ndarray   # (2, n) unit tangent covector
    T_upper: np.ndarray
    gamma_lower: np.ndarray  # (2, 2, n) induced metric g - N x N
    gamma_mixed: np.ndarray  # (2, 2, n) projector gamma^a_b = delta - N^a N_b
    theta: np.ndarray     # (2, 2, n) second fundamental form kappa T x T
    kappa: np.ndarray     # (n,) scalar curvature of the physical curve
    arc_weights: np.ndarray  # (n,) boundary measure d mu_gamma
    flipped: bool


def boundary_frame(domain, row, geom, flip_normal=False):
    """Pull the Euclidean frame of the physical boundary curve back to labels.

    ``geom`` is the CurveGeometry of the physical curve traced by the map at
    ``row``.  The pullback of a Euclidean-unit (co)vector through a volume
    preserving-or-not map is metrically unit automatically, since
    g^{ab} (n_i J^i_a)(n_j J^j_b) = |n|^2.
    """
    J = domain.row(domain.J, row)          # (2i, 2a, n)
    g = domain.row(domain.g, row)
    ginv = domain.row(domain.ginv, row)
    n_euc = geom.normal.T
    t_euc = geom.tangent.T
    if flip_normal:
        n_euc = -n_euc
    N_lo = np.einsum("ia...,i...->a...", J, n_euc)
    T_lo = np.einsum("ia...,i...->a...", J, t_euc)
    N_up = np.einsum("ab...,b...->a...", ginv, N_lo)
    T_up = np.einsum("ab...,b...->a...", ginv, T_lo)
    gamma_lo = g - N_lo[:, None] * N_lo[None, :]
    gamma_mx = np.eye(2)[:, :, None] - N_up[:, None] * N_lo[None, :]
    kappa = geom.kappa if not flip_normal else -geom.kappa
    theta = kappa * T_lo[:, None] * T_lo[None, :]
    return BoundaryFrame(row, N_lo, N_up, T_lo, T_up, gamma_lo, gamma_mx,
                         theta, kappa, geom.arc_weights, flip_normal)


def project_tangential(frame, T, rank=None):
    """Project every covariant index of a boundary tensor tangentially.

    For a covariant slot the projector acts as w_a -> gamma^b_a w_b, i.e.
    with the transpose of the mixed projector gamma^a_b.
    """
    T = np.asarray(T)
    if rank is None:
        rank = T.ndim - 1
    out = T
    for slot in range(rank):
        out = np.moveaxis(
            np.einsum("ba...,b...->a...", frame.gamma_mixed, np.moveaxis(out, slot, 0)),
            0, slot,
        )
    return out
