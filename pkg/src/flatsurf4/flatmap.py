"""Flat maps F: rectangle -> S^3 with polar map F-hat and Tschebysheff angle.

A flat map satisfies, in the coordinates (u, v),

    <dF,dF>   = du^2 + 2 cos(w) du dv + dv^2,      <F, Fh> = 0,
    <dF,dFh>  = 2 sin(w) du dv,                    <dF, Fh> = <F, dFh> = 0,
    <dFh,dFh> = du^2 - 2 cos(w) du dv + dv^2,      w_uv = 0,

with w(u,v) = w1(u) + w2(v) separable.  Every constructor here produces
maps of the product form F = L(u) * R(v), Fh = L(u) * xi0 * R(v), which
carries exact analytic derivatives; verification always re-derives the
relations by central differences instead.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import _fd as fd
from .curve import CurvatureProfile, S3Curve, asymptotic_lift, profile_as_callable
from .errors import PreconditionViolated
from .quat import QI, QJ, QONE, qconj, qinv, qmul, qnorm

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# separable angle functions


@dataclass
class AngleFunction:
    """Separable angle w(u,v) = w1(u) + w2(v) with analytic u/v derivatives."""

    f1: Callable
    df1: Callable
    f2: Callable
    df2: Callable
    kind: str = "generic"

    def omega(self, u, v):
        return np.asarray(self.f1(u)) + np.asarray(self.f2(v))

    def grid(self, u_nodes, v_nodes):
        return np.asarray(self.f1(u_nodes))[:, None] + np.asarray(self.f2(v_nodes))[None, :]

    def omega_u(self, u):
        return np.asarray(self.df1(u))

    def omega_v(self, v):
        return np.asarray(self.df2(v))

    def shifted(self, delta):
        f1, df1 = self.f1, self.df1
        return AngleFunction(lambda u: np.asarray(f1(u)) + delta, df1,
                             self.f2, self.df2, kind=self.kind)


def constant_angle(w0):
    z = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return AngleFunction(lambda u: np.full_like(np.asarray(u, dtype=float), w0),
                         z, z, z, kind="constant")


def linear_angle(cu, cv, c0=0.0):
    return AngleFunction(
        lambda u: cu * np.asarray(u, dtype=float) + c0,
        lambda u: np.full_like(np.asarray(u, dtype=float), cu),
        lambda v: cv * np.asarray(v, dtype=float),
        lambda v: np.full_like(np.asarray(v, dtype=float), cv),
        kind="linear")


def profile_angle(k):
    """Hopf-surface angle w(u) = arccot(k(u)), branch (0, pi)."""
    kfun, kder = profile_as_callable(k)

    def f1(u):
        return 0.5 * math.pi - np.arctan(kfun(u))

    def df1(u):
        kv = np.asarray(kfun(u), dtype=float)
        if kder is None:
            raise ValueError("profile lacks a derivative")
        return -np.asarray(kder(u), dtype=float) / (1.0 + kv * kv)

    z = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return AngleFunction(f1, df1, z, z, kind="profile")


def sampled_angle(u_nodes, w1_samples, v_nodes, w2_samples):
    """Angle interpolated from exact samples along the two axes."""
    if len(u_nodes) >= 2:
        s1 = CubicSpline(u_nodes, w1_samples)
        ds1 = s1.derivative()
    else:
        c = float(w1_samples[0])
        s1 = lambda u: np.full_like(np.asarray(u, dtype=float), c)
        ds1 = lambda u: np.zeros_like(np.asarray(u, dtype=float))
    if len(v_nodes) >= 2:
        s2 = CubicSpline(v_nodes, w2_samples)
        ds2 = s2.derivative()
    else:
        c2 = float(w2_samples[0])
        s2 = lambda v: np.full_like(np.asarray(v, dtype=float), c2)
        ds2 = lambda v: np.zeros_like(np.asarray(v, dtype=float))
    return AngleFunction(s1, ds1, s2, ds2, kind="sampled")


# ---------------------------------------------------------------------------
# the sampled flat map


@dataclass
class FlatMapGrid:
    """Flat map sampled on a uniform rectangle [u0, u0+(Nu-1)hu] x [v0, ...].

    F and Fhat have shape (Nu, Nv, 4).  When the map was built as a
    quaternion product L(u) * R(v) the factor curves (with their
    derivatives) are kept, giving analytic grid derivatives; grids read
    back from CSV only have finite differences.
    """

    u0: float
    v0: float
    hu: float
    hv: float
    F: np.ndarray
    Fhat: np.ndarray
    omega_grid: np.ndarray
    omega_fn: Optional[AngleFunction] = None
    lattice: Optional[tuple] = None
    # product-form factors: F = L R, Fhat = L xi0 R
    left: Optional[np.ndarray] = None      # (Nu, 4)
    left_d: Optional[np.ndarray] = None
    left_dd: Optional[np.ndarray] = None
    right: Optional[np.ndarray] = None     # (Nv, 4)
    right_d: Optional[np.ndarray] = None
    xi0: Optional[np.ndarray] = None

    @property
    def h(self):
        return self.hu

    @property
    def nu(self):
        return self.F.shape[0]

    @property
    def nv(self):
        return self.F.shape[1]

    @property
    def u_nodes(self):
        return self.u0 + self.hu * np.arange(self.nu)

    @property
    def v_nodes(self):
        return self.v0 + self.hv * np.arange(self.nv)

    @property
    def has_factors(self):
        return self.left is not None and self.right is not None

    def _outer(self, a, b):
        return qmul(a[:, None, :], b[None, :, :])

    def derivatives(self):
        """(F_u, F_v, Fh_u, Fh_v): analytic for product-form maps, else FD."""
        if self.has_factors:
            lx = qmul(self.left, self.xi0)
            ldx = qmul(self.left_d, self.xi0)
            return (self._outer(self.left_d, self.right),
                    self._outer(self.left, self.right_d),
                    self._outer(ldx, self.right),
                    self._outer(lx, self.right_d))
        return (fd.d1(self.F, self.hu, axis=0), fd.d1(self.F, self.hv, axis=1),
                fd.d1(self.Fhat, self.hu, axis=0), fd.d1(self.Fhat, self.hv, axis=1))

    def second_u_derivatives(self):
        """(F_uu, Fh_uu) for the representation formula."""
        if self.has_factors and self.left_dd is not None:
            lddx = qmul(self.left_dd, self.xi0)
            return (self._outer(self.left_dd, self.right),
                    self._outer(lddx, self.right))
        return (fd.d2(self.F, self.hu, axis=0), fd.d2(self.Fhat, self.hu, axis=0))

    def omega_u_grid(self):
        if self.omega_fn is not None:
            return np.broadcast_to(
                self.omega_fn.omega_u(self.u_nodes)[:, None],
                self.omega_grid.shape).copy()
        return fd.d1(self.omega_grid, self.hu, axis=0)

    def same_geometry(self, other):
        return (self.F.shape == other.F.shape
                and abs(self.u0 - other.u0) < 1e-12 and abs(self.v0 - other.v0) < 1e-12
                and abs(self.hu - other.hu) < 1e-12 and abs(self.hv - other.hv) < 1e-12)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


# ---------------------------------------------------------------------------
# constructors


def _check_side_conditions(a1, a2, xi0, tol):
    d1 = a1.deriv if a1.deriv is not None else np.gradient(a1.samples, a1.h, axis=0)
    d2 = a2.deriv if a2.deriv is not None else np.gradient(a2.samples, a2.h, axis=0)
    r_start = max(float(np.linalg.norm(a1.samples[0] - QONE)),
                  float(np.linalg.norm(a2.samples[0] - QONE)))
    if r_start > tol:
        raise PreconditionViolated(
            f"product curves must start at 1 (residual {r_start:.3e})", r_start)
    if abs(qnorm(xi0) - 1.0) > 1e-9 or abs(xi0[0]) > 1e-9:
        raise PreconditionViolated("xi0 must be a unit pure quaternion")
    r_orth = max(abs(float(np.dot(xi0, d1[0]))), abs(float(np.dot(xi0, d2[0]))))
    if r_orth > tol:
        raise PreconditionViolated(
            f"xi0 must be orthogonal to both initial tangents (residual {r_orth:.3e})",
            r_orth)
    s1 = float(np.max(np.abs(_dot(d1, qmul(a1.samples, xi0)))))
    s2 = float(np.max(np.abs(_dot(d2, qmul(xi0, a2.samples)))))
    if max(s1, s2) > tol:
        raise PreconditionViolated(
            f"asymptotic side conditions fail: <a1',a1 xi0> max {s1:.3e}, "
            f"<a2',xi0 a2> max {s2:.3e}", max(s1, s2))
    return d1, d2


def bianchi_spivak_product(a1: S3Curve, a2: S3Curve, xi0=QJ, tol=1e-6,
                           lattice=None):
    """Flat map F = a1(u) a2(v), Fhat = a1(u) xi0 a2(v).

    Requires unit-speed curves through 1 whose side conditions
    <a1', a1 xi0> = 0 = <a2', xi0 a2> hold within tol.  The angle is
    recovered pointwise from cos(w) = <F_u, F_v>, sin(w) = <F_u, Fh_v>,
    unwrapped along the axes and stored as a separable AngleFunction.
    """
    xi0 = np.asarray(xi0, dtype=float)
    d1, d2 = _check_side_conditions(a1, a2, xi0, tol)

    L, R = a1.samples, a2.samples
    F = qmul(L[:, None, :], R[None, :, :])
    Lx = qmul(L, xi0)
    Fhat = qmul(Lx[:, None, :], R[None, :, :])

    # angle from the analytic derivatives (exact at the nodes)
    Fu = qmul(d1[:, None, :], R[None, :, :])
    Fv = qmul(L[:, None, :], d2[None, :, :])
    Fhv = qmul(Lx[:, None, :], d2[None, :, :])
    theta = np.arctan2(_dot(Fu, Fhv), _dot(Fu, Fv))
    w1 = np.unwrap(theta[:, 0])
    w2 = np.unwrap(theta[0, :]) - theta[0, 0]
    omega_fn = sampled_angle(a1.u_grid, w1, a2.u_grid, w2)
    omega_grid = w1[:, None] + w2[None, :]
    sep = max(float(np.max(np.abs(np.cos(omega_grid) - np.cos(theta)))),
              float(np.max(np.abs(np.sin(omega_grid) - np.sin(theta)))))
    if sep > 1e-5:
        raise PreconditionViolated(
            f"recovered angle is not separable (residual {sep:.3e})", sep)

    return FlatMapGrid(a1.u0, a2.u0, a1.h, a2.h, F, Fhat, omega_grid, omega_fn,
                       lattice=lattice,
                       left=L, left_d=d1,
                       left_dd=a1.deriv2, right=R, right_d=d2, xi0=xi0)


def hopf_flat_map(k, U, h=1e-2, a0=QONE, v_range=(0.0, TWO_PI), hv=None,
                  sign=1, ode_step=1e-3, require_period_multiple=True):
    """Flat map of the Hopf surface over the curve with curvature profile k.

    F(u,v) = a(u) e^{iv} with a the asymptotic lift of k.  The polar map is
    a(u) xi e^{iv} with xi = -j, the sign that puts the angle
    w(u) = arccot(k(u)) in the branch (0, pi); V-period is 2 pi.
    """
    T = getattr(k, "base_period", None)
    if require_period_multiple and T is not None:
        m = U / T
        if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)):
            raise ValueError(f"U = {U:g} must be a multiple of the base period {T:g}")

    nu_cells = max(1, int(round(U / h)))
    h = U / nu_cells
    sub = max(1, int(math.ceil(h / ode_step - 1e-12)))
    lift = asymptotic_lift(k, (0.0, U), h / sub, a0=a0, sign=sign)
    L = lift.samples[::sub]
    Ld = lift.deriv[::sub]
    Ldd = None if lift.deriv2 is None else lift.deriv2[::sub]

    v0, v1 = v_range
    hv = h if hv is None else hv
    nv = max(1, int(round((v1 - v0) / hv)))
    hv = (v1 - v0) / nv
    v = v0 + hv * np.arange(nv + 1)
    R = np.zeros((nv + 1, 4))
    R[:, 0] = np.cos(v)
    R[:, 1] = np.sin(v)
    Rd = np.zeros((nv + 1, 4))
    Rd[:, 0] = -np.sin(v)
    Rd[:, 1] = np.cos(v)

    xi = np.array([0.0, 0.0, -1.0, 0.0])  # polar sign keeps w in (0, pi)
    F = qmul(L[:, None, :], R[None, :, :])
    Lx = qmul(L, xi)
    Fhat = qmul(Lx[:, None, :], R[None, :, :])

    omega_fn = profile_angle(k)
    omega_grid = np.broadcast_to(
        np.asarray(omega_fn.f1(h * np.arange(L.shape[0])))[:, None],
        F.shape[:2]).copy()

    lattice = None
    closure = max(float(np.linalg.norm(L[-1] - L[0])),
                  float(np.linalg.norm(Ld[-1] - Ld[0])))
    if closure < 1e-6 and abs((v1 - v0) - TWO_PI) < 1e-12:
        lattice = (U, TWO_PI)

    return FlatMapGrid(0.0, v0, h, hv, F, Fhat, omega_grid, omega_fn,
                       lattice=lattice,
                       left=L, left_d=Ld, left_dd=Ldd, right=R, right_d=Rd,
                       xi0=xi)


def clifford_flat_map(h=1e-2, u_range=(0.0, TWO_PI), v_range=(0.0, TWO_PI)):
    """The standard-pose Clifford torus as a Hopf flat map (k = 0, w = pi/2).

    The lift starts at (1+i+j+k)/2 so that the image is the torus
    |z1| = |z2| = 1/sqrt(2), z1 = x1 + i x2, z2 = x3 + i x4.
    """
    k = CurvatureProfile(math.pi, 0.0)
    a0 = 0.5 * np.array([1.0, 1.0, 1.0, 1.0])
    U = u_range[1] - u_range[0]
    return hopf_flat_map(k, U, h=h, a0=a0, v_range=v_range)


def helix_product_map(r, u_range=(0.0, 1.0), v_range=(0.0, 1.0), h=1e-2):
    """Bianchi product of two helices with torsions +1/-1 and equal curvature.

    The resulting angle is w(u,v) = 2 mu (u+v) with mu = (r^2-1)/(2r).
    xi0 = i: both helix body velocities stay on the j-k great circle.
    """
    from .curve import helix
    mu = (r * r - 1.0) / (2.0 * r)
    a1 = helix(r, +1, (0.0, u_range[1] - u_range[0]), h)
    a1 = a1.left_translate(qinv(a1.samples[0]))
    a2 = helix(r, -1, (0.0, v_range[1] - v_range[0]), h)
    a2 = a2.right_translate(qinv(a2.samples[0]))
    g = bianchi_spivak_product(a1, a2, xi0=QI)
    return g, mu


# ---------------------------------------------------------------------------
# verification


@dataclass
class FlatMapReport:
    residuals: dict
    gauss_metric: float

    @property
    def max_flatmap_residual(self):
        return max(self.residuals.values())

    def as_dict(self):
        out = dict(self.residuals)
        out["gauss_metric"] = self.gauss_metric
        out["flatmap_max"] = self.max_flatmap_residual
        return out


def verify_flat_map(g: FlatMapGrid) -> FlatMapReport:
    """Max-norm residuals of the flat-map relations under central differences.

    Boundary nodes (two per side, where the 4th-order stencil degrades)
    are excluded from the maxima.  Also reports the Gauss-map metric
    defect |<dF,dF> + <dFh,dFh> - 2(du^2+dv^2)|.
    """
    if g.nu < 3 or g.nv < 3:
        raise ValueError("grid needs at least 3 nodes per direction")
    F, Fh, w = g.F, g.Fhat, g.omega_grid
    Fu = fd.d1(F, g.hu, axis=0)
    Fv = fd.d1(F, g.hv, axis=1)
    Fhu = fd.d1(Fh, g.hu, axis=0)
    Fhv = fd.d1(Fh, g.hv, axis=1)
    cw, sw = np.cos(w), np.sin(w)

    trim = fd.max_interior
    res = {
        "unit_F": trim(qnorm(F) - 1.0),
        "unit_Fhat": trim(qnorm(Fh) - 1.0),
        "first_uu": trim(_dot(Fu, Fu) - 1.0),
        "first_vv": trim(_dot(Fv, Fv) - 1.0),
        "first_uv_cos": trim(_dot(Fu, Fv) - cw),
        "orth_F_Fhat": trim(_dot(F, Fh)),
        "mixed_uv_sin": trim(_dot(Fu, Fhv) - sw),
        "mixed_vu_sin": trim(_dot(Fv, Fhu) - sw),
        "mixed_uu": trim(_dot(Fu, Fhu)),
        "mixed_vv": trim(_dot(Fv, Fhv)),
        "tangency_dF_Fhat": max(trim(_dot(Fu, Fh)), trim(_dot(Fv, Fh))),
        "tangency_F_dFhat": max(trim(_dot(F, Fhu)), trim(_dot(F, Fhv))),
        "polar_uu": trim(_dot(Fhu, Fhu) - 1.0),
        "polar_vv": trim(_dot(Fhv, Fhv) - 1.0),
        "polar_uv_cos": trim(_dot(Fhu, Fhv) + cw),
    }
    if g.nu >= 5 and g.nv >= 5:
        res["omega_uv"] = trim(fd.d1(fd.d1(w, g.hu, axis=0), g.hv, axis=1))
    gauss = max(
        trim(_dot(Fu, Fu) + _dot(Fhu, Fhu) - 2.0),
        trim(_dot(Fv, Fv) + _dot(Fhv, Fhv) - 2.0),
        trim(_dot(Fu, Fv) + _dot(Fhu, Fhv)),
    )
    return FlatMapReport(res, gauss)


def polar_dual(g: FlatMapGrid) -> FlatMapGrid:
    """The polar flat map (F, Fh) -> (Fh, -F) with angle w + pi."""
    omega_fn = g.omega_fn.shifted(math.pi) if g.omega_fn is not None else None
    lx = ld = ldd = None
    if g.has_factors:
        lx = qmul(g.left, g.xi0)
        ld = qmul(g.left_d, g.xi0)
        ldd = None if g.left_dd is None else qmul(g.left_dd, g.xi0)
    return FlatMapGrid(g.u0, g.v0, g.hu, g.hv, g.Fhat.copy(), -g.F,
                       g.omega_grid + math.pi, omega_fn, lattice=g.lattice,
                       left=lx, left_d=ld, left_dd=ldd,
                       right=None if g.right is None else g.right.copy(),
                       right_d=None if g.right_d is None else g.right_d.copy(),
                       xi0=None if g.xi0 is None else g.xi0.copy())


def normal_shape_check(g: FlatMapGrid, min_sin=0.1):
    """Product of the polar-map eigenvalue ratios; equals -1 on flat maps.

    Writes (Fh_u, Fh_v) in the tangent basis (F_u, F_v) and returns the
    max deviation |det M + 1| over interior nodes where |sin w| >= min_sin.
    """
    Fu, Fv, Fhu, Fhv = g.derivatives()
    E = _dot(Fu, Fu)
    Fm = _dot(Fu, Fv)
    G = _dot(Fv, Fv)
    det_gram = E * G - Fm * Fm
    # components of Fh_u, Fh_v against the Gram matrix of (F_u, F_v)
    b1u, b2u = _dot(Fhu, Fu), _dot(Fhu, Fv)
    b1v, b2v = _dot(Fhv, Fu), _dot(Fhv, Fv)
    m11 = (G * b1u - Fm * b2u)
    m21 = (E * b2u - Fm * b1u)
    m12 = (G * b1v - Fm * b2v)
    m22 = (E * b2v - Fm * b1v)
    with np.errstate(invalid="ignore", divide="ignore"):
        detM = (m11 * m22 - m12 * m21) / det_gram ** 2
    mask = np.abs(np.sin(g.omega_grid)) >= min_sin
    mask = fd.interior(mask)
    vals = fd.interior(detM)[mask]
    if vals.size == 0:
        raise ValueError("no interior nodes with sin w bounded away from 0")
    return float(np.max(np.abs(vals + 1.0)))


# ---------------------------------------------------------------------------
# CSV serialization (17 significant digits, bit-exact round trip)


FLATMAP_HEADER = "u,v,F1,F2,F3,F4,Fh1,Fh2,Fh3,Fh4,omega"


def write_flatmap_csv(g: FlatMapGrid, path):
    u = g.u_nodes
    v = g.v_nodes
    with open(path, "w") as fh:
        fh.write(FLATMAP_HEADER + "\n")
        for i in range(g.nu):
            for j in range(g.nv):
                row = [u[i], v[j], *g.F[i, j], *g.Fhat[i, j], g.omega_grid[i, j]]
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _infer_axis(values, name):
    nodes = np.unique(values)
    if len(nodes) > 1:
        steps = np.diff(nodes)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
            raise ValueError(f"non-uniform {name} grid in CSV")
        h = float(steps[0])
    else:
        h = 1.0
    return nodes, h


def read_flatmap_csv(path) -> FlatMapGrid:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    u_nodes, hu = _infer_axis(data[:, 0], "u")
    v_nodes, hv = _infer_axis(data[:, 1], "v")
    nu, nv = len(u_nodes), len(v_nodes)
    if nu * nv != data.shape[0]:
        raise ValueError("CSV rows do not fill a full rectangle")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order]
    F = data[:, 2:6].reshape(nu, nv, 4)
    Fhat = data[:, 6:10].reshape(nu, nv, 4)
    omega = data[:, 10].reshape(nu, nv)
    return FlatMapGrid(float(u_nodes[0]), float(v_nodes[0]), hu, hv,
                       F, Fhat, omega)
