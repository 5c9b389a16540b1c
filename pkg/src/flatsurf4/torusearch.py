"""Holonomy of stretched curvature profiles, rational-angle search, and
assembly of perturbed Hopf tori and complete flat cylinders.

For a T-periodic profile k the curve in S^2 with geodesic curvature k(u)
(u = lift arclength) advances per period by a rigid rotation; the curve
closes after m periods iff that rotation has finite order dividing m.  The
map a_n sends k to theta/pi of the rotation of the n-stretched profile
k(u/n); the stretched curve closes (and its Hopf surface is a torus)
exactly when a_n is rational.  Tuning a one-parameter profile family onto
a rational value and pulling the stretched geometric solutions back at
n-fold speed produces flat tori in R^4 that sit on no affine 3-sphere.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import _fd as fd
from .curve import CurvatureProfile, asymptotic_lift, profile_as_callable
from .errors import (ClosureFailure, IntegrationFailure, NoSignChange,
                     SingularAfterRescale)
from .flatmap import FlatMapGrid, hopf_flat_map, verify_flat_map
from .hypsys import GridSpec, stretched_solution, system_residual
from .immersion import (ImmersionGrid, assemble, auto_lambda, derived_solution,
                        flatness_check, lambda_rescale, metric_identity_check,
                        sphere_fit, tangency_check)
from .quat import qmul

TWO_PI = 2.0 * math.pi
Q_MAX = 64
RATIONAL_WINDOW = 1e-8


# ---------------------------------------------------------------------------
# frame transport along curves of prescribed curvature


def _frame_after(kfun, length, h):
    """Transport the frame (c, t, c x t) from the identity frame.

    Integrates dc/du = v t, dt/du = v(-c + k c x t), v = 2/sqrt(1+k^2),
    starting from c = e1, t = e2; returns (c, t) at u = length.
    """
    steps = max(1, int(round(length / h)))
    hs = length / steps
    nodes = hs * np.arange(steps + 1)
    k_full = np.asarray(kfun(nodes), dtype=float)
    k_half = np.asarray(kfun(nodes[:-1] + 0.5 * hs), dtype=float)
    v_full = 2.0 / np.sqrt(1.0 + k_full * k_full)
    v_half = 2.0 / np.sqrt(1.0 + k_half * k_half)

    cx, cy, cz = 1.0, 0.0, 0.0
    tx, ty, tz = 0.0, 1.0, 0.0
    h6 = hs / 6.0
    h2 = hs / 2.0

    def rhs(cx, cy, cz, tx, ty, tz, k, v):
        nx = cy * tz - cz * ty
        ny = cz * tx - cx * tz
        nz = cx * ty - cy * tx
        return (v * tx, v * ty, v * tz,
                v * (-cx + k * nx), v * (-cy + k * ny), v * (-cz + k * nz))

    for j in range(steps):
        k1 = rhs(cx, cy, cz, tx, ty, tz, k_full[j], v_full[j])
        k2 = rhs(cx + h2 * k1[0], cy + h2 * k1[1], cz + h2 * k1[2],
                 tx + h2 * k1[3], ty + h2 * k1[4], tz + h2 * k1[5],
                 k_half[j], v_half[j])
        k3 = rhs(cx + h2 * k2[0], cy + h2 * k2[1], cz + h2 * k2[2],
                 tx + h2 * k2[3], ty + h2 * k2[4], tz + h2 * k2[5],
                 k_half[j], v_half[j])
        k4 = rhs(cx + hs * k3[0], cy + hs * k3[1], cz + hs * k3[2],
                 tx + hs * k3[3], ty + hs * k3[4], tz + hs * k3[5],
                 k_full[j + 1], v_full[j + 1])
        cx += h6 * (k1[0] + 2 * (k2[0] + k3[0]) + k4[0])
        cy += h6 * (k1[1] + 2 * (k2[1] + k3[1]) + k4[1])
        cz += h6 * (k1[2] + 2 * (k2[2] + k3[2]) + k4[2])
        tx += h6 * (k1[3] + 2 * (k2[3] + k3[3]) + k4[3])
        ty += h6 * (k1[4] + 2 * (k2[4] + k3[4]) + k4[4])
        tz += h6 * (k1[5] + 2 * (k2[5] + k3[5]) + k4[5])
        # re-orthonormalize the frame
        n = math.sqrt(cx * cx + cy * cy + cz * cz)
        cx, cy, cz = cx / n, cy / n, cz / n
        d = tx * cx + ty * cy + tz * cz
        tx, ty, tz = tx - d * cx, ty - d * cy, tz - d * cz
        n = math.sqrt(tx * tx + ty * ty + tz * tz)
        tx, ty, tz = tx / n, ty / n, tz / n

    if not all(map(math.isfinite, (cx, cy, cz, tx, ty, tz))):
        raise IntegrationFailure("frame transport produced non-finite values")
    c = np.array([cx, cy, cz])
    t = np.array([tx, ty, tz])
    return c, t


def rationalize(x, q_max=Q_MAX, tol=RATIONAL_WINDOW):
    """Best rational p/q with q <= q_max within tol of x, via convergents."""
    frac = Fraction(x).limit_denominator(q_max)
    if abs(x - float(frac)) <= tol:
        return frac.numerator, frac.denominator
    return None


# ---------------------------------------------------------------------------
# holonomy of one curvature period


@dataclass(frozen=True)
class HolonomyResult:
    rotation: np.ndarray          # (3,3) in SO(3)
    theta: float                  # signed angle in (-pi, pi]
    axis: np.ndarray              # (3,) unit; axis . e3 >= 0
    theta_over_pi: float
    rational: Optional[tuple]     # (p, q) when theta/pi is near-rational

    @property
    def so3_deviation(self):
        R = self.rotation
        return float(max(np.max(np.abs(R.T @ R - np.eye(3))),
                         abs(np.linalg.det(R) - 1.0)))


def holonomy(k, h=1e-3, q_max=Q_MAX, window=RATIONAL_WINDOW) -> HolonomyResult:
    """Rotation carrying the curve frame across one base period of k.

    The curve starts at the identity frame (e1, e2, e3), so the rotation
    is the end frame itself.  The angle sign follows the convention
    axis . (c(0) x t(0)) >= 0.
    """
    kfun, _ = profile_as_callable(k)
    T = k.base_period
    c1, t1 = _frame_after(kfun, T, h)
    R = np.stack([c1, t1, np.cross(c1, t1)], axis=1)  # columns; M0 = I

    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    cos_theta = 0.5 * (np.trace(R) - 1.0)
    s = np.linalg.norm(w)
    if s > 1e-8:
        axis = w / s
    elif cos_theta > 0.0:          # rotation near the identity
        axis = np.array([0.0, 0.0, 1.0])
    else:                          # angle near pi: axis from R + I = 2 n n^T
        sym = 0.5 * (R + np.eye(3))
        col = int(np.argmax(np.diag(sym)))
        axis = sym[:, col]
        axis = axis / np.linalg.norm(axis)
    if axis[2] < 0.0:
        axis = -axis
    theta = math.atan2(float(w @ axis), float(cos_theta))
    top = theta / math.pi
    return HolonomyResult(R, theta, axis, top, rationalize(top, q_max, window))


def stretch_profile(k, n):
    """Profile of the n-stretched curve: k~(u) = k(u/n), period n T."""
    return k.stretch(n)


def a_n(k, n, h=1e-3):
    """theta/pi for the n-stretched profile; rational iff the stretched
    curve (and hence its Hopf surface) closes up."""
    if n < 2:
        raise ValueError("a_n is defined for stretch factors n >= 2")
    return holonomy(stretch_profile(k, n), h=h).theta_over_pi


def holonomy_closure_residual(k, multiples=1, h=1e-3):
    """Frame gap after tracing the given number of base periods.

    This is the brute-force closure check: integrate straight through
    (no monodromy shortcut) and measure the endpoint frame mismatch.
    """
    kfun, _ = profile_as_callable(k)
    c1, t1 = _frame_after(kfun, multiples * k.base_period, h)
    return float(max(np.linalg.norm(c1 - np.array([1.0, 0.0, 0.0])),
                     np.linalg.norm(t1 - np.array([0.0, 1.0, 0.0]))))


def closure_multiple(p, q):
    """Smallest m with m*theta = 0 mod 2 pi for theta = p pi / q."""
    if p == 0:
        return 1
    return 2 * q // math.gcd(abs(p), 2 * q)


# ---------------------------------------------------------------------------
# rational-angle search over a profile family


@dataclass
class SearchOutcome:
    profile: CurvatureProfile
    n: int
    achieved: HolonomyResult
    target: tuple
    parameter: float
    closure_multiple: int = 1
    closure_residual: float = math.nan

    def to_json(self):
        return json.dumps({
            "profile": json.loads(self.profile.to_json()),
            "n": self.n,
            "theta_over_pi": self.achieved.theta_over_pi,
            "rational": list(self.target),
            "parameter": self.parameter,
        })


def single_harmonic_family(k0, T=math.pi):
    """The default search family k_eps(u) = k0 + eps cos(2 pi u / T)."""
    return lambda eps: CurvatureProfile(T, k0, (eps,))


def circle_outcome(k0, n=2, h=1e-3):
    """The exact eps = 0 member of the family as a degenerate SearchOutcome.

    The lift-monodromy phase is not differentiable in eps at 0 (it moves
    like |eps|), so a bisected near-zero root never closes as cleanly as
    the circle itself; control runs should start from this outcome.
    """
    profile = CurvatureProfile(math.pi, k0)
    ach = holonomy(stretch_profile(profile, n), h=h)
    residual = holonomy_closure_residual(stretch_profile(profile, n), 1, h=h)
    return SearchOutcome(profile, n, ach, (0, 1), 0.0, 1, residual)


def search_rational(family: Callable[[float], CurvatureProfile], n, target,
                    bracket, eps_tol=1e-10, scan_points=17, h=1e-3,
                    validate=True, closure_tol=1e-4) -> SearchOutcome:
    """Bisect the family parameter until a_n(k_eps) = p/q.

    If the bracket endpoints do not straddle the target, the bracket is
    scanned for a sign change first; a scan without one raises
    NoSignChange carrying the sampled (eps, a_n) values, which covers the
    possibility that a_n is constant on the family.
    """
    p, q = target
    t_val = p / q

    def g(eps):
        return a_n(family(eps), n, h=h) - t_val

    lo, hi = bracket
    scan = [(lo, g(lo) + t_val), (hi, g(hi) + t_val)]
    glo, ghi = scan[0][1] - t_val, scan[1][1] - t_val
    if glo == 0.0:
        lo = hi = scan[0][0]
    elif ghi == 0.0:
        lo = hi = scan[1][0]
    elif glo * ghi > 0.0:
        eps_grid = np.linspace(lo, hi, scan_points)
        vals = [g(e) for e in eps_grid]
        scan = [(float(e), v + t_val) for e, v in zip(eps_grid, vals)]
        idx = next((i for i in range(len(vals) - 1)
                    if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0.0), None)
        if idx is None:
            raise NoSignChange(
                f"a_{n} never crosses {p}/{q} = {t_val:g} on the bracket "
                f"[{bracket[0]:g}, {bracket[1]:g}]; scanned range "
                f"[{min(v for _, v in scan):.6g}, {max(v for _, v in scan):.6g}]",
                scan=scan)
        lo, hi = float(eps_grid[idx]), float(eps_grid[idx + 1])
        glo = vals[idx]

    while hi - lo > eps_tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            lo = hi = mid
            break
        if glo * gm < 0.0:
            hi = mid
        else:
            lo, glo = mid, gm
    eps_root = 0.5 * (lo + hi)
    profile = family(eps_root)
    ach = holonomy(stretch_profile(profile, n), h=h)

    m_star = closure_multiple(p, q)
    residual = math.nan
    if validate:
        residual = holonomy_closure_residual(stretch_profile(profile, n),
                                             multiples=m_star, h=h)
        if residual > closure_tol:
            raise ClosureFailure(
                f"stretched curve misses closure after {m_star} periods "
                f"(residual {residual:.3e})", best_residual=residual)
    return SearchOutcome(profile, n, ach, (p, q), eps_root, m_star, residual)


# ---------------------------------------------------------------------------
# lift monodromy (periods of the Hopf surface in the u direction)


def lift_monodromy(k, h=1e-3):
    """Quaternion Psi with a(u + T) = a(u) Psi for the asymptotic lift."""
    lift = asymptotic_lift(k, (0.0, k.base_period), h)
    return lift.samples[-1]


def lift_closure_multiple(k, m_max=Q_MAX, tol=1e-6, h=1e-3):
    """Smallest m <= m_max with Psi^m = 1, i.e. the lift closes over m T."""
    psi = lift_monodromy(k, h)
    acc = psi.copy()
    one = np.array([1.0, 0.0, 0.0, 0.0])
    best = math.inf
    for m in range(1, m_max + 1):
        gap = float(np.linalg.norm(acc - one))
        best = min(best, gap)
        if gap < tol:
            return m, gap
        acc = qmul(acc, psi)
    raise ClosureFailure(
        f"lift fails to close within {m_max} periods (best gap {best:.3e})",
        best_residual=best)


# ---------------------------------------------------------------------------
# torus and cylinder assembly


def _diagnostics(gmap: FlatMapGrid, im: ImmersionGrid, sol, lam):
    rep = {}
    rep["lambda"] = lam
    rep["margin_min"] = im.margin_min()
    rep["metric_min_eigenvalue"] = im.metric_min_eigenvalue()
    rep["gauss_K_max"] = flatness_check(im)
    fit = sphere_fit(im)
    rep["sphere_rms"] = fit.rms_residual
    rep["sphere_radius"] = fit.radius
    rep["max_radius"] = im.max_radius()
    ru, rv = tangency_check(im, gmap)
    rep["tangency_u"] = ru
    rep["tangency_v"] = rv
    rep["metric_identity"] = metric_identity_check(im)
    ra, rb = system_residual(derived_solution(im), gmap.omega_grid)
    rep["derived_system_residual"] = max(ra, rb)
    fm = verify_flat_map(gmap)
    rep["flatmap_max"] = fm.max_flatmap_residual
    rep["gauss_metric"] = fm.gauss_metric
    w = gmap.omega_grid
    rep["omega_range"] = float(np.max(w) - np.min(w))
    rep["sin_omega_min"] = float(np.min(np.sin(w)))
    return rep


def build_perturbed_torus(outcome: SearchOutcome, lam=None, nodes_per_period=96,
                          nv=192, m_max=Q_MAX, closure_tol=1e-4, a=(1, 0, 0, 0),
                          rho=0.0, ode_step=1e-3):
    """Assemble the flat torus of a validated search outcome.

    Finds a common u-period U = lcm(m1, m2) T of the Hopf surface (lift
    closure m1) and the pulled-back stretched solution (m2), builds the
    flat map on [0, U] x [0, 2 pi], rescales the stretched solution by
    lambda (auto-collapsed if not given) and assembles f with full
    diagnostics.  Double periodicity of f is enforced within closure_tol;
    flatness, sphere, and nonconstant-angle checks are reported.
    """
    k = outcome.profile
    n = outcome.n
    T = k.base_period
    m1, gap1 = lift_closure_multiple(k, m_max, h=ode_step)
    m2, gap2 = lift_closure_multiple(stretch_profile(k, n), m_max, h=ode_step)
    # the stretched lift closes over m2 * nT; the pullback at (nu, nv) is
    # then m2 * T periodic in u
    m_common = m1 * m2 // math.gcd(m1, m2)
    U = m_common * T

    hu = T / nodes_per_period
    gmap = hopf_flat_map(k, U, h=hu, hv=TWO_PI / nv, ode_step=ode_step)
    spec = GridSpec.from_flatmap(gmap)
    sol = stretched_solution(k, n, spec, a=a, rho=rho, ode_step=ode_step)

    auto = lam is None
    lam = auto_lambda(gmap, sol) if auto else float(lam)
    im = assemble(gmap, lambda_rescale(sol, lam), with_curvature=True,
                  with_frame_check=True)

    rep = _diagnostics(gmap, im, sol, lam)
    rep["lift_period_multiple"] = m1
    rep["stretched_period_multiple"] = m2
    rep["u_period"] = U
    rep["lift_closure_gap"] = max(gap1, gap2)
    rep["closure_u"] = float(np.max(np.linalg.norm(im.f[-1] - im.f[0], axis=-1)))
    rep["closure_v"] = float(np.max(np.linalg.norm(im.f[:, -1] - im.f[:, 0], axis=-1)))
    rep["frame_residual"] = im.frame_residual

    if max(rep["closure_u"], rep["closure_v"]) > closure_tol:
        raise ClosureFailure(
            f"assembled torus is not doubly periodic (u gap "
            f"{rep['closure_u']:.3e}, v gap {rep['closure_v']:.3e})",
            best_residual=max(rep["closure_u"], rep["closure_v"]))
    if rep["margin_min"] <= 0.0:
        raise SingularAfterRescale(
            f"margin min {rep['margin_min']:.3e} <= 0 at lambda = {lam:g}")

    rep["flags"] = []
    if rep["omega_range"] < 1e-6:
        rep["flags"].append("degenerate_product")  # circle control case
    if rep["sphere_rms"] < 1e-2:
        rep["flags"].append("on_affine_sphere")
    rep["ok"] = (rep["gauss_K_max"] < 1e-3 and rep["margin_min"] > 0
                 and rep["sphere_rms"] > 1e-2 and rep["omega_range"] > 1e-6)
    return im, rep


def build_perturbed_cylinder(k, n=2, lam=None, u_window=None, h=0.02, nv=128,
                             v_span=TWO_PI, ode_step=1e-3):
    """Assemble a complete flat cylinder from a (quasi-)periodic profile.

    Same pipeline as the torus without any closure requirement: the
    profile only needs bounded k and k' (so sin w = 1/sqrt(1+k^2) stays
    bounded away from zero and the asymptotic curves have bounded
    curvature).  Reports positivity of the margin and of the smallest
    metric eigenvalue on the window plus boundedness of f.
    """
    if u_window is None:
        u_window = (0.0, 4.0 * math.pi)
    U = u_window[1] - u_window[0]
    gmap = hopf_flat_map(k, U, h=h, hv=v_span / nv, v_range=(0.0, v_span),
                         ode_step=ode_step, require_period_multiple=False)
    spec = GridSpec.from_flatmap(gmap)
    sol = stretched_solution(k, n, spec, ode_step=ode_step)
    auto = lam is None
    lam = auto_lambda(gmap, sol) if auto else float(lam)
    im = assemble(gmap, lambda_rescale(sol, lam), with_curvature=True,
                  with_frame_check=True)
    rep = _diagnostics(gmap, im, sol, lam)
    rep["frame_residual"] = im.frame_residual
    if hasattr(k, "bound"):
        kmax, kpmax = k.bound()
        rep["profile_k_max"] = kmax
        rep["profile_kprime_max"] = kpmax
        rep["sin_omega_lower_bound"] = 1.0 / math.sqrt(1.0 + kmax * kmax)
    if not auto and rep["margin_min"] <= 0.0:
        raise SingularAfterRescale(
            f"margin min {rep['margin_min']:.3e} <= 0 at lambda = {lam:g}")
    rep["ok"] = (rep["margin_min"] > 0 and rep["metric_min_eigenvalue"] > 0
                 and rep["gauss_K_max"] < 1e-3 and rep["sphere_rms"] > 1e-2)
    return im, rep
