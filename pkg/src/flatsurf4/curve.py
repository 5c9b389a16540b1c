"""Curves in S^2 and S^3: curvature profiles, helices, prescribed-curvature
integration, asymptotic lifts and closure detection.

All curves are sampled on uniform parameter grids.  Curves in S^3 are
parametrized by arclength u; for lifts of S^2 curves through the Hopf
fibration this is the lift arclength, and the projected curve is traversed
with speed ds/du = 2/sqrt(1 + k(u)^2).
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NoClosure
from .quat import QONE, qmul, qconj, qnorm

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# curvature profiles


@dataclass(frozen=True)
class CurvatureProfile:
    """Periodic geodesic curvature k(u) of lift-arclength, as a Fourier series.

    k(u) = k0 + sum_m fourier_cos[m-1] cos(2 pi m u / T)
              + sum_m fourier_sin[m-1] sin(2 pi m u / T)

    The declared base_period T is authoritative; it is never re-inferred
    from the coefficients, so a constant profile keeps whatever period it
    was built with (circles carry T = pi, the lift-arclength of one loop).
    """

    base_period: float
    k0: float = 0.0
    fourier_cos: tuple = ()
    fourier_sin: tuple = ()

    def __post_init__(self):
        if self.base_period <= 0:
            raise ValueError("base_period must be positive")
        object.__setattr__(self, "fourier_cos", tuple(float(c) for c in self.fourier_cos))
        object.__setattr__(self, "fourier_sin", tuple(float(c) for c in self.fourier_sin))

    def value(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, self.k0)
        w = TWO_PI / self.base_period
        for m, c in enumerate(self.fourier_cos, start=1):
            if c:
                out = out + c * np.cos(m * w * u)
        for m, s in enumerate(self.fourier_sin, start=1):
            if s:
                out = out + s * np.sin(m * w * u)
        return out if out.shape else float(out)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        w = TWO_PI / self.base_period
        for m, c in enumerate(self.fourier_cos, start=1):
            if c:
                out = out - c * m * w * np.sin(m * w * u)
        for m, s in enumerate(self.fourier_sin, start=1):
            if s:
                out = out + s * m * w * np.cos(m * w * u)
        return out if out.shape else float(out)

    def stretch(self, n):
        """Profile of the n-stretched curve, k~(u) = k(u/n) with period n*T."""
        if n < 1:
            raise ValueError("stretch factor must be >= 1")
        return CurvatureProfile(n * self.base_period, self.k0,
                                self.fourier_cos, self.fourier_sin)

    def is_constant(self, tol=0.0):
        return all(abs(c) <= tol for c in self.fourier_cos + self.fourier_sin)

    def to_json(self):
        return json.dumps({"T": self.base_period, "k0": self.k0,
                           "cos": list(self.fourier_cos), "sin": list(self.fourier_sin)})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["T"], d.get("k0", 0.0), tuple(d.get("cos", ())), tuple(d.get("sin", ())))


@dataclass(frozen=True)
class QuasiPeriodicProfile:
    """Bounded smooth curvature k(u) = k0 + sum amp_i cos(freq_i u + phase_i).

    Frequencies need not be commensurate, so the profile (and the Hopf
    cylinder built on it) need not be periodic.  Used by the complete
    flat-cylinder pipeline.
    """

    k0: float
    terms: tuple = ()  # (amplitude, frequency, phase) triples

    def value(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, self.k0)
        for amp, freq, phase in self.terms:
            out = out + amp * np.cos(freq * u + phase)
        return out if out.shape else float(out)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        for amp, freq, phase in self.terms:
            out = out - amp * freq * np.sin(freq * u + phase)
        return out if out.shape else float(out)

    def stretch(self, n):
        return QuasiPeriodicProfile(
            self.k0, tuple((a, f / n, p) for a, f, p in self.terms))

    def bound(self):
        """Upper bounds for |k| and |k'| (triangle inequality)."""
        kmax = abs(self.k0) + sum(abs(a) for a, _, _ in self.terms)
        kpmax = sum(abs(a * f) for a, f, _ in self.terms)
        return kmax, kpmax


def profile_as_callable(k):
    """Accept a profile object or a plain callable; return value/deriv pair."""
    if hasattr(k, "value"):
        return k.value, getattr(k, "deriv", None)
    if callable(k):
        return k, None
    raise TypeError("expected a curvature profile or a callable")


# ---------------------------------------------------------------------------
# sampled curves


@dataclass
class S3Curve:
    """Arclength-sampled curve in S^3 with optional analytic derivatives."""

    samples: np.ndarray          # (N, 4) unit quaternions
    h: float                     # uniform parameter step
    u0: float = 0.0
    param: str = "lift_arclength"
    deriv: Optional[np.ndarray] = None    # (N, 4) first derivatives
    deriv2: Optional[np.ndarray] = None   # (N, 4) second derivatives

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != 4:
            raise ValueError("samples must have shape (N, 4)")
        if self.h <= 0:
            raise ValueError("step must be positive")
        err = np.max(np.abs(qnorm(self.samples) - 1.0))
        if err > 1e-9:
            raise ValueError(f"samples drifted off S^3 by {err:.3e}")

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def u_grid(self):
        return self.u0 + self.h * np.arange(self.n)

    @property
    def length(self):
        return self.h * (self.n - 1)

    def left_translate(self, q):
        """q * a(u); preserves arclength and left body velocity."""
        return S3Curve(qmul(q, self.samples), self.h, self.u0, self.param,
                       None if self.deriv is None else qmul(q, self.deriv),
                       None if self.deriv2 is None else qmul(q, self.deriv2))

    def right_translate(self, q):
        """a(u) * q; preserves arclength and right body velocity."""
        return S3Curve(qmul(self.samples, q), self.h, self.u0, self.param,
                       None if self.deriv is None else qmul(self.deriv, q),
                       None if self.deriv2 is None else qmul(self.deriv2, q))

    def conjugated(self):
        """Pointwise quaternion conjugate (flips torsion sign)."""
        return S3Curve(qconj(self.samples), self.h, self.u0, self.param,
                       None if self.deriv is None else qconj(self.deriv),
                       None if self.deriv2 is None else qconj(self.deriv2))


@dataclass
class S2Curve:
    """Sampled curve on S^2, with unit tangents when the integrator made them."""

    samples: np.ndarray          # (N, 3)
    h: float
    u0: float = 0.0
    param: str = "s2_arclength"  # or "lift_arclength"
    tangents: Optional[np.ndarray] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        err = np.max(np.abs(np.linalg.norm(self.samples, axis=-1) - 1.0))
        if err > 1e-9:
            raise ValueError(f"samples drifted off S^2 by {err:.3e}")

    @property
    def n(self):
        return self.samples.shape[0]


@dataclass(frozen=True)
class ClosureReport:
    closes: bool
    m: int
    residual: float
    phase: float   # fiber phase mismatch in radians, in (-pi, pi]


# ---------------------------------------------------------------------------
# explicit helices (torsion +-1, constant curvature (r^2-1)/r)


def helix(r, tau_sign=1, s_range=(0.0, TWO_PI), h=1e-3):
    """Helix in S^3 with curvature (r^2-1)/r and torsion tau_sign.

    sigma(s) = (r cos(s/r), r sin(s/r), cos(rs), sin(rs)) / sqrt(1+r^2),
    parametrized by arclength; for tau_sign = -1 the third coordinate is
    reflected (an orientation-reversing isometry).  Closed with period
    2 pi r when r is an integer.
    """
    if r <= 1:
        raise ValueError("helix requires r > 1 (curvature formula degenerates)")
    if tau_sign not in (+1, -1):
        raise ValueError("tau_sign must be +1 or -1")
    s0, s1 = s_range
    steps = max(1, int(round((s1 - s0) / h)))
    hs = (s1 - s0) / steps
    s = s0 + hs * np.arange(steps + 1)
    c = 1.0 / math.sqrt(1.0 + r * r)
    sig = np.stack([r * np.cos(s / r), r * np.sin(s / r),
                    np.cos(r * s), np.sin(r * s)], axis=-1) * c
    dsig = np.stack([-np.sin(s / r), np.cos(s / r),
                     -r * np.sin(r * s), r * np.cos(r * s)], axis=-1) * c
    d2sig = np.stack([-np.cos(s / r) / r, -np.sin(s / r) / r,
                      -r * r * np.cos(r * s), -r * r * np.sin(r * s)], axis=-1) * c
    if tau_sign == -1:
        for arr in (sig, dsig, d2sig):
            arr[:, 2] *= -1.0
    return S3Curve(sig, hs, u0=s0, deriv=dsig, deriv2=d2sig)


def helix_curvature(r):
    return (r * r - 1.0) / r


# ---------------------------------------------------------------------------
# prescribed-curvature integration on S^2


def integrate_s2_curve(k, length, h=1e-3, c0=(1.0, 0.0, 0.0), t0=(0.0, 1.0, 0.0)):
    """Unit-speed curve c(s) on S^2 with geodesic curvature k(s).

    Frame ODE: c' = t, t' = -c + k(s) (c x t).  Classical RK4 with frame
    re-orthonormalization each step.
    """
    kfun, _ = profile_as_callable(k)
    steps = max(1, int(round(length / h)))
    hs = length / steps
    s_nodes = hs * np.arange(steps + 1)
    k_full = np.asarray(kfun(s_nodes), dtype=float)
    k_half = np.asarray(kfun(s_nodes[:-1] + 0.5 * hs), dtype=float)

    out = np.empty((steps + 1, 3))
    tan = np.empty((steps + 1, 3))
    c = np.array(c0, dtype=float)
    t = np.array(t0, dtype=float)
    c /= np.linalg.norm(c)
    t -= np.dot(t, c) * c
    t /= np.linalg.norm(t)
    out[0], tan[0] = c, t

    def rhs(c, t, kv):
        return t, -c + kv * np.cross(c, t)

    for j in range(steps):
        k1c, k1t = rhs(c, t, k_full[j])
        k2c, k2t = rhs(c + 0.5 * hs * k1c, t + 0.5 * hs * k1t, k_half[j])
        k3c, k3t = rhs(c + 0.5 * hs * k2c, t + 0.5 * hs * k2t, k_half[j])
        k4c, k4t = rhs(c + hs * k3c, t + hs * k3t, k_full[j + 1])
        c = c + (hs / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)
        t = t + (hs / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)
        c /= np.linalg.norm(c)
        t -= np.dot(t, c) * c
        t /= np.linalg.norm(t)
        out[j + 1], tan[j + 1] = c, t
    return S2Curve(out, hs, tangents=tan)


# ---------------------------------------------------------------------------
# asymptotic lifts


def lift_body_velocity(k_values, k_derivs, sign=1):
    """Body angular velocity of the asymptotic lift and its u-derivative.

    w(u) = sign * k/sqrt(1+k^2) i + 1/sqrt(1+k^2) k, a unit pure quaternion
    on the i-k great circle; guarantees unit speed and the asymptotic
    condition <a', a*j> = 0.
    """
    k = np.asarray(k_values, dtype=float)
    root = np.sqrt(1.0 + k * k)
    p = sign * k / root
    q = 1.0 / root
    if k_derivs is None:
        dp = dq = None
    else:
        kp = np.asarray(k_derivs, dtype=float)
        dp = sign * kp / root ** 3
        dq = -k * kp / root ** 3
    return p, q, dp, dq


def asymptotic_lift(k, u_range=(0.0, TWO_PI), h=1e-3, a0=QONE, sign=1):
    """Integrate the asymptotic lift a' = a * w(u) with RK4, renormalizing.

    The Hopf projection of the result traverses a curve of geodesic
    curvature sign*k(u) at speed 2/sqrt(1+k(u)^2).
    """
    kfun, kder = profile_as_callable(k)
    u0, u1 = u_range
    steps = max(1, int(round((u1 - u0) / h)))
    hu = (u1 - u0) / steps
    u_nodes = u0 + hu * np.arange(steps + 1)
    p_full, q_full, dp_full, dq_full = lift_body_velocity(
        kfun(u_nodes), None if kder is None else kder(u_nodes), sign)
    p_half, q_half, _, _ = lift_body_velocity(
        kfun(u_nodes[:-1] + 0.5 * hu), None, sign)

    out = np.empty((steps + 1, 4))
    aw, ax, ay, az = (float(v) for v in np.asarray(a0, dtype=float))
    nrm = math.sqrt(aw * aw + ax * ax + ay * ay + az * az)
    aw, ax, ay, az = aw / nrm, ax / nrm, ay / nrm, az / nrm
    out[0] = (aw, ax, ay, az)
    h6 = hu / 6.0
    h2 = hu / 2.0

    for j in range(steps):
        p1, q1 = p_full[j], q_full[j]
        p2, q2 = p_half[j], q_half[j]
        p4, q4 = p_full[j + 1], q_full[j + 1]
        # k1 = a * w(u_j)
        k1w = -ax * p1 - az * q1
        k1x = aw * p1 + ay * q1
        k1y = az * p1 - ax * q1
        k1z = aw * q1 - ay * p1
        bw, bx, by, bz = aw + h2 * k1w, ax + h2 * k1x, ay + h2 * k1y, az + h2 * k1z
        k2w = -bx * p2 - bz * q2
        k2x = bw * p2 + by * q2
        k2y = bz * p2 - bx * q2
        k2z = bw * q2 - by * p2
        bw, bx, by, bz = aw + h2 * k2w, ax + h2 * k2x, ay + h2 * k2y, az + h2 * k2z
        k3w = -bx * p2 - bz * q2
        k3x = bw * p2 + by * q2
        k3y = bz * p2 - bx * q2
        k3z = bw * q2 - by * p2
        bw, bx, by, bz = aw + hu * k3w, ax + hu * k3x, ay + hu * k3y, az + hu * k3z
        k4w = -bx * p4 - bz * q4
        k4x = bw * p4 + by * q4
        k4y = bz * p4 - bx * q4
        k4z = bw * q4 - by * p4
        aw += h6 * (k1w + 2 * (k2w + k3w) + k4w)
        ax += h6 * (k1x + 2 * (k2x + k3x) + k4x)
        ay += h6 * (k1y + 2 * (k2y + k3y) + k4y)
        az += h6 * (k1z + 2 * (k2z + k3z) + k4z)
        nrm = math.sqrt(aw * aw + ax * ax + ay * ay + az * az)
        if abs(nrm - 1.0) > 1e-9:
            aw, ax, ay, az = aw / nrm, ax / nrm, ay / nrm, az / nrm
        out[j + 1] = (aw, ax, ay, az)

    if not np.all(np.isfinite(out)):
        from .errors import IntegrationFailure
        raise IntegrationFailure("asymptotic lift produced non-finite values")

    w_full = np.zeros((steps + 1, 4))
    w_full[:, 1] = p_full
    w_full[:, 3] = q_full
    deriv = qmul(out, w_full)
    if dp_full is not None:
        wprime = np.zeros((steps + 1, 4))
        wprime[:, 1] = dp_full
        wprime[:, 3] = dq_full
        deriv2 = -out + qmul(out, wprime)
    else:
        deriv2 = None
    return S3Curve(out, hu, u0=u0, deriv=deriv, deriv2=deriv2)


# ---------------------------------------------------------------------------
# closure detection


def _best_fiber_phase(a_ref, da_ref, a_cur, da_cur):
    """Phase phi minimizing |a_cur - a_ref e^{i phi}|, with frame residual."""
    b = qmul(qconj(a_ref), a_cur)
    phi = math.atan2(b[1], b[0])
    e = np.array([math.cos(phi), math.sin(phi), 0.0, 0.0])
    shifted = qmul(a_ref, e)
    res = float(np.linalg.norm(a_cur - shifted))
    if da_ref is not None and da_cur is not None:
        res = max(res, float(np.linalg.norm(da_cur - qmul(da_ref, e))))
    return phi, res


def detect_closure(curve: S3Curve, T, m_max=64, tol=1e-6):
    """Find the smallest multiple m <= m_max with a(u0 + m T) = a(u0).

    Position and frame must both agree within tol.  If only fiber-phase
    closure a(u0+mT) = a(u0) e^{i phase} exists, reports that phase with
    closes=False.  Raises NoClosure when no multiple qualifies.
    """
    iT = T / curve.h
    if abs(iT - round(iT)) > 1e-6 * max(1.0, iT):
        raise ValueError("period T must be an integer multiple of the sample step")
    iT = int(round(iT))
    if iT == 0:
        raise ValueError("period T too small for the sample step")
    m_avail = (curve.n - 1) // iT
    if m_avail < 1:
        raise ValueError("curve must cover at least one period")

    a0 = curve.samples[0]
    derivs = curve.deriv
    if derivs is None:
        derivs = np.gradient(curve.samples, curve.h, axis=0)
    da0 = derivs[0]

    fiber_hit = None
    best = math.inf
    for m in range(1, min(m_max, m_avail) + 1):
        idx = m * iT
        am = curve.samples[idx]
        dam = derivs[idx]
        residual = max(float(np.linalg.norm(am - a0)),
                       float(np.linalg.norm(dam - da0)))
        best = min(best, residual)
        if residual < tol:
            phase, _ = _best_fiber_phase(a0, da0, am, dam)
            return ClosureReport(True, m, residual, phase)
        phase, fres = _best_fiber_phase(a0, da0, am, dam)
        if fres < tol and fiber_hit is None:
            fiber_hit = ClosureReport(False, m, residual, phase)
    if fiber_hit is not None:
        return fiber_hit
    raise NoClosure(
        f"no closure multiple m <= {min(m_max, m_avail)} for T = {T:g} "
        f"(best residual {best:.3e})")


# ---------------------------------------------------------------------------
# measured Frenet data (finite differences; used as an independent check)


def _cross4(a, b, c):
    """Vector d with det[a, b, c, d] >= 0, the R^4 analogue of the cross product."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    m = np.stack([a, b, c], axis=-2)  # (..., 3, 4)
    d = np.empty(a.shape)
    cols = [0, 1, 2, 3]
    sign = -1.0
    for i in cols:
        rest = [j for j in cols if j != i]
        d[..., i] = sign * np.linalg.det(m[..., :, rest])
        sign = -sign
    return d


def frenet_s3(curve: S3Curve):
    """Curvature and torsion of an arclength curve in S^3 by central differences.

    Uses the intrinsic frame: kappa = |sigma'' + sigma|, torsion from the
    binormal completing (sigma, T, N) to a positively oriented R^4 frame.
    Returns (kappa, tau) arrays on the interior nodes (two trimmed per side).
    """
    s = curve.samples
    h = curve.h
    d1 = (-s[4:] + 8 * s[3:-1] - 8 * s[1:-3] + s[:-4]) / (12 * h)
    d2 = (-s[4:] + 16 * s[3:-1] - 30 * s[2:-2] + 16 * s[1:-3] - s[:-4]) / (12 * h * h)
    sig = s[2:-2]
    T = d1
    acc = d2 + sig  # covariant acceleration in S^3
    kappa = np.linalg.norm(acc, axis=-1)
    N = acc / kappa[:, None]
    B = _cross4(sig, T, N)
    B /= np.linalg.norm(B, axis=-1)[:, None]
    dN = np.gradient(N, h, axis=0)
    tau = np.einsum("ij,ij->i", dN, B)
    return kappa, tau
