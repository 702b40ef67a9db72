"""Speed and acceleration profiles that reproduce Schwarzschild geodesics.

Allowing v = v(r), the matching conditions between the turning law and the
geodesic equations are

    (alpha^2)'/alpha^2 - (Phi^2)'/Phi^2 = v'/v + k/v^2,
    ((Phi^2)' v^2 - (alpha^2)') / (2 Phi^2) = -k.

With the isotropic Schwarzschild functions inserted, the pair is solved in
closed form by v^2 = (alpha^2/Phi^2)(1 - alpha^2/E^2), the timelike
normalisation for geodesics of energy E, and k from the second condition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .profiles import RadialProfile


class DesignInfeasible(ValueError):
    pass


def iso_alpha2(M, r):
    q = M / (2 * np.asarray(r, dtype=float))
    return ((1 - q) / (1 + q)) ** 2


def iso_Phi2(M, r):
    return (1 + M / (2 * np.asarray(r, dtype=float))) ** 4


def iso_dalpha2(M, r):
    r = np.asarray(r, dtype=float)
    q = M / (2 * r)
    # d/dr of ((1-q)/(1+q))^2 with dq/dr = -q/r
    return 2 * (1 - q) / (1 + q) * (-2 / (1 + q) ** 2) * (-q / r)


def iso_dPhi2(M, r):
    r = np.asarray(r, dtype=float)
    q = M / (2 * r)
    return 4 * (1 + q) ** 3 * (-q / r)


def design_speed2(M, E, r):
    a2, f2 = iso_alpha2(M, r), iso_Phi2(M, r)
    return a2 / f2 * (1 - a2 / E ** 2)


def design_k(M, E, r):
    v2 = design_speed2(M, E, r)
    return (iso_dalpha2(M, r) - iso_dPhi2(M, r) * v2) / (2 * iso_Phi2(M, r))


def _dspeed(M, E, r):
    # v' from v^2 = a2/f2 - a2^2/(f2 E^2)
    a2, f2 = iso_alpha2(M, r), iso_Phi2(M, r)
    da, df = iso_dalpha2(M, r), iso_dPhi2(M, r)
    dv2 = (da * f2 - a2 * df) / f2 ** 2 - (2 * a2 * da * f2 - a2 ** 2 * df) / (f2 ** 2 * E ** 2)
    return dv2 / (2 * np.sqrt(design_speed2(M, E, r)))


@dataclass(frozen=True)
class SchwarzschildDesign:
    M: float
    E: float
    r: np.ndarray
    speed: RadialProfile
    k: RadialProfile

    def alpha2(self, r):
        return iso_alpha2(self.M, r)

    def Phi2(self, r):
        return iso_Phi2(self.M, r)

    def launch(self, r0, theta0=np.pi / 2):
        """Polar initial state and (E, L) for a launch at isotropic radius r0."""
        v0 = float(self.speed(r0))
        y0 = np.array([r0, 0.0, v0 * np.cos(theta0), v0 * np.sin(theta0) / r0])
        L = self.Phi2(r0) * r0 ** 2 * y0[3] * self.E / self.alpha2(r0)
        return y0, float(L)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.r, self.k(self.r), self.speed(self.r)]),
                   delimiter=",", header="r_m,k_mps2,v_mps", comments="", fmt="%.12g")


def schwarzschild_design(M: float, r_range=(0.2, 1.0), E: float = 0.981, n: int = 4001):
    """Tabulated (v(r), k(r)) for geodesics of energy E around mass M.

    Units have the signal speed set to one, so v is a fraction of it.
    """
    lo, hi = map(float, r_range)
    if not 0 < lo < hi:
        raise ValueError("need 0 < r_lo < r_hi")
    if M < 0:
        raise ValueError("M must be nonnegative")
    if lo <= M / 2:
        raise DesignInfeasible(f"r_range reaches the horizon r = M/2 = {M / 2:g}")
    r = np.linspace(lo, hi, n)
    v2 = design_speed2(M, E, r)
    bad = np.nonzero(~(v2 > 0))[0]
    if len(bad):
        raise DesignInfeasible(f"v^2 <= 0 at r = {r[bad[0]]:.6g} (alpha^2 >= E^2 there)")
    v = np.sqrt(v2)
    k = design_k(M, E, r)
    dk_ends = np.gradient(k, r)[[0, -1]] if M == 0 else _dk_ends(M, E, r)
    speed = RadialProfile.smooth(r, v, "v_design", dvalues=_dspeed(M, E, r[[0, -1]]))
    kprof = RadialProfile.smooth(r, k, "k_design", dvalues=dk_ends)
    return SchwarzschildDesign(M, E, r, speed, kprof)


def _dk_ends(M, E, r, h=1e-6):
    ends = r[[0, -1]]
    return (design_k(M, E, ends + h) - design_k(M, E, ends - h)) / (2 * h)


def mapped_metric(design: SchwarzschildDesign, r_eval):
    """Rebuild alpha^2 and Phi^2 from the tabulated (v, k) via the matching ODEs.

    Integration starts from the isotropic values at the inner table end.
    Writing a = (ln alpha^2)', p = (ln Phi^2)', q = alpha^2/Phi^2 and
    s = v'/v + k/v^2, the two conditions give p = (q s - 2k) / (v^2 - q) and
    a = p + s.
    """
    sp, kp = design.speed, design.k
    r0 = design.r[0]

    def rhs(r, y):
        q = np.exp(y[0] - y[1])
        v = sp(r)
        s = sp.derivative(r) / v + kp(r) / (v * v)
        p = (q * s - 2 * kp(r)) / (v * v - q)
        return [p + s, p]

    y0 = [np.log(iso_alpha2(design.M, r0)), np.log(iso_Phi2(design.M, r0))]
    r_eval = np.asarray(r_eval, dtype=float)
    sol = solve_ivp(rhs, (r0, r_eval.max()), y0, method="DOP853", t_eval=r_eval,
                    rtol=1e-13, atol=1e-15)
    if not sol.success:
        raise RuntimeError(sol.message)
    return np.exp(sol.y[0]), np.exp(sol.y[1])


# -- independent oracle in areal coordinates ---------------------------------

def areal_radius(M, r_iso):
    return r_iso * (1 + M / (2 * r_iso)) ** 2


def oracle_precession(M, E, L, r_start_areal, n_cycles=2):
    """Precession from direct integration of u'' + u = M/L^2 + 3 M u^2.

    The orbit starts at an apsis; successive maxima of u are located with
    event detection and the mean azimuth between them is reported.
    """
    u0 = 1.0 / r_start_areal

    def rhs(phi, y):
        return [y[1], M / L ** 2 + 3 * M * y[0] ** 2 - y[0]]

    def du_zero(phi, y):
        return y[1]

    sol = solve_ivp(rhs, (0, 2 * np.pi * (n_cycles + 1) * 1.5), [u0, 0.0], method="DOP853",
                    events=du_zero, rtol=1e-12, atol=1e-14)
    hits = sol.t_events[0]
    vals = sol.y_events[0][:, 0]
    # apsides of the same kind as the start (same side of the mean u)
    kind = np.sign(vals - 0.5 * (vals.max() + vals.min()))
    start_kind = np.sign(u0 - 0.5 * (vals.max() + vals.min()))
    same = hits[(kind == start_kind) & (hits > 1e-6)]
    if len(same) < 1:
        raise RuntimeError("oracle orbit did not complete a radial cycle")
    steps = np.diff(np.concatenate([[0.0], same[:n_cycles]]))
    return float(np.mean(steps) - 2 * np.pi)


def oracle_precession_quadrature(M, E, L):
    """Same quantity from the cubic turning-point polynomial."""
    coeffs = [2 * M, -1.0, 2 * M / L ** 2, (E ** 2 - 1) / L ** 2]
    roots = np.sort(np.roots(coeffs).real)
    u1, u2, u3 = roots
    mid, half = 0.5 * (u1 + u2), 0.5 * (u2 - u1)

    def f(chi):
        u = mid - half * np.cos(chi)
        return half * np.sin(chi) / np.sqrt(2 * M * (u - u1) * (u2 - u) * (u3 - u))

    val, _ = quad(f, 0, np.pi, limit=400, epsabs=1e-13)
    return float(2 * val - 2 * np.pi)
