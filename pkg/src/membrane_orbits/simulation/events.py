"""Event types and post-hoc apsis detection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("apoapsis", "periapsis", "collision", "merge", "cap_crash", "boundary_escape")
TERMINAL = ("cap_crash", "boundary_escape")


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def to_dict(self):
        return {"t": self.t, "kind": self.kind, **self.data}


def find_apsides(t, x, y, vx, vy, deadband=None, min_swing=0.0):
    """Apsides from sign changes of rdot, refined by a parabola in r.

    Samples where |rdot| is below ``deadband`` (default 1e-5 times the mean
    speed) keep the previous sign, so numerically circular orbits report
    nothing.  ``min_swing`` drops extrema whose radius differs from the
    previous apsis by less than that many metres (small wiggles on a
    nearly circular stretch).  Returns a list of (t, kind, r, phi) with phi
    unwrapped.
    """
    ok = np.isfinite(x)
    t, x, y, vx, vy = (a[ok] for a in (t, x, y, vx, vy))
    if len(t) < 3:
        return []
    r = np.hypot(x, y)
    rdot = (x * vx + y * vy) / r
    phi = np.unwrap(np.arctan2(y, x))
    if deadband is None:
        deadband = 1e-5 * float(np.mean(np.hypot(vx, vy)))
    sgn = np.where(rdot > deadband, 1, np.where(rdot < -deadband, -1, 0))
    out = []
    last_i, last_s = None, 0
    for i in np.nonzero(sgn)[0]:
        s = sgn[i]
        if last_s and s != last_s:
            seg = slice(last_i, i + 1)
            if last_s > 0:
                j = last_i + int(np.argmax(r[seg]))
                kind = "apoapsis"
            else:
                j = last_i + int(np.argmin(r[seg]))
                kind = "periapsis"
            out.append((kind,) + _refine(t, r, phi, j))
        last_i, last_s = i, s
    if min_swing > 0:
        out = _zigzag(out, min_swing)
    return [(tt, kind, rr, pp) for kind, tt, rr, pp in out]


def _zigzag(raw, swing):
    kept = []
    for e in raw:
        if not kept:
            kept.append(e)
            continue
        last = kept[-1]
        if e[0] == last[0]:
            more = e[2] > last[2] if e[0] == "apoapsis" else e[2] < last[2]
            if more:
                kept[-1] = e
        elif abs(e[2] - last[2]) >= swing:
            kept.append(e)
    return kept


def _refine(t, r, phi, j):
    if j == 0 or j == len(r) - 1:
        return float(t[j]), float(r[j]), float(phi[j])
    r0, r1, r2 = r[j - 1], r[j], r[j + 1]
    den = r0 - 2 * r1 + r2
    u = 0.0 if den == 0 else float(np.clip(0.5 * (r0 - r2) / den, -1.0, 1.0))
    rr = r1 - 0.25 * (r0 - r2) * u
    # quadratic through the three samples, evaluated at offset u
    def quad(a0, a1, a2):
        return a1 + 0.5 * (a2 - a0) * u + 0.5 * (a2 - 2 * a1 + a0) * u * u
    return float(quad(t[j - 1], t[j], t[j + 1])), float(rr), float(quad(phi[j - 1], phi[j], phi[j + 1]))
