"""Radial profiles k(r) (and v(r)) stored as piecewise polynomials.

Every profile carries its value, derivative and antiderivative as
``scipy.interpolate.PPoly`` objects.  The raw breakpoint and coefficient
arrays are handed to the compiled integrators, so closed forms and tables
go through the same code path.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator, PPoly


class DomainError(ValueError):
    """Evaluation outside the range where a profile is defined."""


class RadialProfile:
    """A function of radius defined on [lo, hi] with exact calculus."""

    def __init__(self, pp: PPoly, name: str = "", anchor: float | None = None):
        self.pp = pp
        self.lo, self.hi = float(pp.x[0]), float(pp.x[-1])
        self.name = name
        self.dpp = pp.derivative()
        # antiderivative is zero at the anchor (lower table end unless given)
        self.anchor = self.lo if anchor is None else float(anchor)
        ipp = pp.antiderivative()
        self.ipp = PPoly(ipp.c.copy(), ipp.x.copy(), extrapolate=False)
        self.ipp.c[-1] -= ipp(self.anchor)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value, lo=0.0, hi=1.2, name="constant"):
        return cls.polynomial([value], lo, hi, name)

    @classmethod
    def polynomial(cls, coeffs, lo=0.0, hi=1.2, name="polynomial"):
        """Polynomial sum_i coeffs[i] r^i on [lo, hi], with K(0)=0 if 0 is in range."""
        coeffs = np.asarray(coeffs, dtype=float)
        # re-expand about the left breakpoint lo
        poly = np.polynomial.Polynomial(coeffs)
        shifted = poly(np.polynomial.Polynomial([lo, 1.0]))
        c = shifted.coef[::-1].reshape(-1, 1)
        pp = PPoly(c, np.array([lo, hi]), extrapolate=False)
        return cls(pp, name, anchor=0.0 if lo <= 0 <= hi else lo)

    @classmethod
    def from_table(cls, r, k, name="table"):
        """Monotone cubic (PCHIP) interpolant of tabulated samples."""
        r = np.asarray(r, dtype=float)
        k = np.asarray(k, dtype=float)
        if r.ndim != 1 or len(r) < 3 or np.any(np.diff(r) <= 0):
            raise ValueError("table needs at least 3 strictly increasing abscissae")
        return cls(_pchip_ppoly(r, k), name)

    @classmethod
    def smooth(cls, r, values, name="spline", dvalues=None):
        """Clamped cubic spline, used for designed profiles sampled densely."""
        bc = "not-a-knot" if dvalues is None else ((1, dvalues[0]), (1, dvalues[1]))
        cs = CubicSpline(np.asarray(r, float), np.asarray(values, float), bc_type=bc,
                         extrapolate=False)
        return cls(PPoly(cs.c, cs.x, extrapolate=False), name)

    @classmethod
    def from_csv(cls, path, name=None):
        data = read_table(path)
        return cls.from_table(data[:, 0], data[:, 1], name or Path(path).stem)

    # -- evaluation ---------------------------------------------------------
    def _check(self, r):
        r = np.asarray(r, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.hi))
        if np.any(r < self.lo - tol) or np.any(r > self.hi + tol):
            raise DomainError(f"r outside profile range [{self.lo}, {self.hi}]")
        return np.clip(r, self.lo, self.hi)

    def __call__(self, r):
        return self.pp(self._check(r))

    def derivative(self, r):
        return self.dpp(self._check(r))

    def integral(self, r):
        """K(r), the antiderivative anchored at ``self.anchor``."""
        return self.ipp(self._check(r))

    def arrays(self):
        """(breakpoints, coeffs) for value, derivative and antiderivative."""
        def pad(pp, order):
            c = pp.c
            if c.shape[0] < order:
                c = np.vstack([np.zeros((order - c.shape[0], c.shape[1])), c])
            return np.ascontiguousarray(c)
        order = self.ipp.c.shape[0]
        return (np.ascontiguousarray(self.pp.x), pad(self.pp, order),
                pad(self.dpp, order), pad(self.ipp, order))

    def samples(self, n=201):
        r = np.linspace(self.lo, self.hi, n)
        return r, self(r)

    def to_csv(self, path, n=201):
        r, k = self.samples(n)
        np.savetxt(path, np.column_stack([r, k]), delimiter=",", header="r_m,k_mps2",
                   comments="", fmt="%.10g")

    def __repr__(self):
        return f"RadialProfile({self.name!r}, [{self.lo:g}, {self.hi:g}])"


def _pchip_ppoly(r, k):
    p = PchipInterpolator(r, k, extrapolate=False)
    return PPoly(p.c, p.x, extrapolate=False)


def read_table(path) -> np.ndarray:
    """Numeric CSV rows, skipping '#' comments and a column-name header."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append([float(t) for t in line.split(",")])
            except ValueError:
                if rows:
                    raise ValueError(f"{path}: non-numeric row {line!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows)


def bundled_names():
    root = resources.files("membrane_orbits") / "data" / "profiles"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".csv"))


def load_bundled(name: str) -> RadialProfile:
    """Load one of the shipped stand-in tables, e.g. ``"D13.9"``."""
    root = resources.files("membrane_orbits") / "data" / "profiles"
    path = root / f"{name}.csv"
    if not path.is_file():
        raise KeyError(f"no bundled profile {name!r}; have {bundled_names()}")
    with resources.as_file(path) as p:
        return RadialProfile.from_csv(p, name)


def load_profile(spec: str) -> RadialProfile:
    """Bundled name or path to a two-column CSV."""
    if Path(spec).suffix == ".csv" and Path(spec).exists():
        return RadialProfile.from_csv(spec)
    return load_bundled(spec)
