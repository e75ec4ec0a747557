"""Lattice chain model: dispersion relation, its derivatives, and the
equivalent polynomial in x = cos z.

A chain with hopping range ``n`` and real hopping strengths ``t_1 .. t_n``
has the band dispersion

    eps(z) = -2 * sum_{m=1..n} t_m * cos(m z)

with z the (possibly complex) dimensionless momentum.  All functions in
this module are pure: they never mutate their inputs and are safe to call
from any number of concurrent workers.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb

__all__ = [
    "ModelError",
    "LatticeModel",
    "DispersionPolynomial",
    "reduce_to_zone",
    "dispersion",
    "dispersion_derivative",
    "dispersion_polynomial",
    "band_extent",
]

TWO_PI = 2.0 * math.pi


class ModelError(ValueError):
    """Raised for invalid model data (wrong arity, vanishing longest hop)."""


@dataclass(frozen=True)
class LatticeModel:
    """Finite-range hopping chain.

    Parameters
    ----------
    hoppings : tuple of float
        Real hopping strengths ``(t_1, ..., t_n)``.  The range ``n`` is
        the length of the tuple.  ``t_n`` must be nonzero because the
        transfer matrix divides by it.
    """

    hoppings: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.hoppings)
        if len(t) < 1:
            raise ModelError("model needs at least one hopping strength")
        if not all(math.isfinite(v) for v in t):
            raise ModelError("hopping strengths must be finite")
        if t[-1] == 0.0:
            raise ModelError("longest-range hopping t_n must be nonzero")
        object.__setattr__(self, "hoppings", t)

    @property
    def n(self) -> int:
        """Hopping range (number of neighbors coupled)."""
        return len(self.hoppings)

    def to_dict(self) -> dict:
        return {"n": self.n, "t": list(self.hoppings)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeModel":
        try:
            n = int(data["n"])
            t = [float(v) for v in data["t"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model record: {exc}") from exc
        if len(t) != n:
            raise ModelError(f"model declares n={n} but lists {len(t)} hoppings")
        return cls(tuple(t))

    @classmethod
    def from_json(cls, text: str) -> "LatticeModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError(f"invalid model JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ModelError("model JSON must be an object {'n': ..., 't': [...]}")
        return cls.from_dict(data)


@dataclass(frozen=True)
class DispersionPolynomial:
    """Degree-n polynomial P with P(cos z) = omega - eps(z).

    Both coefficient bases are kept: ``cheb`` holds the coefficients in
    the first-kind Chebyshev basis (used for root finding through the
    colleague matrix, which avoids the ill-conditioned basis change at
    high degree), ``monomial`` holds plain power-basis coefficients in
    increasing order.
    """

    omega: float
    cheb: tuple
    monomial: tuple

    @property
    def degree(self) -> int:
        return len(self.cheb) - 1

    def __call__(self, x):
        return _cheb.chebval(x, np.asarray(self.cheb))


def reduce_to_zone(k: float) -> float:
    """Map a real momentum into the zone (-pi, pi], keeping pi at the edge."""
    return math.pi - (math.pi - k) % TWO_PI


def dispersion(model: LatticeModel, z) -> complex:
    """Band energy eps(z) = -2 sum_m t_m cos(m z).

    Parameters
    ----------
    model : LatticeModel
    z : real or complex momentum (scalar or array)

    Returns
    -------
    complex (or float for real input): the analytically continued band
    energy.  Even and 2*pi periodic in z.
    """
    z = np.asarray(z)
    m = np.arange(1, model.n + 1)
    t = np.asarray(model.hoppings)
    acc = np.cos(np.multiply.outer(z, m))
    return -2.0 * (acc @ t)


def dispersion_derivative(model: LatticeModel, z0, r: int) -> complex:
    """r-th derivative of the dispersion at momentum z0.

    Uses the closed form d^r/dz^r cos(m z) = m^r cos(r pi/2 + m z), so no
    finite differencing is involved.

    Parameters
    ----------
    model : LatticeModel
    z0 : real or complex momentum
    r : int
        Derivative order, r >= 1.

    Returns
    -------
    complex (float for real z0): the value of eps^(r)(z0).
    """
    if r < 1:
        raise ValueError("derivative order must be >= 1")
    z0 = np.asarray(z0)
    m = np.arange(1, model.n + 1)
    t = np.asarray(model.hoppings)
    phase = np.cos(r * math.pi / 2.0 + np.multiply.outer(z0, m))
    return -2.0 * (phase @ (t * m.astype(float) ** r))


def dispersion_polynomial(model: LatticeModel, omega: float) -> DispersionPolynomial:
    """Reduce omega = eps(z) to a degree-n polynomial in x = cos z.

    With T_m the first-kind Chebyshev polynomials, cos(m z) = T_m(cos z),
    so omega - eps(z) = omega + 2 sum_m t_m T_m(x).  The returned record
    satisfies P(cos z) = omega - eps(z); its roots encode all transfer
    matrix eigenvalues at energy omega.
    """
    cheb = np.zeros(model.n + 1)
    cheb[0] = omega
    cheb[1:] = 2.0 * np.asarray(model.hoppings)
    mono = _cheb.cheb2poly(cheb)
    return DispersionPolynomial(
        omega=float(omega), cheb=tuple(cheb), monomial=tuple(mono)
    )


def _interior_critical_x(model: LatticeModel):
    """Real roots in (-1, 1) of Q(x) = sum_m m t_m U_{m-1}(x).

    eps'(k) factors as 2 sin(k) Q(cos k) with U the second-kind Chebyshev
    polynomials, so these roots are the interior critical momenta.
    Returned with multiplicity collapsed (one value per distinct root).
    """
    from . import polyroots

    q_u = np.arange(1, model.n + 1) * np.asarray(model.hoppings)
    q_t = polyroots.chebu_to_chebt(q_u)
    xs = []
    for root, _mult in polyroots.cheb_roots_with_multiplicity(q_t):
        if abs(root.imag) < 1e-9 and abs(root.real) < 1.0 - 1e-12:
            xs.append(float(root.real))
    return sorted(xs)


def band_extent(model: LatticeModel) -> tuple:
    """(min, max) of eps(k) over real momenta.

    Evaluates the dispersion at every critical momentum: k = 0, pi plus
    the interior roots of eps'.
    """
    ks = [0.0, math.pi] + [math.acos(x) for x in _interior_critical_x(model)]
    vals = [float(dispersion(model, k).real) for k in ks]
    return (min(vals), max(vals))


def bandwidth(model: LatticeModel) -> float:
    lo, hi = band_extent(model)
    return hi - lo
