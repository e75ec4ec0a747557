"""Critical points of the band, their coalescence orders and the
perturbative momentum splitting across a coalescence energy.

A momentum k0 with eps'(k0) = ... = eps^(p-1)(k0) = 0 and eps^(p)(k0)
nonzero is a critical point of order p.  At the energy eps(k0) exactly p
eigenvalues and eigenvectors of the transfer matrix coalesce, so the same
order can be read off two independent ways: from the derivative chain of
the dispersion (``classify``) or from root multiplicities of the
dispersion polynomial (``ep_orders_at``).  The topological index

    I = (1 + (-1)^p) * sign(eps^(p)(k0)) / 2

equals the sign of the jump in the number of unit-modulus eigenvalues
across the critical energy (``index_from_counts``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    LatticeModel,
    band_extent,
    dispersion,
    dispersion_derivative,
    dispersion_polynomial,
    reduce_to_zone,
    _interior_critical_x,
)
from . import polyroots
from . import transfer

__all__ = [
    "CriticalPoint",
    "EpOrder",
    "EpSplitting",
    "classify",
    "find_critical_points",
    "ep_orders_at",
    "index_from_counts",
    "ep_splitting",
    "critical_report",
]

# |a_r(k0)| below CLASSIFY_REL_TOL * (2 sum_m |t_m| m^r) counts as zero;
# the scale grows with r like m^r, an absolute cutoff would misclassify
# high derivatives.
CLASSIFY_REL_TOL = 1e-9
# An x-root this close to +-1 sits on the zone boundary (z = 0 or pi).
EDGE_SNAP = transfer.EDGE_SNAP


@dataclass(frozen=True)
class CriticalPoint:
    """A real critical momentum with its order and topology.

    ``kind`` is "minimum", "maximum" or "saddle"; ``index`` is +1, -1, 0
    in the same cases.  ``leading`` is the first nonvanishing derivative
    value eps^(order)(k0).
    """

    k0: float
    omega0: float
    order: int
    leading: float
    index: int
    kind: str


@dataclass(frozen=True)
class EpOrder:
    """A coalescence of ``order`` eigenvalues at momentum z0 (complex in
    general) of the transfer matrix at a fixed energy."""

    z0: complex
    order: int


@dataclass(frozen=True)
class EpSplitting:
    """Leading-order momentum splitting at energy offsets +-delta.

    ``roots_above``/``roots_below`` hold the p predicted momenta
    k0 + B_p * phase at omega0 + delta and omega0 - delta, with
    B_p = (p! delta / |a_p|)^(1/p).
    """

    k0: float
    order: int
    delta: float
    radius: float
    roots_above: tuple
    roots_below: tuple
    real_count_above: int
    real_count_below: int


def _derivative_scale(model: LatticeModel, r: int) -> float:
    m = np.arange(1, model.n + 1, dtype=float)
    return 2.0 * float(np.abs(np.asarray(model.hoppings)) @ m**r)


def classify(model: LatticeModel, k0: float, tol_rel: float = CLASSIFY_REL_TOL) -> CriticalPoint:
    """Order, leading derivative and topology of the critical point at k0.

    Requires eps'(k0) = 0 to tolerance.  The order is the smallest p >= 2
    with |eps^(p)(k0)| above tol_rel times its coefficient scale; raises
    if no p <= 2n qualifies, which cannot happen for a valid model.
    """
    a1 = float(dispersion_derivative(model, k0, 1).real)
    if abs(a1) > tol_rel * _derivative_scale(model, 1):
        raise ValueError(f"k0={k0} is not a critical momentum: eps'(k0)={a1:.3e}")
    for p in range(2, 2 * model.n + 1):
        ap = float(dispersion_derivative(model, k0, p).real)
        if abs(ap) > tol_rel * _derivative_scale(model, p):
            index = 0 if p % 2 else int(math.copysign(1.0, ap))
            kind = "saddle" if p % 2 else ("minimum" if ap > 0 else "maximum")
            return CriticalPoint(
                k0=float(k0),
                omega0=float(dispersion(model, k0).real),
                order=p,
                leading=ap,
                index=index,
                kind=kind,
            )
    raise ValueError(
        f"all derivatives up to order {2 * model.n} vanish at k0={k0}; "
        "inconsistent input for a nonzero model"
    )


def find_critical_points(model: LatticeModel) -> list:
    """All real critical points of the band, classified.

    eps'(k) factors as 2 sin(k) Q(cos k) with Q of degree n-1, so the
    critical momenta are k = 0, pi plus +-arccos of the real roots of Q
    inside (-1, 1); interior points are listed with both signs.  Sorted
    by momentum.
    """
    ks = [0.0, math.pi]
    for x in _interior_critical_x(model):
        k = math.acos(x)
        ks.extend([k, -k])
    points = [classify(model, k) for k in sorted(ks)]
    return points


def ep_orders_at(model: LatticeModel, omega0: float) -> list:
    """All eigenvalue coalescences of T(omega0), found from x-root
    multiplicities of the dispersion polynomial.

    Mapping rule: an s-fold root at x = +-1 is a single coalescence of
    order 2s at z = 0 or pi (both momentum signs merge there); an s-fold
    root elsewhere gives a pair of order-s coalescences at +-arccos(x),
    complex momenta included.  Simple roots away from the boundary are
    not coalescences and are omitted.
    """
    poly = dispersion_polynomial(model, omega0)
    eps = []
    for x, mult in polyroots.cheb_roots_with_multiplicity(np.asarray(poly.cheb)):
        if abs(x - 1.0) <= EDGE_SNAP:
            eps.append(EpOrder(z0=0.0 + 0.0j, order=2 * mult))
        elif abs(x + 1.0) <= EDGE_SNAP:
            eps.append(EpOrder(z0=complex(math.pi), order=2 * mult))
        elif mult >= 2:
            z = complex(np.arccos(x))
            eps.append(EpOrder(z0=z, order=mult))
            eps.append(EpOrder(z0=complex(reduce_to_zone(-z.real), -z.imag), order=mult))
    eps.sort(key=lambda e: (e.z0.real, e.z0.imag))
    return eps


def _critical_energies(model: LatticeModel) -> list:
    return sorted({cp.omega0 for cp in find_critical_points(model)})


def index_from_counts(model: LatticeModel, omega0: float, delta: float | None = None) -> int:
    """Sign of c(omega0 + delta) - c(omega0 - delta), c the unit-modulus
    eigenvalue count.

    +1 at minima, -1 at maxima, 0 at saddles.  With no explicit delta a
    default of 1e-6 times the bandwidth is used and halved until no other
    critical energy intrudes on (omega0 - delta, omega0 + delta); an
    explicit delta is used as-is with a warning on intrusion.
    """
    lo, hi = band_extent(model)
    others = [w for w in _critical_energies(model) if abs(w - omega0) > 1e-10 * max(1.0, hi - lo)]

    def intrudes(d: float) -> bool:
        return any(omega0 - d < w < omega0 + d for w in others)

    if delta is None:
        delta = 1e-6 * (hi - lo)
        for _ in range(60):
            if not intrudes(delta):
                break
            delta /= 2.0
    if delta <= 0:
        raise ValueError("delta must be positive")
    if intrudes(delta):
        warnings.warn(
            f"another critical energy lies within (omega0 - delta, omega0 + delta) "
            f"for omega0={omega0}, delta={delta}",
            stacklevel=2,
        )
    above = transfer.unit_modulus_count(model, omega0 + delta)
    below = transfer.unit_modulus_count(model, omega0 - delta)
    return int(np.sign(above - below))


def ep_splitting(model: LatticeModel, k0: float, delta: float) -> EpSplitting:
    """Predicted momentum splitting z(k0) at energies omega0 +- delta.

    To leading order the p coalesced momenta separate onto a circle of
    radius B_p = (p! delta / |a_p|)^(1/p): with a_p > 0 the phases are
    exp(i 2 m pi / p) above and exp(i (2m+1) pi / p) below, and the two
    sets swap for a_p < 0.  Real-root counts follow: (2, 0) at a minimum,
    (0, 2) at a maximum, (1, 1) at a saddle.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    cp = classify(model, k0)
    p = cp.order
    radius = (math.factorial(p) * delta / abs(cp.leading)) ** (1.0 / p)
    m = np.arange(p)
    even_phases = np.exp(2j * math.pi * m / p)
    odd_phases = np.exp(1j * (2 * m + 1) * math.pi / p)
    if cp.leading > 0:
        ph_above, ph_below = even_phases, odd_phases
    else:
        ph_above, ph_below = odd_phases, even_phases
    above = tuple(sorted((complex(k0 + radius * w) for w in ph_above), key=lambda z: (z.real, z.imag)))
    below = tuple(sorted((complex(k0 + radius * w) for w in ph_below), key=lambda z: (z.real, z.imag)))

    def count_real(ws) -> int:
        return int(sum(1 for w in ws if abs(w.imag) <= 1e-12 * max(1.0, abs(w.real))))

    return EpSplitting(
        k0=float(k0),
        order=p,
        delta=float(delta),
        radius=float(radius),
        roots_above=above,
        roots_below=below,
        real_count_above=count_real(above),
        real_count_below=count_real(below),
    )


def critical_report(points) -> list:
    """JSON-ready report rows for a sequence of critical points."""
    return [
        {
            "k0": cp.k0,
            "omega0": cp.omega0,
            "order": cp.order,
            "a_p": cp.leading,
            "index": cp.index,
            "class": cp.kind,
        }
        for cp in points
    ]
