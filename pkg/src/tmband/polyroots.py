"""Root finding for polynomials held in Chebyshev bases.

Roots are computed from the colleague matrix (``numpy.polynomial.chebyshev``
does the backward-stable eigensolve), never after converting to the power
basis.  Multiplicities are recovered from the derivative chain: a root of
multiplicity s is a simple root of the (s-1)-th derivative, where it is
computed to full precision, while the plain eigensolve scatters it over a
disc of radius ~ eps^(1/s).
"""

from __future__ import annotations

import warnings

import numpy as np
from numpy.polynomial import chebyshev as _cheb

__all__ = ["chebu_to_chebt", "cheb_roots", "cheb_roots_with_multiplicity"]

# |P^(j)(x)| below REL_TOL times the coefficient scale counts as vanishing.
REL_TOL = 1e-8
# Two distinct root centers closer than this get flagged as ill conditioned.
CLUSTER_WARN_SPACING = 1e-10


def chebu_to_chebt(cu) -> np.ndarray:
    """Convert second-kind (U) basis coefficients to first-kind (T) basis.

    Uses U_j = 2*(T_j + T_{j-2} + ...), with the trailing T_0 term (even j)
    counted once.  Exact in floating point for modest degrees.
    """
    cu = np.asarray(cu, dtype=float)
    ct = np.zeros_like(cu)
    for j, coef in enumerate(cu):
        if coef == 0.0:
            continue
        idx = np.arange(j, -1, -2)
        ct[idx] += 2.0 * coef
        if j % 2 == 0:
            ct[0] -= coef  # T_0 enters once, not twice
    return ct


def cheb_roots(c) -> np.ndarray:
    """All complex roots of a T-basis polynomial (empty for degree < 1)."""
    c = np.asarray(c, dtype=float)
    if len(c) < 2 or np.all(c[1:] == 0.0):
        return np.zeros(0, dtype=complex)
    return np.atleast_1d(_cheb.chebroots(c)).astype(complex)


def cheb_roots_with_multiplicity(c, rel_tol: float = REL_TOL):
    """Roots of a T-basis polynomial with multiplicities.

    Returns a list of ``(root, multiplicity)`` pairs whose multiplicities
    sum to the degree, sorted by (real, imag).  A candidate center for an
    s-fold root is taken from the simple roots of the (s-1)-th derivative
    and accepted when P and all lower derivatives vanish there relative to
    their coefficient scale; the center then claims the s nearest raw
    roots.  Distinct centers closer than ``CLUSTER_WARN_SPACING`` trigger
    a warning but are kept separate.
    """
    c = np.asarray(c, dtype=float)
    degree = len(c) - 1
    if degree < 1:
        return []

    derivs = [c]
    while len(derivs[-1]) > 1:
        derivs.append(_cheb.chebder(derivs[-1]))
    scales = [max(np.abs(d).sum(), np.finfo(float).tiny) for d in derivs]

    roots = cheb_roots(c)
    used = np.zeros(degree, dtype=bool)
    found = []

    for s in range(degree, 1, -1):
        if int((~used).sum()) < s:
            continue
        # Scattered eigensolve roots of an s-fold zero stay inside this disc.
        claim_radius = 10.0 * 1e-11 ** (1.0 / s)
        for center in cheb_roots(derivs[s - 1]):
            if abs(_cheb.chebval(center, derivs[s])) <= rel_tol * scales[s]:
                continue  # at least (s+1)-fold, handled at a higher level
            if any(
                abs(_cheb.chebval(center, derivs[j])) > rel_tol * scales[j]
                for j in range(s)
            ):
                continue
            free = np.flatnonzero(~used)
            if len(free) < s:
                continue
            order = np.argsort(np.abs(roots[free] - center))
            claim = free[order[:s]]
            if np.abs(roots[claim] - center).max() > claim_radius:
                continue
            used[claim] = True
            found.append((complex(center), s))

    for i in np.flatnonzero(~used):
        found.append((complex(roots[i]), 1))

    found.sort(key=lambda item: (item[0].real, item[0].imag))
    centers = [r for r, _ in found]
    for a, b in zip(centers, centers[1:]):
        if abs(a - b) < CLUSTER_WARN_SPACING:
            warnings.warn(
                f"ill-conditioned root cluster: centers {a} and {b} closer "
                f"than {CLUSTER_WARN_SPACING}",
                stacklevel=2,
            )
    return found
