"""Transfer matrix of the chain and its spectrum by two independent routes.

For a range-n chain the transfer matrix T(omega) is the real 2n x 2n
companion-form matrix of the discrete eigenvalue recursion at energy
omega.  Its eigenvalues are exp(-i z) over the 2n momenta z solving
omega = eps(z); they can therefore be computed either by a dense
eigensolve of T itself (``spectrum_direct``) or from the roots of the
degree-n polynomial in x = cos z (``spectrum_via_dispersion``).  The
polynomial route carries exact multiplicity information and is the
trusted one for coalescence detection.

All functions are pure; EigenSet values are immutable and safe to share
across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .model import LatticeModel, dispersion_polynomial, reduce_to_zone
from . import polyroots

__all__ = [
    "EigensolveError",
    "TransferMatrix",
    "EigenPair",
    "EigenSet",
    "transfer_entries",
    "build_transfer",
    "spectrum_direct",
    "spectrum_via_dispersion",
    "eigenvector",
    "unit_modulus_count",
    "write_eigenset_csv",
]

# Default tolerance on ||lambda| - 1| when flagging unit-modulus eigenvalues.
UNIT_MODULUS_TOL = 1e-9
# An x-root this close to +-1 is treated as sitting on the zone boundary.
EDGE_SNAP = 1e-8
# Residual contract for the dense eigensolve.
DIRECT_RESIDUAL_TOL = 1e-8

EIGENSET_CSV_COLUMNS = (
    "omega",
    "re_lambda",
    "im_lambda",
    "re_z",
    "im_z",
    "multiplicity",
    "unit_modulus",
)


class EigensolveError(RuntimeError):
    """Dense eigensolve failed to converge or missed its residual contract."""


@dataclass(frozen=True)
class TransferMatrix:
    """Energy and the dense 2n x 2n array of the transfer matrix."""

    omega: float
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0] // 2


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue record: lambda = exp(-i z), cluster size, unit flag."""

    eigenvalue: complex
    z: complex
    multiplicity: int
    unit_modulus: bool


@dataclass(frozen=True)
class EigenSet:
    """All 2n eigenvalues of T(omega), multiplicities included."""

    omega: float
    pairs: tuple

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues expanded with multiplicity (length 2n)."""
        out = []
        for p in self.pairs:
            out.extend([p.eigenvalue] * p.multiplicity)
        return np.asarray(out, dtype=complex)

    def momenta(self) -> np.ndarray:
        out = []
        for p in self.pairs:
            out.extend([p.z] * p.multiplicity)
        return np.asarray(out, dtype=complex)

    @property
    def unit_modulus_total(self) -> int:
        return sum(p.multiplicity for p in self.pairs if p.unit_modulus)


def transfer_entries(model: LatticeModel, omega) -> np.ndarray:
    """Dense 2n x 2n array of T(omega); complex omega gives complex entries.

    Nonzero entries (1-based indexing): ones on the subdiagonal, and a
    first row -t_{n-1}/t_n, ..., -t_1/t_n, -omega/t_n, -t_1/t_n, ...,
    -t_n/t_n.  The determinant is 1 by construction.
    """
    n = model.n
    t = model.hoppings
    tn = t[-1]
    size = 2 * n
    dtype = complex if isinstance(omega, complex) else float
    mat = np.zeros((size, size), dtype=dtype)
    mat[np.arange(1, size), np.arange(0, size - 1)] = 1.0
    for j in range(1, n):
        mat[0, j - 1] = -t[n - j - 1] / tn
    mat[0, n - 1] = -omega / tn
    for j in range(n + 1, size + 1):
        mat[0, j - 1] = -t[j - n - 1] / tn
    return mat


def build_transfer(model: LatticeModel, omega: float) -> TransferMatrix:
    """Assemble T(omega) at a real energy for the given chain."""
    return TransferMatrix(omega=float(omega), entries=transfer_entries(model, float(omega)))


def _zone_fix(z: complex) -> complex:
    """Normalize the real part of a momentum into (-pi, pi]."""
    return complex(reduce_to_zone(z.real), z.imag)


def spectrum_direct(tm: TransferMatrix, tol: float = UNIT_MODULUS_TOL) -> EigenSet:
    """Spectrum from a dense eigensolve of the transfer matrix itself.

    Momenta are recovered as z = i log(lambda) on the principal branch.
    Raises EigensolveError if the QR iteration fails to converge or any
    eigenpair residual exceeds ``DIRECT_RESIDUAL_TOL`` times ||T||.
    Defective eigenvalues come out scattered, so every record here has
    multiplicity 1; use the dispersion route for coalescence structure.
    """
    mat = tm.entries
    try:
        lam, vec = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise EigensolveError(
            f"eigensolve did not converge within the LAPACK iteration budget: {exc}"
        ) from exc
    scale = np.linalg.norm(mat)
    resid = np.linalg.norm(mat @ vec - vec * lam, axis=0)
    worst = float(resid.max())
    if worst > DIRECT_RESIDUAL_TOL * scale:
        raise EigensolveError(
            f"eigenpair residual {worst:.3e} exceeds {DIRECT_RESIDUAL_TOL:.0e} * ||T||"
        )
    pairs = []
    for value in sorted(lam, key=lambda v: (v.real, v.imag)):
        z = _zone_fix(1j * np.log(complex(value)))
        pairs.append(
            EigenPair(
                eigenvalue=complex(value),
                z=z,
                multiplicity=1,
                unit_modulus=bool(abs(abs(value) - 1.0) <= tol),
            )
        )
    return EigenSet(omega=tm.omega, pairs=tuple(pairs))


def _pairs_from_root(x: complex, mult: int, tol: float):
    """Map one x-root to its one or two eigenvalue records.

    A root on the zone boundary (x = +-1) carries both momentum signs at
    once, so it yields a single record of doubled multiplicity at z = 0
    or pi.  Any other root yields records at +-arccos(x); for a real
    in-band root both momenta are real and the eigenvalues are unit
    modulus exactly.
    """
    if abs(x - 1.0) <= EDGE_SNAP and abs(x.imag) <= EDGE_SNAP:
        return [EigenPair(1.0 + 0.0j, 0.0 + 0.0j, 2 * mult, True)]
    if abs(x + 1.0) <= EDGE_SNAP and abs(x.imag) <= EDGE_SNAP:
        return [EigenPair(-1.0 + 0.0j, math.pi + 0.0j, 2 * mult, True)]
    if x.imag == 0.0 and abs(x.real) <= 1.0:
        z = math.acos(x.real)
        out = []
        for zz in (z, -z):
            out.append(EigenPair(complex(np.exp(-1j * zz)), complex(zz), mult, True))
        return out
    z = complex(np.arccos(x))
    out = []
    for zz in (z, -z):
        zz = _zone_fix(zz)
        lam = complex(np.exp(-1j * zz))
        out.append(EigenPair(lam, zz, mult, bool(abs(abs(lam) - 1.0) <= tol)))
    return out


def spectrum_via_dispersion(
    model: LatticeModel, omega: float, tol: float = UNIT_MODULUS_TOL
) -> EigenSet:
    """Spectrum from the roots of the dispersion polynomial in x = cos z.

    Each of the n roots (with multiplicity, established through the
    derivative chain of the polynomial) maps to momenta +-arccos(x) and
    eigenvalues exp(-i z).  Roots on the zone boundary double up, so the
    multiplicities always sum to 2n.  Unit-modulus flags are exact for
    real in-band roots rather than thresholded.
    """
    poly = dispersion_polynomial(model, omega)
    pairs = []
    for x, mult in polyroots.cheb_roots_with_multiplicity(np.asarray(poly.cheb)):
        pairs.extend(_pairs_from_root(x, mult, tol))
    pairs.sort(key=lambda p: (p.eigenvalue.real, p.eigenvalue.imag))
    return EigenSet(omega=float(omega), pairs=tuple(pairs))


def eigenvector(model: LatticeModel, z) -> np.ndarray:
    """Bloch eigenvector of T at momentum z: element j is exp(-i z (n-j+1)).

    Satisfies T(eps(z)) v = exp(-i z) v for any complex z.
    """
    n = model.n
    powers = np.arange(n, -n, -1)
    return np.exp(-1j * complex(z) * powers)


def unit_modulus_count(
    model: LatticeModel, omega: float, tol: float = UNIT_MODULUS_TOL
) -> int:
    """Number of unit-modulus eigenvalues of T(omega), with multiplicity.

    Counted from the dispersion-polynomial roots: real roots inside
    [-1, 1] contribute exactly (no modulus thresholding), other roots
    fall back to ||lambda| - 1| <= tol.  Always even, and zero outside
    the band.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return spectrum_via_dispersion(model, omega, tol=tol).unit_modulus_total


def write_eigenset_csv(path, eigensets) -> None:
    """Write eigenvalue records as CSV, one row per record.

    Columns: omega, re_lambda, im_lambda, re_z, im_z, multiplicity,
    unit_modulus (0/1).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EIGENSET_CSV_COLUMNS)
        for es in eigensets:
            for p in es.pairs:
                writer.writerow(
                    [
                        f"{es.omega:.17g}",
                        f"{p.eigenvalue.real:.17g}",
                        f"{p.eigenvalue.imag:.17g}",
                        f"{p.z.real:.17g}",
                        f"{p.z.imag:.17g}",
                        p.multiplicity,
                        int(p.unit_modulus),
                    ]
                )
