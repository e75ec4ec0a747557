"""Transfer-matrix band analysis for 1D finite-range hopping chains.

The package computes the non-Hermitian transfer matrix of a chain with
finite-range hopping, detects and classifies the coalescences of its
eigenvalues, relates them to the critical points and density-of-states
singularities of the band, and designs hopping strengths that realize a
coalescence of any allowed order.

Every public function is pure: no shared mutable state, safe to call
concurrently.
"""

from .model import (
    LatticeModel,
    ModelError,
    DispersionPolynomial,
    dispersion,
    dispersion_derivative,
    dispersion_polynomial,
    band_extent,
    reduce_to_zone,
)
from .transfer import (
    TransferMatrix,
    EigenPair,
    EigenSet,
    EigensolveError,
    build_transfer,
    transfer_entries,
    spectrum_direct,
    spectrum_via_dispersion,
    eigenvector,
    unit_modulus_count,
    write_eigenset_csv,
)
from .critical import (
    CriticalPoint,
    EpOrder,
    EpSplitting,
    classify,
    find_critical_points,
    ep_orders_at,
    index_from_counts,
    ep_splitting,
    critical_report,
)
from .dos import (
    DosCurve,
    integrated_dos,
    dos_numeric,
    dos_analytic_near_ep,
    fit_exponent,
    dos_curve,
    dos_curve_near,
)
from .designer import (
    DesignError,
    DesignRequest,
    DesignResult,
    SampleOutcome,
    allowed_orders,
    design_even_ep,
    design_odd_ep,
    hypersurface_sample,
    order_five_scan,
)
from .verify import run_verify

__version__ = "0.1.0"
