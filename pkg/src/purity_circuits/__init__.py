"""Average purity of random quantum circuits as a Markov chain on 2^n labels.

Dense and MPS evolution of purity vectors, spectra of one-period transfer
matrices, protocol rewriting, mean-field and 2D layered protocols.
"""

from .gates import (CNOT, HAAR_U4, RANDOM_A, SWAP, SYCAMORE, XY, GateCoefficients, GateParams,
                    TwoSiteMatrix, build_two_site, canonical_coeffs, gate_eigensystem,
                    mc_validate_gate, xxz)
from .protocols import (EquivalenceClass, Geometry, Protocol, build_brickwall, build_staircase,
                        canonical_pbc, canonicalize_obc, classify_pbc, default_sycamore,
                        expand_layer_protocol, parse_geometry, parse_order)
from .purity import (DenseCapError, PurityVector, RateSummary, RateTrace, i_inf, initial_vector,
                     purity_series, rate_summary, steady_vector)
from .spectral import (EigenPair, SpectralReport, expansion_report, full_spectrum,
                       ninth_eigenvector, phantom_sum, power_lambda2)
from .mps import MpsPurityState, TruncationPolicy, mps_purity_series, steady_mps
from .mean_field import mbar_matrix, mean_field_gap
from .sycamore import EffectiveEigenvalue, sycamore_lambda, sycamore_purity

__version__ = "0.1.0"
