"""Decay certificates for retarded integral inequalities and delay equations."""

from .certificate import (CertificateConstants, ExpDecayCertificate, InequalityData, Verdict, bounds, chen_rate,
                          derive_constants, exp_certificate, halanay_map, hale_envelope)
from .dde import DelaySystemSpec, History, Trajectory, integrate, random_histories, segment_norm, verify_envelope
from .errors import DelayCertError
from .kernels import (CoefficientIntegral, ExponentialScaled, FutureExponential, PowerSingular, QuadratureConfig,
                      ScaledBy, Tabulated, decay_majorant, kappa_sup, theta_sup)

__version__ = "0.1.0"

__all__ = [
    "CertificateConstants",
    "ExpDecayCertificate",
    "InequalityData",
    "Verdict",
    "bounds",
    "chen_rate",
    "derive_constants",
    "exp_certificate",
    "halanay_map",
    "hale_envelope",
    "DelaySystemSpec",
    "History",
    "Trajectory",
    "integrate",
    "random_histories",
    "segment_norm",
    "verify_envelope",
    "DelayCertError",
    "CoefficientIntegral",
    "ExponentialScaled",
    "FutureExponential",
    "PowerSingular",
    "QuadratureConfig",
    "ScaledBy",
    "Tabulated",
    "decay_majorant",
    "kappa_sup",
    "theta_sup",
]
