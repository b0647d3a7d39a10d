"""riccikit: generalized Ricci curvature tensors for Hessian, product and
conformal metrics on convex domains, and numerical verification of the
weighted Poincare, Brascamp-Lieb, log-Sobolev and Hardy-type inequalities
they imply."""

from . import (
    bodies,
    catalog,
    engine,
    errors,
    families,
    fields,
    measures,
    tensor_core,
    transport,
)

__version__ = "0.1.0"

__all__ = [
    "bodies",
    "catalog",
    "engine",
    "errors",
    "families",
    "fields",
    "measures",
    "tensor_core",
    "transport",
    "__version__",
]
