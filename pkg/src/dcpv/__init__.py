"""Dual-level cancelable palmprint verification.

A feature vector is protected twice: a keyed orthonormal projection followed
by median binarization gives a revocable bit template, and the template is
then hidden inside a negative database. Matching works directly on the
negative database.
"""

from .cancelable import (
    CancelableTemplate,
    FeatureVector,
    ProjectionKey,
    binarize,
    gen_projection_matrix,
    project,
    protect,
)
from .errors import (
    DcpvError,
    DegenerateInputError,
    DimensionError,
    FormatError,
    ParameterError,
    RecordNotFoundError,
    SecurityPolicyError,
)
from .kernels import BACKEND_NAME
from .ndb import (
    IntervalSet,
    NegativeDatabase,
    generate_ndb,
    match_dictionary,
    match_fast,
    match_packed,
    to_real,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "CancelableTemplate",
    "DcpvError",
    "DegenerateInputError",
    "DimensionError",
    "FeatureVector",
    "FormatError",
    "IntervalSet",
    "NegativeDatabase",
    "ParameterError",
    "ProjectionKey",
    "RecordNotFoundError",
    "SecurityPolicyError",
    "binarize",
    "gen_projection_matrix",
    "generate_ndb",
    "match_dictionary",
    "match_fast",
    "match_packed",
    "project",
    "protect",
    "to_real",
    "verify",
]
