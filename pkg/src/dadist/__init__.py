"""Multimatrix and multimatricvariate distributions over real normed division algebras."""
from .algebra import Algebra, DAMatrix, HermitianPD
from .errors import (ConfigurationError, DadistError, DegenerateInputError,
                     DomainError, SingularityError, UnsupportedAlgebraError)

__version__ = "0.1.0"

__all__ = ["Algebra", "DAMatrix", "HermitianPD", "DadistError", "DomainError",
           "ConfigurationError", "SingularityError", "UnsupportedAlgebraError",
           "DegenerateInputError", "__version__"]
