"""Verification toolkit for aggregating k-ary relations."""

from .core import BudgetExceeded, Domain, KRelation, RelationError
from .models import PropertySpec, betweenness_from_order, cyclic_seating, enumerate_models

__version__ = "0.1.0"

__all__ = ["BudgetExceeded", "Domain", "KRelation", "RelationError", "PropertySpec",
           "betweenness_from_order", "cyclic_seating", "enumerate_models", "__version__"]
