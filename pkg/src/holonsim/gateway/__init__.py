from .app import create_app, serve
from .service import (
    InvalidOverridePlan,
    ManagedRun,
    RunManager,
    UnknownApproval,
    UnknownPassenger,
    UnknownRun,
)

__all__ = [
    "create_app",
    "serve",
    "RunManager",
    "ManagedRun",
    "UnknownRun",
    "UnknownPassenger",
    "UnknownApproval",
    "InvalidOverridePlan",
]
