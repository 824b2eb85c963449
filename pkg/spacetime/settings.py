"""
Configuration models for solves, studies and problems
"""

from typing import Optional, Tuple

try:
    from pydantic.v1 import BaseModel, validator
except ImportError:
    from pydantic import BaseModel, validator

from spacetime.discretization import DEFAULT_KRON_CAP, mms_convdiff, mms_diffusion
from spacetime.krylov import DEFAULT_SPECTRUM_CAP

PROBLEMS = ("diffusion", "convdiff")


class SolverConfig(BaseModel):
    tol: float = 1e-8
    m: int = 30
    tol_H: float = 1e-8
    max_restarts: int = 500

    class Config:
        allow_mutation = False

    @validator('tol', 'tol_H')
    def positive(cls, v, field):
        if not v > 0:
            raise ValueError(f"{field.name} must be positive, got {v}")
        return v

    @validator('m')
    def at_least_one(cls, v):
        if v < 1:
            raise ValueError(f"restart parameter m must be >= 1, got {v}")
        return v

    @validator('max_restarts')
    def non_negative(cls, v):
        if v < 0:
            raise ValueError(f"max_restarts must be >= 0, got {v}")
        return v

    @classmethod
    def for_level(cls, j, m_factor=30, **overrides):
        """m = m_factor * (j + 1)."""
        return cls(m=m_factor * (j + 1), **overrides)


class StudySettings(BaseModel):
    bounds: Tuple[Tuple[float, float], Tuple[float, float]] = ((-1.0, 1.0), (0.0, 1.0))
    kron_cap: int = DEFAULT_KRON_CAP
    spectrum_cap: int = DEFAULT_SPECTRUM_CAP
    repeats: int = 5

    class Config:
        allow_mutation = False

    @validator('bounds')
    def ordered(cls, v):
        for lo, hi in v:
            if not lo < hi:
                raise ValueError(f"degenerate interval [{lo}, {hi}]")
        return v

    @validator('kron_cap', 'spectrum_cap', 'repeats')
    def positive_count(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be >= 1, got {v}")
        return v


class ProblemSettings(BaseModel):
    problem: str = "diffusion"
    nu: Optional[float] = None
    c: Optional[float] = None

    class Config:
        allow_mutation = False

    @validator('problem')
    def known_problem(cls, v):
        if v not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {v!r}")
        return v

    @validator('nu')
    def non_negative_nu(cls, v):
        if v is not None and v < 0:
            raise ValueError(f"nu must be non-negative, got {v}")
        return v

    def build(self):
        if self.problem == "diffusion":
            if self.c:
                raise ValueError("the diffusion problem has no convection term; use convdiff")
            return mms_diffusion(**({} if self.nu is None else {'nu': self.nu}))
        overrides = {k: v for k, v in (('nu', self.nu), ('c', self.c)) if v is not None}
        return mms_convdiff(**overrides)
