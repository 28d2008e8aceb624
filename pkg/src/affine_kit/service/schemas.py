"""Request/response models for the HTTP service.

Complex numbers travel as {"re": float, "im": float} objects; affine models
travel as the same JSON documents the CLI reads and writes.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

_MODEL_FIELD_OK = ConfigDict(protected_namespaces=())


class ComplexNumber(BaseModel):
    re: float
    im: float = 0.0

    def to_complex(self):
        return complex(self.re, self.im)

    @classmethod
    def wrap(cls, z):
        return cls(re=float(np.real(z)), im=float(np.imag(z)))


def to_cvector(items):
    return np.array([c.to_complex() for c in items])


class ValidateRequest(BaseModel):
    model_config = _MODEL_FIELD_OK
    model: dict


class TransformRequest(BaseModel):
    model_config = _MODEL_FIELD_OK
    model: dict
    x: list[float]
    t: float = Field(ge=0.0)
    u: list[ComplexNumber]
    tol: float = Field(default=1e-9, gt=0.0)


class TransformResponse(BaseModel):
    value: ComplexNumber
    killed: bool


class RiccatiRequest(BaseModel):
    model_config = _MODEL_FIELD_OK
    model: dict
    u: list[ComplexNumber]
    horizon: float = Field(gt=0.0)
    tol: float = Field(default=1e-9, gt=0.0)


class RiccatiNode(BaseModel):
    t: float
    phi: ComplexNumber
    psi: list[ComplexNumber]


class RiccatiResponse(BaseModel):
    status: str
    t_star: Optional[float] = None
    tol: float
    horizon: float
    grid: list[RiccatiNode]


class SimulateRequest(BaseModel):
    model_config = _MODEL_FIELD_OK
    model: dict
    x0: list[float]
    horizon: float = Field(gt=0.0)
    dt: float = Field(default=1e-3, gt=0.0)
    n_paths: int = Field(default=10_000, ge=1, le=1_000_000)
    seed: int = 0
    scheme: str = "euler_project"
    record_every: int = Field(default=1, ge=1)
    threads: int = Field(default=1, ge=1, le=64)


class OracleRequest(BaseModel):
    name: str
    t: float = Field(default=0.5, ge=0.0)
    u: Optional[list[ComplexNumber]] = None
    x: Optional[list[float]] = None


class VerifyRequest(BaseModel):
    suite: str = "all"
    seed: int = 42
    n_paths: Optional[int] = Field(default=None, ge=100, le=1_000_000)
    threads: int = Field(default=1, ge=1, le=64)
