"""pydantic request/response models shared by the HTTP service and the
CLI thin client.

Every experiment request is a flat parameter set (one config file per
experiment; CLI flags override fields).  Responses carry a report dict
plus named tables (header + rows) that the client renders to CSV, and the
resolved config echo used for the reproducibility manifest.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

SCHEMA_VERSION = "percolab.v1"


class RequestBase(BaseModel):
    seed: int = 0

    model_config = {"extra": "forbid"}


class SizesRequest(RequestBase):
    d: int = Field(ge=1)
    p: Union[float, Literal["auto"]] = "auto"
    samples: int = Field(default=100_000, ge=1)
    cap: int = Field(default=100_000, ge=1)
    fit_min: int = Field(default=32, ge=1)
    fit_max: int = Field(default=2048, ge=2)

    @field_validator("p")
    @classmethod
    def _p_range(cls, v):
        if v != "auto" and not 0.0 <= v <= 1.0:
            raise ValueError("p must be in [0,1] or 'auto'")
        return v


class WindowedRequest(RequestBase):
    d: int = Field(ge=1)
    p: Union[float, Literal["auto"]] = "auto"
    n: int = Field(ge=1)
    window: float = Field(default=0.1, gt=0.0, lt=1.0)
    samples: int = Field(default=1_000_000, ge=1)
    target_accepted: Optional[int] = Field(default=None, ge=1)
    max_sites_per_cluster: int = Field(default=256, ge=1)

    @field_validator("p")
    @classmethod
    def _p_range(cls, v):
        if v != "auto" and not 0.0 <= v <= 1.0:
            raise ValueError("p must be in [0,1] or 'auto'")
        return v


class QnRequest(WindowedRequest):
    k2_max: float = Field(default=9.0, gt=0.0)
    k_points: int = Field(default=19, ge=2)
    nboot: int = Field(default=200, ge=10)


class Q3Request(WindowedRequest):
    k_values: list[float] = Field(default=[0.0, 0.75, 1.5, 2.25, 3.0])
    nboot: int = Field(default=200, ge=10)
    scale_d: Optional[float] = Field(default=None, gt=0.0,
                                     description="D from a two-point fit; "
                                     "fitted from this run when omitted")


class IseRequest(RequestBase):
    a2_k2_grid: Optional[str] = Field(default="0:0.25:10",
                                      description="lo:step:hi for k^2")
    a3_k_values: Optional[list[float]] = None
    abs_tol: float = Field(default=1e-10, gt=0.0)


class CoeffRequest(RequestBase):
    C: float = Field(default=1.0, gt=0.0)
    D: float = Field(default=1.0, gt=0.0)
    k2: float = Field(default=0.0, ge=0.0)
    n_list: list[int] = Field(default=[10, 100, 1000, 10000])
    series_coeffs: Optional[list[float]] = Field(
        default=None, description="optional plain series: report norms and "
        "round-trip contour coefficients")
    radius: float = Field(default=0.5, gt=0.0)


class LemmasRequest(RequestBase):
    instances: int = Field(default=100_000, ge=1)


class DiagramsRequest(RequestBase):
    action: Literal["triangle", "irbound", "square", "msquare"]
    d: int = Field(ge=1)
    p: Union[float, Literal["auto"]] = "auto"
    p_fraction: float = Field(default=1.0, gt=0.0, le=1.0,
                              description="multiply resolved p by this "
                              "(e.g. 0.8 p_c for the subcritical triangle)")
    c: float = Field(default=1.0, gt=0.0)
    samples: int = Field(default=200_000, ge=1)
    cap: int = Field(default=1_000_000, ge=1)
    z_exponents: list[int] = Field(default=[4, 5, 6, 7, 8, 9, 10, 11, 12],
                                   description="z = 1 - 2^-j")
    sizes_samples: int = Field(default=200_000, ge=1,
                               description="msquare: samples for the "
                               "magnetization histogram")

    @field_validator("p")
    @classmethod
    def _p_range(cls, v):
        if v != "auto" and not 0.0 <= v <= 1.0:
            raise ValueError("p must be in [0,1] or 'auto'")
        return v


class PcRequest(RequestBase):
    d: int = Field(ge=2)
    radius: int = Field(default=16, ge=8)
    samples_per_probe: int = Field(default=60_000, ge=100)
    tol: float = Field(default=2e-3, gt=0.0)


class TreeRequest(RequestBase):
    law: Literal["binomial", "poisson"] = "binomial"
    m: int = Field(default=2, ge=1)
    q_num: int = Field(default=1, ge=1)
    q_den: int = Field(default=2, ge=1)
    lam: float = Field(default=1.0, gt=0.0)
    n_min: int = Field(default=64, ge=1)
    n_max: int = Field(default=4096, ge=2)
    table_points: int = Field(default=40, ge=4)


class Table(BaseModel):
    header: list[str]
    rows: list[list]


class RunResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    command: str
    config: dict
    report: dict
    tables: dict[str, Table]
    wall_time_s: float


class ErrorResponse(BaseModel):
    error: str
    code: str
