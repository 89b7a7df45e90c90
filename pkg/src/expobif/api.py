"""HTTP service over the core package.  The CLI talks to this app, in-process or remotely."""
from __future__ import annotations

import cmath
import math
from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field, field_validator

from . import __version__
from . import addresses as A
from .dynamics import trace_dynamic_ray
from .errors import ExpobifError, ValidationError
from .internal import land_internal_ray, trace_internal_ray
from .parameter import find_component_parameter, period_one_record, trace_parameter_ray
from .render import RenderConfig, render
from .verify import CRITERIA, run_all

app = FastAPI(title="expobif", version=__version__)

STATUS = {2: 400, 3: 500}
MEDIA = {"ppm": "image/x-portable-pixmap", "png": "image/png"}


@app.exception_handler(ExpobifError)
async def _expobif_error(request: Request, exc: ExpobifError):
    return JSONResponse(exc.to_dict(), status_code=STATUS.get(exc.exit_code, 500))


@app.exception_handler(RequestValidationError)
async def _request_error(request: Request, exc: RequestValidationError):
    errs = [{"loc": list(e["loc"]), "msg": e["msg"]} for e in exc.errors()]
    msg = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in errs)
    return JSONResponse({"code": "validation", "message": msg, "details": {"errors": errs}}, status_code=400)


# -- models -------------------------------------------------------------------------

Pair = tuple[float, float]


def _address(text: str) -> A.ExtAddress:
    return A.parse_address(text)


def _infinite(text: str) -> A.Infinite:
    s = _address(text)
    if not isinstance(s, A.Infinite):
        raise ValidationError(f"{text!r} is not an infinite address")
    return s


def _intermediate(text: str) -> A.Intermediate:
    s = _address(text)
    if not isinstance(s, A.Intermediate):
        raise ValidationError(f"{text!r} is not an intermediate address")
    return s


class RenderRequest(BaseModel):
    region: tuple[float, float, float, float]
    width: int = Field(gt=0, le=20000)
    height: int = Field(gt=0, le=20000)
    max_iter: int = Field(200, gt=0)
    period_cap: int = Field(8, gt=0)
    palette: Literal["period", "gray"] = "period"
    format: Literal["ppm", "png"] = "ppm"


class TraceRange(BaseModel):
    t: Pair
    steps: int = Field(100, ge=1, le=100000)

    @field_validator("t")
    @classmethod
    def _increasing(cls, v):
        if not v[0] < v[1]:
            raise ValueError("t range must be increasing")
        return v


class DynamicTraceRequest(TraceRange):
    kappa: Pair
    address: str
    seed_tol: float = Field(1e-9, gt=0)


class ParameterTraceRequest(TraceRange):
    address: str


class InternalTraceRequest(TraceRange):
    address: Optional[str] = None
    period: Optional[int] = Field(None, ge=1)
    h: float
    R: float = 10.0


class TraceResponse(BaseModel):
    kind: str
    address: str
    columns: list[str]
    rows: list[list[float]]


class ComponentRequest(BaseModel):
    address: Optional[str] = None
    period: Optional[int] = Field(None, ge=1)
    R: float = 10.0
    boundary_points: int = Field(0, ge=0, le=2000)
    boundary_h: Pair = (-1.0, 1.0)
    seed_tol: float = Field(1e-6, gt=0)


class Wake(BaseModel):
    minus: str
    plus: str


class ComponentResponse(BaseModel):
    address: str
    period: int
    sample: Pair
    multiplier: Pair
    wake: Optional[Wake] = None
    boundary: Optional[list[list[float]]] = None  # rows h, re, im


class AddressRequest(BaseModel):
    address: str


class CharResponse(BaseModel):
    minus: str
    plus: str
    period: int


class WakeResponse(CharResponse):
    forbidden_kneading: str


class ItinRequest(BaseModel):
    r: str
    base: Optional[str] = None
    wake: Optional[str] = None


class ItinResponse(BaseModel):
    itinerary: Optional[str] = None
    inside: Optional[bool] = None


class KneadResponse(BaseModel):
    kneading: str


class VerifyRequest(BaseModel):
    criteria: Optional[list[int]] = None


class CriterionOut(BaseModel):
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    line: str


class VerifyResponse(BaseModel):
    passed: bool
    results: list[CriterionOut]


# -- endpoints ------------------------------------------------------------------------

@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/render")
def render_image(req: RenderRequest):
    cfg = RenderConfig(tuple(req.region), req.width, req.height, req.max_iter, req.period_cap, req.palette)
    return Response(render(cfg, req.format), media_type=MEDIA[req.format])


def _ts(req: TraceRange):
    lo, hi = req.t
    return [lo + (hi - lo) * i / req.steps for i in range(req.steps + 1)]


@app.post("/trace/dynamic", response_model=TraceResponse)
def trace_dynamic(req: DynamicTraceRequest):
    s = _infinite(req.address)
    kappa = complex(*req.kappa)
    rows = []
    for t in _ts(req):
        z = trace_dynamic_ray(kappa, s, t, tol=req.seed_tol)
        rows.append([t, z.real, z.imag])
    return TraceResponse(kind="dynamic", address=A.format_address(s), columns=["t", "re", "im"], rows=rows)


@app.post("/trace/parameter", response_model=TraceResponse)
def trace_parameter(req: ParameterTraceRequest):
    s = _infinite(req.address)
    tr = trace_parameter_ray(s, req.t[1], req.t[0], req.steps)
    rows = [[t, k.real, k.imag, r] for (t, k), r in zip(tr.samples, tr.residuals)]
    rows.reverse()  # increasing t, like the other traces
    return TraceResponse(kind="parameter", address=A.format_address(s),
                         columns=["t", "re", "im", "residual"], rows=rows)


def _component_record(address: Optional[str], period: Optional[int], R: float):
    if address is None:
        if period != 1:
            raise ValidationError("give an intermediate address (only period 1 is determined by its period)")
        return period_one_record()
    s = _address(address)
    if isinstance(s, A.Top):
        rec = period_one_record()
    elif isinstance(s, A.Intermediate):
        rec = find_component_parameter(s, R)
    else:
        raise ValidationError(f"{address!r} is not a component address (inf or an intermediate address)")
    if period is not None and period != rec.period:
        raise ValidationError(f"{address!r} has period {rec.period}, not {period}")
    return rec


@app.post("/trace/internal", response_model=TraceResponse)
def trace_internal(req: InternalTraceRequest):
    rec = _component_record(req.address, req.period, req.R)
    tr = trace_internal_ray(rec, req.h, tuple(req.t), req.steps)
    rows = []
    for t, kappa, _, mu in tr.samples:
        target = cmath.exp(complex(t, 2 * math.pi * req.h))
        k = complex(kappa)
        rows.append([t, k.real, k.imag, abs(complex(mu) - target) / abs(target)])
    return TraceResponse(kind="internal", address=A.format_address(rec.address),
                         columns=["t", "re", "im", "residual"], rows=rows)


@app.post("/component", response_model=ComponentResponse)
def component(req: ComponentRequest):
    rec = _component_record(req.address, req.period, req.R)
    out = rec.to_json()
    boundary = None
    if req.boundary_points:
        # heights are not periodic: h and h + 1 are different rays
        lo, hi = req.boundary_h
        n = req.boundary_points
        boundary = []
        for i in range(n):
            h = lo + (hi - lo) * i / max(1, n - 1)
            k = complex(land_internal_ray(rec, h, tol=req.seed_tol))
            boundary.append([h, k.real, k.imag])
    return ComponentResponse(address=out["address"], period=out["period"], sample=out["sample"],
                             multiplier=out["multiplier"], wake=out["wake"], boundary=boundary)


@app.post("/comb/char", response_model=CharResponse)
def comb_char(req: AddressRequest):
    w = A.characteristic_addresses(_intermediate(req.address))
    return CharResponse(minus=A.format_address(w.s_minus), plus=A.format_address(w.s_plus), period=w.n)


@app.post("/comb/wake", response_model=WakeResponse)
def comb_wake(req: AddressRequest):
    w = A.characteristic_addresses(_intermediate(req.address))
    return WakeResponse(minus=A.format_address(w.s_minus), plus=A.format_address(w.s_plus), period=w.n,
                        forbidden_kneading=A.format_itinerary(w.forbidden_kneading))


@app.post("/comb/knead", response_model=KneadResponse)
def comb_knead(req: AddressRequest):
    return KneadResponse(kneading=A.format_itinerary(A.kneading(_address(req.address))))


@app.post("/comb/itin", response_model=ItinResponse)
def comb_itin(req: ItinRequest):
    if (req.base is None) == (req.wake is None):
        raise ValidationError("give exactly one of base or wake")
    r = _address(req.r)
    if req.wake is not None:
        w = A.characteristic_addresses(_intermediate(req.wake))
        return ItinResponse(inside=A.wake_contains(w, r))
    return ItinResponse(itinerary=A.format_itinerary(A.itinerary(r, _address(req.base))))


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest):
    known = {k for k, _, _ in CRITERIA}
    if req.criteria is not None and not set(req.criteria) <= known:
        raise ValidationError(f"unknown criteria {sorted(set(req.criteria) - known)}")
    results = run_all(req.criteria)
    return VerifyResponse(passed=all(r.passed for r in results), results=[
        CriterionOut(number=r.number, name=r.name, passed=r.passed, detail=r.detail,
                     seconds=r.seconds, line=r.line()) for r in results])
