"""Scenario documents: parsing, validation and operating-mode toggles.

A scenario is a plain JSON object.  Per-period profiles may be given either
as a bare list or as ``{"provenance": ..., "values": [...]}`` so that
illustrative (non-measured) data stays labelled in the file itself.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, List, Optional, Tuple

import numpy as np

from .building import BuildingParams, ComfortBand
from .devices import Bess, ChpUnit, Eb, Hst, ThermalUnit
from .probseq import (ProbSeq, PvParams, WindParams, convolve, discretize_pv,
                      discretize_wind, expectation)

SCHEMA_VERSION = 1
CHANCE_FORMULATIONS = ("binary", "quantile")
INERTIA_STYLES = ("plateau", "support")
BUNDLED = ("paper_case",)


class ScenarioError(ValueError):
    """Base class for every problem found while loading a scenario."""


class ScenarioParseError(ScenarioError):
    """The document is not valid JSON."""


class ScenarioSchemaError(ScenarioError):
    """A field is missing, misspelled or has the wrong type."""


class ScenarioInvariantError(ScenarioError):
    """Fields are well-typed but physically or logically inconsistent."""


@dataclass(frozen=True)
class Features:
    bess: bool = True
    hst: bool = True
    eb: bool = True
    uncertainty: bool = True
    inertia: bool = True


MODE_FEATURES = {
    1: Features(bess=False, hst=False, eb=False),
    2: Features(hst=False, eb=False),
    3: Features(),
    4: Features(uncertainty=False),
    5: Features(inertia=False),
    6: Features(uncertainty=False, inertia=False),
}


@dataclass(frozen=True)
class Scenario:
    horizon: int
    dt: float
    thermal_units: Tuple[ThermalUnit, ...]
    chp_units: Tuple[ChpUnit, ...]
    bess: Optional[Bess]
    eb: Optional[Eb]
    building: BuildingParams
    comfort: ComfortBand
    setpoint: float
    elec_load: Tuple[float, ...]
    t_outdoor: Tuple[float, ...]
    wind: Tuple[Optional[WindParams], ...]
    pv: Tuple[Optional[PvParams], ...]
    q_step: float
    alpha: float = 0.95
    features: Features = Features()
    mode: Optional[int] = None
    chance_formulation: str = "binary"
    pwl_segments: int = 8
    reserve_fraction: float = 0.2
    inertia_style: str = "plateau"
    name: str = "scenario"

    def __post_init__(self):
        _invariants(self)

    # Discretized renewable output, built lazily and cached per instance.
    @cached_property
    def dg_sequences(self) -> Tuple[ProbSeq, ...]:
        return tuple(convolve(discretize_wind(w, self.q_step), discretize_pv(p, self.q_step))
                     for w, p in zip(self.wind, self.pv))

    @cached_property
    def expected_dg(self) -> np.ndarray:
        return np.array([expectation(s) for s in self.dg_sequences])

    @property
    def hsts(self) -> List[Optional[Hst]]:
        return [u.hst for u in self.chp_units]

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def _invariants(s: Scenario):
    def bad(msg):
        raise ScenarioInvariantError(msg)

    if s.horizon < 1:
        bad(f"horizon must be at least 1, got {s.horizon}")
    if not s.dt > 0:
        bad(f"dt must be positive, got {s.dt}")
    for name in ("elec_load", "t_outdoor", "wind", "pv"):
        n = len(getattr(s, name))
        if n != s.horizon:
            bad(f"{name} has {n} entries but the horizon is {s.horizon}")
    for t, v in enumerate(s.elec_load):
        if not (v >= 0 and math.isfinite(v)):
            bad(f"elec_load[{t}] must be a nonnegative number, got {v}")
    if not 0 < s.alpha <= 1:
        bad(f"alpha must lie in (0, 1], got {s.alpha}")
    if not s.q_step > 0:
        bad(f"q_step must be positive, got {s.q_step}")
    if s.chance_formulation not in CHANCE_FORMULATIONS:
        bad(f"chance_formulation must be one of {CHANCE_FORMULATIONS}")
    if s.inertia_style not in INERTIA_STYLES:
        bad(f"inertia_style must be one of {INERTIA_STYLES}")
    if s.pwl_segments < 1:
        bad(f"pwl_segments must be at least 1, got {s.pwl_segments}")
    if not 0 <= s.reserve_fraction <= 1:
        bad(f"reserve_fraction must lie in [0, 1], got {s.reserve_fraction}")
    if not s.thermal_units and not s.chp_units:
        bad("at least one thermal or CHP unit is required")
    names = [u.name for u in s.thermal_units] + [u.name for u in s.chp_units]
    if len(set(names)) != len(names):
        bad(f"unit names must be unique, got {names}")
    if s.mode is not None and s.mode not in MODE_FEATURES:
        bad(f"mode must be 1..6, got {s.mode}")
    f = s.features
    if f.bess and s.bess is None:
        bad("the selected mode requires a BESS but the scenario has none")
    if f.eb and s.eb is None:
        bad("the selected mode requires an electric boiler but the scenario has none")
    if f.hst and not any(u.hst is not None for u in s.chp_units):
        bad("the selected mode requires heat storage but no CHP unit has a tank")
    if not (s.comfort.t_b <= s.setpoint <= s.comfort.t_c):
        bad(f"setpoint {s.setpoint} lies outside the comfort plateau "
            f"[{s.comfort.t_b}, {s.comfort.t_c}]")


def apply_mode(s: Scenario, mode: int) -> Scenario:
    """Scenario configured for operating mode 1..6.

    Devices a mode does not use are removed outright so the model built from
    the result cannot reference them.
    """
    if mode not in MODE_FEATURES:
        raise ScenarioInvariantError(f"mode must be 1..6, got {mode}")
    f = MODE_FEATURES[mode]
    if f.bess and s.bess is None:
        raise ScenarioInvariantError(f"mode {mode} requires a BESS but the scenario has none")
    if f.eb and s.eb is None:
        raise ScenarioInvariantError(f"mode {mode} requires an electric boiler but the scenario has none")
    if f.hst and not any(u.hst is not None for u in s.chp_units):
        raise ScenarioInvariantError(f"mode {mode} requires heat storage but no CHP unit has a tank")
    chp = s.chp_units if f.hst else tuple(dataclasses.replace(u, hst=None) for u in s.chp_units)
    return dataclasses.replace(
        s, features=f, mode=mode, chp_units=chp,
        bess=s.bess if f.bess else None, eb=s.eb if f.eb else None)


# -- document reading -----------------------------------------------------------

class _Reader:
    """Typed access to a JSON object that reports errors by field path."""

    def __init__(self, obj: Any, path: str):
        if not isinstance(obj, dict):
            raise ScenarioSchemaError(f"{path or '<root>'}: expected an object, got {type(obj).__name__}")
        self.obj = obj
        self.path = path
        self.used = set()

    def _p(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        self.used.add(key)
        return key in self.obj and self.obj[key] is not None

    def raw(self, key, default=...):
        self.used.add(key)
        if key not in self.obj:
            if default is ...:
                raise ScenarioSchemaError(f"{self._p(key)}: required field is missing")
            return default
        return self.obj[key]

    def num(self, key, default=...):
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioSchemaError(f"{self._p(key)}: expected a number, got {v!r}")
        if not math.isfinite(v):
            raise ScenarioSchemaError(f"{self._p(key)}: must be finite")
        return float(v)

    def opt_num(self, key):
        v = self.raw(key, None)
        return None if v is None else self.num(key)

    def int(self, key, default=...):
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ScenarioSchemaError(f"{self._p(key)}: expected an integer, got {v!r}")
        return v

    def str(self, key, default=...):
        v = self.raw(key, default)
        if not isinstance(v, str):
            raise ScenarioSchemaError(f"{self._p(key)}: expected a string, got {v!r}")
        return v

    def sub(self, key, default=...) -> Optional["_Reader"]:
        v = self.raw(key, default)
        return None if v is None else _Reader(v, self._p(key))

    def items(self, key) -> List["_Reader"]:
        v = self.raw(key)
        if not isinstance(v, list):
            raise ScenarioSchemaError(f"{self._p(key)}: expected a list")
        return [_Reader(x, f"{self._p(key)}[{i}]") for i, x in enumerate(v)]

    def profile(self, key, n, allow_null=False, default=...) -> List[Optional[float]]:
        v = self.raw(key, default)
        path = self._p(key)
        if isinstance(v, dict):
            if "values" not in v:
                raise ScenarioSchemaError(f"{path}.values: required field is missing")
            extra = set(v) - {"values", "provenance", "note"}
            if extra:
                raise ScenarioSchemaError(f"{path}: unknown field(s) {sorted(extra)}")
            v, path = v["values"], path + ".values"
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v] * n
        if not isinstance(v, list):
            raise ScenarioSchemaError(f"{path}: expected a list of {n} numbers")
        if len(v) != n:
            raise ScenarioSchemaError(f"{path}: expected {n} entries (one per period), got {len(v)}")
        out = []
        for i, x in enumerate(v):
            if x is None and allow_null:
                out.append(None)
            elif isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ScenarioSchemaError(f"{path}[{i}]: expected a finite number, got {x!r}")
            else:
                out.append(float(x))
        return out

    def done(self):
        extra = set(self.obj) - self.used
        if extra:
            raise ScenarioSchemaError(f"{self.path or '<root>'}: unknown field(s) {sorted(extra)}")


def _build(path: str, ctor, **kw):
    try:
        return ctor(**kw)
    except ValueError as exc:
        raise ScenarioInvariantError(f"{path}: {exc}") from None


def _thermal(r: _Reader) -> ThermalUnit:
    kw = dict(name=r.str("name"), p_min=r.num("p_min"), p_max=r.num("p_max"),
              ramp_up=r.num("ramp_up"), ramp_down=r.num("ramp_down"),
              a=r.num("a"), b=r.num("b"), c=r.num("c"), reserve_cost=r.num("reserve_cost"))
    r.done()
    return _build(r.path, ThermalUnit, **kw)


def _hst(r: Optional[_Reader]) -> Optional[Hst]:
    if r is None:
        return None
    kw = dict(c_min=r.num("c_min"), c_max=r.num("c_max"), p_c_max=r.num("p_c_max"))
    r.done()
    return _build(r.path, Hst, **kw)


def _chp(r: _Reader) -> ChpUnit:
    kw = dict(name=r.str("name"), pe_min=r.num("pe_min"), pe_max=r.num("pe_max"),
              ph_max=r.num("ph_max"), c_v=r.num("c_v"), ramp_up=r.num("ramp_up"),
              ramp_down=r.num("ramp_down"), a=r.num("a"), b=r.num("b"), c=r.num("c"),
              reserve_cost=r.num("reserve_cost"), c_m=r.num("c_m", 0.75),
              back_pressure_offset=r.opt_num("back_pressure_offset"),
              hst=_hst(r.sub("hst", None)))
    r.done()
    return _build(r.path, ChpUnit, **kw)


def _bess(r: Optional[_Reader]) -> Optional[Bess]:
    if r is None:
        return None
    kw = {k: r.num(k) for k in ("s_min", "s_max", "p_max", "eff_ch", "eff_dc",
                                "cost_dc", "cost_ch", "reserve_cost")}
    r.done()
    return _build(r.path, Bess, **kw)


def _eb(r: Optional[_Reader]) -> Optional[Eb]:
    if r is None:
        return None
    kw = dict(p_eb_max=r.num("p_eb_max"), eff=r.num("eff"))
    r.done()
    return _build(r.path, Eb, **kw)


def _wind(r: Optional[_Reader], n: int) -> List[Optional[WindParams]]:
    if r is None:
        return [None] * n
    base = dict(v_in=r.num("v_in"), v_s=r.num("v_s"), v_out=r.num("v_out"),
                p_s=r.num("p_s"))
    shape = r.profile("shape_m", n)
    scale = r.profile("scale_eps", n, allow_null=True)
    r.done()
    out = []
    for t in range(n):
        if scale[t] is None:
            out.append(None)
        else:
            out.append(_build(f"{r.path} (period {t + 1})", WindParams,
                              shape_m=shape[t], scale_eps=scale[t], **base))
    return out


def _pv(r: Optional[_Reader], n: int) -> List[Optional[PvParams]]:
    if r is None:
        return [None] * n
    if r.has("irradiance"):
        ir = r.sub("irradiance")
        p_max = PvParams.from_irradiance(1.0, 1.0, ir.num("r_max"), ir.num("area"),
                                         ir.num("eff")).p_max_pv
        ir.done()
    else:
        p_max = r.num("p_max_pv")
    l1 = r.profile("lambda1", n, allow_null=True)
    l2 = r.profile("lambda2", n, allow_null=True)
    r.done()
    out = []
    for t in range(n):
        if (l1[t] is None) != (l2[t] is None):
            raise ScenarioInvariantError(
                f"{r.path}: period {t + 1} has only one Beta shape; give both or neither")
        out.append(None if l1[t] is None else
                   _build(f"{r.path} (period {t + 1})", PvParams,
                          lambda1=l1[t], lambda2=l2[t], p_max_pv=p_max))
    return out


def from_dict(doc: Any) -> Scenario:
    """Validate a decoded JSON document and build a :class:`Scenario`."""
    r = _Reader(doc, "")
    version = r.int("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioSchemaError(f"schema_version: unsupported version {version}")
    r.raw("provenance", None)
    r.raw("description", None)
    n = r.int("horizon")
    if n < 1:
        raise ScenarioInvariantError(f"horizon: must be at least 1, got {n}")

    b = r.sub("building")
    comfort = b.sub("comfort", None)
    band = ComfortBand() if comfort is None else _build(
        comfort.path, ComfortBand, **{k: comfort.num(k) for k in ("t_a", "t_b", "t_c", "t_d")})
    if comfort is not None:
        comfort.done()
    building = _build(b.path, BuildingParams, **{k: b.num(k) for k in (
        "k_transfer", "surface_f", "volume_v", "c_air", "rho_air")})
    setpoint = b.num("setpoint", 20.0)
    style = b.str("inertia_style", "plateau")
    b.done()

    mode = r.raw("mode", None)
    if mode is not None and (isinstance(mode, bool) or not isinstance(mode, int)):
        raise ScenarioSchemaError(f"mode: expected an integer 1..6, got {mode!r}")
    features = None
    if r.has("features"):
        fr = r.sub("features")
        features = Features(**{k: bool(fr.raw(k, True)) for k in
                               ("bess", "hst", "eb", "uncertainty", "inertia")})
        fr.done()

    chp_units = tuple(_chp(x) for x in r.items("chp_units"))
    bess = _bess(r.sub("bess", None))
    eb = _eb(r.sub("eb", None))
    if features is None or mode is not None:
        # modes are applied afterwards; start from whatever devices exist
        features = Features(bess=bess is not None, eb=eb is not None,
                            hst=any(u.hst is not None for u in chp_units))
    s = Scenario(
        horizon=n,
        dt=r.num("dt", 1.0),
        thermal_units=tuple(_thermal(x) for x in r.items("thermal_units")),
        chp_units=chp_units, bess=bess, eb=eb,
        building=building, comfort=band, setpoint=setpoint, inertia_style=style,
        elec_load=tuple(r.profile("elec_load", n)),
        t_outdoor=tuple(r.profile("t_outdoor", n)),
        wind=tuple(_wind(r.sub("wind", None), n)),
        pv=tuple(_pv(r.sub("pv", None), n)),
        q_step=r.num("q_step"),
        alpha=r.num("alpha", 0.95),
        chance_formulation=r.str("chance_formulation", "binary"),
        pwl_segments=r.int("pwl_segments", 8),
        reserve_fraction=r.num("reserve_fraction", 0.2),
        name=r.str("name", "scenario"),
        features=features,
    )
    r.done()
    if mode is not None:
        s = apply_mode(s, mode)
    return s


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a bundled scenario by name (``paper_case``)."""
    if str(path) in BUNDLED:
        text = resources.files("iesched.data").joinpath(f"{path}.json").read_text("utf-8")
        return loads(text)
    p = Path(path)
    try:
        text = p.read_text("utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"{p}: cannot read ({exc.strerror})") from None
    try:
        return loads(text)
    except ScenarioError as exc:
        raise type(exc)(f"{p}: {exc}") from None
