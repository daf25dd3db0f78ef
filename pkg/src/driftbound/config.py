"""JSON system configuration: parsing, validation of shapes, and re-serialisation."""
from dataclasses import dataclass, field
import json
import math
from typing import Optional

from .errors import ParseError
from .scalar_fpk import Grid, ScalarDiffusionModel
from .sde_sim import SimConfig

DEFAULT_TOLERANCES = {
    "identity_rtol": 1e-8,
    "bound_atol": 1e-8,
    "hinf_rtol": 1e-4,
    "qef_tol": 1e-6,
    "fpk_identity_tol": 1e-5,
    "fpk_bound_tol": 1e-6,
    "chain_rtol": 1e-5,
    "saturation_rtol": 1e-6,
}

_SIM_KEYS = ("dt", "burn_in_steps", "sample_steps", "n_trajectories", "seed")


@dataclass
class SystemConfig:
    kind: str
    A: Optional[list] = None
    B: Optional[list] = None
    N: Optional[list] = None
    f: Optional[list] = None
    g: Optional[list] = None
    h: Optional[list] = None
    grid: Optional[dict] = None
    target_log_r: Optional[list] = None
    sim: Optional[dict] = None
    tolerances: dict = field(default_factory=dict)

    def tol(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def scalar_model(self):
        grid = None
        if self.grid is not None:
            grid = Grid(self.grid["lo"], self.grid["hi"], self.grid.get("points", 4096))
        return ScalarDiffusionModel(tuple(self.f), tuple(self.g), tuple(self.h or [0.0]), grid)

    def sim_config(self, seed=None, trajectories=None, steps=None):
        rec = dict(self.sim or {})
        dt = rec.get("dt", 0.01)
        n_traj = trajectories or rec.get("n_trajectories", 32)
        seed = rec.get("seed", 0) if seed is None else seed
        if steps is not None or "sample_steps" not in rec:
            total = steps or 40_000
            return SimConfig.with_total(dt, total, n_traj, seed)
        burn = rec.get("burn_in_steps", rec["sample_steps"] // 4)
        return SimConfig(dt, burn, rec["sample_steps"], n_traj, seed)

    def to_dict(self):
        out = {"kind": self.kind}
        keys = ("A", "B", "N") if self.kind == "linear" else ("f", "g", "h", "grid", "target_log_r")
        for k in keys:
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        if self.sim is not None:
            out["sim"] = self.sim
        if self.tolerances:
            out["tolerances"] = self.tolerances
        return out

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2)


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _matrix(doc, key):
    if key not in doc:
        raise ParseError(f"{key}: missing")
    rows = doc[key]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError(f"{key}: expected a non-empty array of row arrays")
    width = len(rows[0])
    if width == 0:
        raise ParseError(f"{key}: rows must be non-empty")
    out = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{key}: row {i} has {len(row)} entries, expected {width}")
        out.append([_number(v, f"{key}[{i}][{j}]") for j, v in enumerate(row)])
    return out


def _coeffs(doc, key, required=True):
    if key not in doc:
        if required:
            raise ParseError(f"{key}: missing")
        return None
    v = doc[key]
    if not isinstance(v, list) or not v:
        raise ParseError(f"{key}: expected a non-empty array of coefficients")
    return [_number(c, f"{key}[{i}]") for i, c in enumerate(v)]


def parse_config(doc):
    """Validate a decoded JSON document and return a :class:`SystemConfig`."""
    if not isinstance(doc, dict):
        raise ParseError("<root>: expected a JSON object")
    kind = doc.get("kind")
    if kind not in ("linear", "scalar"):
        raise ParseError(f"kind: expected 'linear' or 'scalar', got {kind!r}")
    allowed = {"kind", "sim", "tolerances"}
    allowed |= {"A", "B", "N"} if kind == "linear" else {"f", "g", "h", "grid", "target_log_r"}
    for k in doc:
        if k not in allowed:
            raise ParseError(f"{k}: unexpected key for kind {kind!r}")

    cfg = SystemConfig(kind=kind)
    if kind == "linear":
        cfg.A = _matrix(doc, "A")
        cfg.B = _matrix(doc, "B")
        n, m = len(cfg.A), len(cfg.B[0])
        if len(cfg.A[0]) != n:
            raise ParseError(f"A: must be square, got {n}x{len(cfg.A[0])}")
        if len(cfg.B) != n:
            raise ParseError(f"B: must have {n} rows, got {len(cfg.B)}")
        if "N" in doc:
            cfg.N = _matrix(doc, "N")
            if len(cfg.N) != m or len(cfg.N[0]) != n:
                raise ParseError(f"N: must be {m}x{n}, got {len(cfg.N)}x{len(cfg.N[0])}")
        else:
            cfg.N = [[0.0] * n for _ in range(m)]
    else:
        cfg.f = _coeffs(doc, "f")
        cfg.g = _coeffs(doc, "g")
        cfg.h = _coeffs(doc, "h", required=False) or [0.0]
        cfg.target_log_r = _coeffs(doc, "target_log_r", required=False)
        if "grid" in doc:
            grid = doc["grid"]
            if not isinstance(grid, dict):
                raise ParseError("grid: expected an object with lo, hi, points")
            for k in grid:
                if k not in ("lo", "hi", "points"):
                    raise ParseError(f"grid.{k}: unexpected key")
            lo = _number(grid.get("lo"), "grid.lo")
            hi = _number(grid.get("hi"), "grid.hi")
            points = grid.get("points", 4096)
            if not isinstance(points, int) or isinstance(points, bool) or points < 64:
                raise ParseError(f"grid.points: expected an integer >= 64, got {points!r}")
            if not lo < hi:
                raise ParseError("grid.lo: must be below grid.hi")
            cfg.grid = {"lo": lo, "hi": hi, "points": points}

    if "sim" in doc:
        sim = doc["sim"]
        if not isinstance(sim, dict):
            raise ParseError("sim: expected an object")
        rec = {}
        for k, v in sim.items():
            if k not in _SIM_KEYS:
                raise ParseError(f"sim.{k}: unexpected key")
            if k == "dt":
                rec[k] = _number(v, "sim.dt")
                if rec[k] <= 0.0:
                    raise ParseError("sim.dt: must be positive")
            else:
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise ParseError(f"sim.{k}: expected a nonnegative integer, got {v!r}")
                rec[k] = v
        cfg.sim = rec

    if "tolerances" in doc:
        tol = doc["tolerances"]
        if not isinstance(tol, dict):
            raise ParseError("tolerances: expected an object")
        for k, v in tol.items():
            if k not in DEFAULT_TOLERANCES:
                raise ParseError(f"tolerances.{k}: unknown tolerance")
            val = _number(v, f"tolerances.{k}")
            if val <= 0.0:
                raise ParseError(f"tolerances.{k}: must be positive")
            cfg.tolerances[k] = val
    return cfg


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"<root>: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_config(doc)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
