"""YAML scenario files.

A scenario file has five blocks; every key is listed in ``SCHEMA`` and an
unknown key is an error.  ``reference.yaml`` in ``qstc/data`` is a fully
annotated example.

    plant:    continuous {A, B} or discrete {A, B, At, Bt}; C; Delta; eta
    gains:    K (matrix or "synthesize-deadbeat"); L; M or Mbar; deadbeat_order
    trigger:  sigma; tau_max; N; E_in; strict_sigma
    dos:      mode; kappa_d; nu_d (number or "auto"); bound_fraction; seed;
              attack_prob; schedule (inline 0/1 string); schedule_file
    run:      variant; x0; horizon; output_dir; check_invariants; margin

A top-level ``derived`` block is written into resolved echoes and ignored
on input.
"""
from __future__ import annotations

import copy
import math
from pathlib import Path

import numpy as np
import yaml

from . import deadbeat, dos, matops, plant, simkernel
from .errors import DimensionError, SchemaError
from .standard import GainSet

SYNTH = "synthesize-deadbeat"

_REQ = object()

SCHEMA = {
    "plant": {
        "continuous": {"A": None, "B": None},
        "discrete": {"A": None, "B": None, "At": None, "Bt": None},
        "C": _REQ,
        "Delta": _REQ,
        "eta": "auto",
    },
    "gains": {"K": _REQ, "L": None, "M": None, "Mbar": None, "deadbeat_order": None},
    "trigger": {"sigma": _REQ, "tau_max": _REQ, "N": _REQ, "E_in": _REQ, "strict_sigma": True},
    "dos": {"mode": "none", "kappa_d": 0.0, "nu_d": math.inf, "bound_fraction": 0.9, "seed": 0,
            "attack_prob": 0.5, "schedule": None, "schedule_file": None},
    "run": {"variant": "standard", "x0": _REQ, "horizon": _REQ, "output_dir": "out",
            "check_invariants": False, "margin": 0.5},
    "derived": {},
}


def _merge(schema, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaError(path, "expected a mapping")
    out = {}
    for key in data:
        if key not in schema:
            raise SchemaError(f"{path}.{key}" if path else str(key), f"unknown key {key!r}")
    for key, default in schema.items():
        sub = f"{path}.{key}" if path else key
        if isinstance(default, dict) and key != "derived":
            if key in ("continuous", "discrete") and data.get(key) is None:
                out[key] = None
                continue
            out[key] = _merge(default, data.get(key), sub)
        elif key == "derived":
            out[key] = data.get(key, {})
        elif key in data:
            out[key] = data[key]
        elif default is _REQ:
            raise SchemaError(sub, "required key missing")
        else:
            out[key] = default
    return out


def _number(value, path, integer=False, allow_inf=False):
    if isinstance(value, bool) or value is None:
        raise SchemaError(path, f"expected a number, got {value!r}")
    if isinstance(value, str):
        if allow_inf and value.strip().lower() in ("inf", ".inf", "infinity"):
            return math.inf
        raise SchemaError(path, f"expected a number, got {value!r}")
    if integer:
        if float(value) != int(value):
            raise SchemaError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _matrix(value, path):
    try:
        return matops.as_matrix(value, path)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DimensionError):
            raise
        raise SchemaError(path, f"not a numeric matrix: {exc}") from None


def parse_config(text: str, base_dir=None) -> dict:
    """Validate a YAML document and return the config with defaults filled in."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<document>", f"invalid YAML: {exc}") from None
    cfg = _merge(SCHEMA, raw, "")
    p, g, t, d, r = cfg["plant"], cfg["gains"], cfg["trigger"], cfg["dos"], cfg["run"]
    if (p["continuous"] is None) == (p["discrete"] is None):
        raise SchemaError("plant", "give exactly one of 'continuous' or 'discrete'")
    p["Delta"] = _number(p["Delta"], "plant.Delta")
    if p["eta"] != "auto":
        p["eta"] = _number(p["eta"], "plant.eta", integer=True)
    for key in ("sigma", "E_in"):
        t[key] = _number(t[key], f"trigger.{key}")
    for key in ("tau_max", "N"):
        t[key] = _number(t[key], f"trigger.{key}", integer=True)
    if d["mode"] not in dos.MODES:
        raise SchemaError("dos.mode", f"expected one of {dos.MODES}")
    d["kappa_d"] = _number(d["kappa_d"], "dos.kappa_d")
    if d["nu_d"] != "auto":
        d["nu_d"] = _number(d["nu_d"], "dos.nu_d", allow_inf=True)
    d["bound_fraction"] = _number(d["bound_fraction"], "dos.bound_fraction")
    d["seed"] = _number(d["seed"], "dos.seed", integer=True)
    d["attack_prob"] = _number(d["attack_prob"], "dos.attack_prob")
    if d["schedule_file"] is not None:
        if d["schedule"] is not None:
            raise SchemaError("dos.schedule_file", "give either 'schedule' or 'schedule_file'")
        path = Path(d["schedule_file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        d["schedule"] = "".join(map(str, dos.load_schedule(path)))
        d["schedule_file"] = None
    if d["schedule"] is not None:
        sched = str(d["schedule"]).strip()
        if any(ch not in "01" for ch in sched):
            raise SchemaError("dos.schedule", "must be a string of 0/1 characters")
        d["schedule"] = sched
    if r["variant"] not in simkernel.VARIANTS:
        raise SchemaError("run.variant", f"expected one of {simkernel.VARIANTS}")
    r["horizon"] = _number(r["horizon"], "run.horizon", integer=True)
    r["margin"] = _number(r["margin"], "run.margin")
    for key in ("check_invariants",):
        if not isinstance(r[key], bool):
            raise SchemaError(f"run.{key}", "expected true or false")
    if not isinstance(t["strict_sigma"], bool):
        raise SchemaError("trigger.strict_sigma", "expected true or false")
    if g["K"] != SYNTH:
        _matrix(g["K"], "gains.K")
    if r["variant"] == "standard" and g["L"] is None:
        raise SchemaError("gains.L", "the standard variant needs an observer gain L")
    if r["variant"] == "deadbeat" and (g["M"] is None) == (g["Mbar"] is None):
        raise SchemaError("gains", "the deadbeat variant needs exactly one of M or Mbar")
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def build_model(cfg: dict) -> plant.SystemModel:
    p = cfg["plant"]
    eta = None if p["eta"] == "auto" else p["eta"]
    C = _matrix(p["C"], "plant.C")
    if p["continuous"] is not None:
        c = p["continuous"]
        return plant.from_continuous(_matrix(c["A"], "plant.continuous.A"), _matrix(c["B"], "plant.continuous.B"),
                                     C, p["Delta"], eta=eta)
    dd = p["discrete"]
    At = None if dd["At"] is None else _matrix(dd["At"], "plant.discrete.At")
    Bt = None if dd["Bt"] is None else _matrix(dd["Bt"], "plant.discrete.Bt")
    return plant.from_discrete(_matrix(dd["A"], "plant.discrete.A"), _matrix(dd["B"], "plant.discrete.B"), C,
                               At=At, Bt=Bt, eta=1 if eta is None else eta, Delta=p["Delta"])


def build_gains(cfg: dict, model: plant.SystemModel) -> GainSet:
    g = cfg["gains"]
    if g["K"] == SYNTH:
        if not model.has_substeps:
            raise SchemaError("gains.K", "deadbeat synthesis needs sub-step matrices")
        K = deadbeat.design_deadbeat_gain(model.At, model.Bt, g["deadbeat_order"])
    else:
        K = _matrix(g["K"], "gains.K")
    L = None if g["L"] is None else _matrix(g["L"], "gains.L")
    M = None
    if g["M"] is not None:
        M = _matrix(g["M"], "gains.M")
    elif g["Mbar"] is not None:
        M = deadbeat.M_from_Mbar(model, _matrix(g["Mbar"], "gains.Mbar"))
    return GainSet(K=K, L=L, M=M)


def build_scenario(cfg: dict) -> simkernel.Scenario:
    """Construct the scenario, resolving ``nu_d: auto`` from the certified bound."""
    model = build_model(cfg)
    gains = build_gains(cfg, model)
    t, d, r = cfg["trigger"], cfg["dos"], cfg["run"]
    sched = tuple(int(ch) for ch in d["schedule"]) if d["schedule"] else ()
    base = simkernel.Scenario(model=model, gains=gains, sigma=t["sigma"], tau_max=t["tau_max"], N=t["N"],
                              E_in=t["E_in"], x0=np.asarray(r["x0"], dtype=float), horizon=r["horizon"],
                              variant=r["variant"], margin=r["margin"], strict_sigma=t["strict_sigma"],
                              check_invariants=r["check_invariants"])
    if d["mode"] == "none":
        return base
    nu_d = d["nu_d"]
    if nu_d == "auto":
        b = base.bounds()
        if b["dos_bound"] is None:
            raise SchemaError("dos.nu_d", "no admissible attack fraction for these certificates")
        nu_d = 1.0 / (d["bound_fraction"] * b["dos_bound"])
    model_dos = dos.DosModel(kappa_d=d["kappa_d"], nu_d=nu_d, mode=d["mode"], seed=d["seed"],
                             attack_prob=d["attack_prob"], schedule=sched)
    return base.with_(dos=model_dos)


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def resolved_config(cfg: dict, sc: simkernel.Scenario) -> dict:
    """Config with defaults expanded and derived constants attached."""
    out = copy.deepcopy(cfg)
    out["plant"]["eta"] = sc.model.eta
    if sc.dos.mode != "none":
        out["dos"]["nu_d"] = sc.dos.nu_d
    derived = dict(sc.bounds())
    derived.update(delta=sc.model.delta, K=sc.gains.K, c_norm=sc.model.c_norm)
    if sc.arts is not None:
        derived["M"] = sc.gains.M
        derived["deadbeat_residual"] = deadbeat.verify_deadbeat_gain(sc.model.At, sc.model.Bt, sc.gains.K,
                                                                     sc.model.eta)
    out["derived"] = derived
    return _plain(out)


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(_plain(cfg), sort_keys=False, default_flow_style=None, width=120)
