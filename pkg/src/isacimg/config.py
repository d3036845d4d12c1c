"""Experiment configuration: JSON ingestion, validation, domain objects.

Configs are JSON documents validated against the schema shipped in
schema/experiment.schema.json (unknown keys are rejected).  Missing
sections fall back to the defaults below, which describe the reference
desk-scale scenario: a 3 m x 3 m ROI of 0.1 m pixels at 30 GHz with a
cross target and ten-element linear arrays facing each other across the
ROI.

Linear-array antenna specs are relative to the ROI so a rescaled scene
keeps its geometry: `standoff` is the distance from the array's side in
units of the ROI dimension perpendicular to that side, `span` the array
extent as a fraction of the side length, `offset` a lateral shift in the
same units.
"""

import copy
import hashlib
import importlib.resources
import json

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .errors import ConfigError
from .propagation import AntennaArray, CarrierSet
from .quadrature import QuadratureSpec
from .scene import PixelGrid, TargetShape, build_grid

DEFAULT_CONFIG = {
    "roi": {"length": 3.0, "width": 3.0},
    "pixel": {"length": 0.1, "width": 0.1},
    "antennas": {
        "tx": {"count": 10, "side": "bottom", "standoff": 0.34, "span": 1.0, "offset": 0.0},
        "rx": {"count": 10, "side": "top", "standoff": 0.34, "span": 1.0, "offset": 0.0},
    },
    "carriers": {"center_hz": 30.0e9, "count": 4, "spacing_hz": 1.0e8},
    "pilots": {"length": 64},
    "snr_db": 20.0,
    "model": "integral",
    "quadrature": {
        "rule": "gauss",
        "points": 8,
        "refinement": "auto",
        "rtol": 1.0e-8,
        "max_points": 1024,
    },
    "gamp": {
        "alpha": 0.05,
        "theta_x": 0.5,
        "sigma_x": 0.5,
        "sigma_w": "auto",
        "max_iters": 300,
        "tol": 1.0e-12,
        "denoiser": "sum-product",
        "damping": 0.7,
    },
    "targets": [
        {"kind": "cross", "center": [1.5, 1.5], "length": 1.1, "width": 0.3, "coefficient": 1.0}
    ],
    "oracle": {"subdivision": 15},
    "threshold": 0.5,
    "seed": 1234,
    "out_dir": "results",
}

_SIDES = {
    # side -> (axis along the side, fixed coordinate factory)
    "bottom": ("x", lambda L, W, standoff: -standoff * W),
    "top": ("x", lambda L, W, standoff: W + standoff * W),
    "left": ("y", lambda L, W, standoff: -standoff * L),
    "right": ("y", lambda L, W, standoff: L + standoff * L),
}


def _schema():
    text = (
        importlib.resources.files("isacimg") / "schema" / "experiment.schema.json"
    ).read_text()
    return json.loads(text)


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


class ExperimentConfig:
    """Validated experiment description with typed accessors."""

    def __init__(self, data: dict | None = None):
        data = data or {}
        validator = Draft202012Validator(_schema())
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.path))
        if errors:
            where = "/".join(str(p) for p in errors[0].path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {errors[0].message}")
        # antenna specs replace rather than merge (list vs object forms)
        merged = _deep_merge(DEFAULT_CONFIG, data)
        for port in ("tx", "rx"):
            user = data.get("antennas", {}).get(port)
            if user is not None:
                merged["antennas"][port] = copy.deepcopy(user)
        if "targets" in data:
            merged["targets"] = copy.deepcopy(data["targets"])
        self.data = merged

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls(raw)

    def config_hash(self) -> str:
        """Hash of everything that affects results (out_dir excluded)."""
        payload = {k: v for k, v in self.data.items() if k != "out_dir"}
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def grid(self) -> PixelGrid:
        return build_grid(
            self.data["roi"]["length"],
            self.data["roi"]["width"],
            self.data["pixel"]["length"],
            self.data["pixel"]["width"],
        )

    def targets(self) -> list:
        out = []
        for t in self.data["targets"]:
            out.append(
                TargetShape(
                    kind=t["kind"],
                    center=tuple(t["center"]),
                    length=t.get("length", 0.0),
                    width=t.get("width", 0.0),
                    coefficient=t.get("coefficient", 1.0),
                )
            )
        return out

    def carriers(self) -> CarrierSet:
        c = self.data["carriers"]
        return CarrierSet(c["center_hz"], c["count"], c["spacing_hz"])

    def quadrature(self) -> QuadratureSpec:
        q = self.data["quadrature"]
        return QuadratureSpec(
            rule=q["rule"],
            points=q["points"],
            refinement=q["refinement"],
            rtol=q["rtol"],
            max_points=q["max_points"],
        )

    def antenna_array(self) -> AntennaArray:
        roi = self.data["roi"]
        tx = _resolve_antennas(self.data["antennas"]["tx"], roi["length"], roi["width"])
        rx = _resolve_antennas(self.data["antennas"]["rx"], roi["length"], roi["width"])
        return AntennaArray(tx_positions=tx, rx_positions=rx)

    def scaled(self, pixel_length: float, pixel_width: float | None = None) -> "ExperimentConfig":
        """Rescale the whole scene so the pixel grid keeps its shape.

        ROI dimensions, target geometry, and absolute antenna positions all
        scale with the pixel; carriers, pilots, noise, and solver settings
        stay fixed.  Relative (side/standoff) antenna specs are scale-free.
        """
        pixel_width = pixel_width if pixel_width is not None else pixel_length
        fx = pixel_length / self.data["pixel"]["length"]
        fy = pixel_width / self.data["pixel"]["width"]
        data = copy.deepcopy(self.data)
        data["pixel"] = {"length": pixel_length, "width": pixel_width}
        data["roi"] = {
            "length": self.data["roi"]["length"] * fx,
            "width": self.data["roi"]["width"] * fy,
        }
        for t in data["targets"]:
            t["center"] = [t["center"][0] * fx, t["center"][1] * fy]
            if "length" in t:
                t["length"] *= fx
            if "width" in t:
                t["width"] *= fy
        for port in ("tx", "rx"):
            spec = data["antennas"][port]
            if isinstance(spec, list):
                data["antennas"][port] = [[p[0] * fx, p[1] * fy] for p in spec]
        cfg = ExperimentConfig.__new__(ExperimentConfig)
        cfg.data = data
        return cfg

    def version(self) -> str:
        return __version__


def _resolve_antennas(spec, roi_length: float, roi_width: float) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    count = spec["count"]
    side = spec["side"]
    standoff = spec.get("standoff", 0.34)
    span = spec.get("span", 1.0)
    offset = spec.get("offset", 0.0)
    axis, fixed_of = _SIDES[side]
    fixed = fixed_of(roi_length, roi_width, standoff)
    side_len = roi_length if axis == "x" else roi_width
    lo = offset * side_len + 0.5 * side_len * (1.0 - span)
    hi = offset * side_len + 0.5 * side_len * (1.0 + span)
    coords = np.linspace(lo, hi, count) if count > 1 else np.array([(lo + hi) / 2.0])
    if axis == "x":
        return np.column_stack([coords, np.full(count, fixed)])
    return np.column_stack([np.full(count, fixed), coords])
