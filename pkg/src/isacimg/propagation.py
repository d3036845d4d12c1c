"""Free-space propagation gains and measurement-matrix assembly.

Two gain models are supported: the conventional one evaluates the
free-space response at the pixel centre, the integral one averages it over
the pixel area with tensor quadrature.  Per-subcarrier channel matrices
are stacked into the sensing operator A with row ordering

    m = (k * N_T + t) * N_R + r

(subcarrier outer, transmit antenna middle, receive antenna inner).
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import matio
from .errors import AntennaInsidePixel, CoincidentPoints
from .quadrature import QuadratureSpec, resolve_average, tensor_rule
from .scene import PixelGrid, Rect

C_LIGHT = 299_792_458.0

_MIN_DISTANCE = 1e-12
# Convergence scale floor for near-null oscillatory integrals, as a
# fraction of the magnitude bound wavelength / (4 pi d_min).
_NULL_FLOOR_FRACTION = 1e-3
_PIXEL_CHUNK = 128
_NODE_CHUNK = 4096


@dataclass(frozen=True)
class CarrierSet:
    """Subcarrier grid: `count` tones centred on `center_frequency`."""

    center_frequency: float
    count: int
    spacing: float = 0.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("carrier count must be >= 1")
        if self.count > 1 and self.spacing <= 0:
            raise ValueError("multiple carriers need positive spacing")
        if np.any(self.frequencies <= 0):
            raise ValueError("all subcarrier frequencies must be positive")

    @property
    def frequencies(self) -> np.ndarray:
        k = np.arange(self.count)
        return self.center_frequency + (k - (self.count - 1) / 2.0) * self.spacing

    @property
    def wavelengths(self) -> np.ndarray:
        return C_LIGHT / self.frequencies


@dataclass(frozen=True)
class AntennaArray:
    """Tx and Rx positions in the scene plane, metres."""

    tx_positions: np.ndarray
    rx_positions: np.ndarray

    def __post_init__(self):
        for name in ("tx_positions", "rx_positions"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
                raise ValueError(f"{name} must have shape (n, 2)")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_tx(self) -> int:
        return self.tx_positions.shape[0]

    @property
    def n_rx(self) -> int:
        return self.rx_positions.shape[0]

    def validate_clearance(self, grid: PixelGrid) -> None:
        """Every antenna must sit farther than one pixel diagonal from every centre."""
        centers = grid.centers()
        diag = grid.pixel_rect(0).diagonal
        for arr, label in ((self.tx_positions, "tx"), (self.rx_positions, "rx")):
            d = np.linalg.norm(centers[None, :, :] - arr[:, None, :], axis=-1)
            if d.min() <= diag:
                raise AntennaInsidePixel(
                    f"{label} antenna within one pixel diagonal of the ROI grid"
                )


@dataclass(frozen=True)
class ChannelSet:
    """Per-subcarrier gain matrices and the stacked sensing operator."""

    h_tx: np.ndarray  # (K, N_s, N_T)
    h_rx: np.ndarray  # (K, N_R, N_s)
    h_los: np.ndarray  # (K, N_R, N_T)
    a: np.ndarray  # (K*N_T*N_R, N_s)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("h_tx", "h_rx", "h_los", "a"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_measurements(self) -> int:
        return self.a.shape[0]


def _gain_from_distance(d, wavelength):
    return (wavelength / (4.0 * np.pi * d)) * np.exp(-2j * np.pi * d / wavelength)


def point_gain(antenna, target, wavelength: float) -> complex:
    """Free-space gain (wavelength / 4 pi d) e^{-2j pi d / wavelength}."""
    d = float(np.hypot(antenna[0] - target[0], antenna[1] - target[1]))
    if d < _MIN_DISTANCE:
        raise CoincidentPoints(f"antenna and target coincide (d = {d:.3e} m)")
    return complex(_gain_from_distance(d, wavelength))


def los_gain(tx, rx, wavelength: float) -> complex:
    """Direct Tx-Rx gain; the point model applied to the antenna pair."""
    return point_gain(tx, rx, wavelength)


def distance_to_rect(point, rect: Rect) -> float:
    """Distance from a point to the closed rectangle (0 if inside)."""
    dx = max(rect.x_min - point[0], 0.0, point[0] - rect.x_max)
    dy = max(rect.y_min - point[1], 0.0, point[1] - rect.y_max)
    return float(np.hypot(dx, dy))


def integral_gain(antenna, pixel: Rect, wavelength: float, spec: QuadratureSpec | None = None) -> complex:
    """Pixel-area average of the free-space gain.

    Computes (1/(l_s w_s)) ∫∫_pixel (wavelength/(4 pi d)) e^{-2j pi d/wavelength}
    under the given quadrature spec.  In auto mode the per-axis point count
    doubles until successive levels agree to spec.rtol relative, with an
    absolute floor of rtol * 1e-3 * (wavelength / 4 pi d_min) so that
    near-null averages cannot refine forever.
    """
    spec = spec or QuadratureSpec()
    d_min = distance_to_rect(antenna, pixel)
    if d_min <= 0.0:
        raise AntennaInsidePixel(f"antenna {tuple(antenna)} inside pixel closure")
    gains = _integral_gain_batch(
        np.array([[pixel.cx, pixel.cy]]),
        pixel.lx,
        pixel.ly,
        np.asarray([antenna], dtype=float),
        np.asarray([wavelength], dtype=float),
        spec,
    )
    return complex(gains[0, 0, 0])


def _min_distances_to_pixels(centers, lx, ly, antennas):
    """(Q, P) distances from each antenna to each pixel rectangle."""
    dx = np.abs(centers[:, None, 0] - antennas[None, :, 0]) - 0.5 * lx
    dy = np.abs(centers[:, None, 1] - antennas[None, :, 1]) - 0.5 * ly
    return np.hypot(np.maximum(dx, 0.0), np.maximum(dy, 0.0))


def _integral_gain_batch(centers, lx, ly, antennas, wavelengths, spec: QuadratureSpec):
    """Pixel-averaged gains for all (wavelength, pixel, antenna) triples.

    Returns a (K, Q, P) complex array.  Refinement converges per entry;
    each entry keeps the value of the first level at which it converged,
    so results match per-pair `integral_gain` calls exactly.
    """
    centers = np.asarray(centers, dtype=float)
    antennas = np.asarray(antennas, dtype=float)
    wavelengths = np.asarray(wavelengths, dtype=float)
    q_total, p_total, k_total = centers.shape[0], antennas.shape[0], wavelengths.shape[0]

    d_min = _min_distances_to_pixels(centers, lx, ly, antennas)
    if d_min.min() <= 0.0:
        raise AntennaInsidePixel("an antenna lies inside a pixel closure")

    out = np.empty((k_total, q_total, p_total), dtype=np.complex128)
    for q0 in range(0, q_total, _PIXEL_CHUNK):
        q1 = min(q0 + _PIXEL_CHUNK, q_total)
        chunk_centers = centers[q0:q1]

        def eval_level(n):
            offsets, weights = tensor_rule(spec.rule, n)
            acc = np.zeros((k_total, q1 - q0, p_total), dtype=np.complex128)
            for c0 in range(0, offsets.shape[0], _NODE_CHUNK):
                c1 = min(c0 + _NODE_CHUNK, offsets.shape[0])
                pts = chunk_centers[:, None, :] + offsets[None, c0:c1, :] * (lx, ly)
                d = np.linalg.norm(pts[:, :, None, :] - antennas[None, None, :, :], axis=-1)
                for k, lam in enumerate(wavelengths):
                    g = _gain_from_distance(d, lam)
                    acc[k] += np.einsum("qcp,c->qp", g, weights[c0:c1])
            return acc

        floor = _NULL_FLOOR_FRACTION * (
            wavelengths[:, None, None] / (4.0 * np.pi * d_min[None, q0:q1, :])
        )
        out[:, q0:q1, :], _ = resolve_average(eval_level, spec, floor=floor)
    return out


def _point_gain_matrix(centers, antennas, wavelengths):
    """(K, Q, P) centre-point gains."""
    d = np.linalg.norm(centers[:, None, :] - antennas[None, :, :], axis=-1)
    if d.min() < _MIN_DISTANCE:
        raise CoincidentPoints("antenna coincides with a pixel centre")
    return np.stack([_gain_from_distance(d, lam) for lam in wavelengths])


def stacked_row_index(k, t, r, n_tx, n_rx):
    """Row of A holding subcarrier k, transmit antenna t, receive antenna r."""
    return (k * n_tx + t) * n_rx + r


def assemble_channel(
    grid: PixelGrid,
    arrays: AntennaArray,
    carriers: CarrierSet,
    model: str = "integral",
    quadrature: QuadratureSpec | None = None,
    cache_dir: str | None = None,
) -> ChannelSet:
    """Build per-subcarrier gain matrices and the stacked operator A.

    With `cache_dir` set, the assembled set is persisted under a content
    hash of (grid, antennas, carriers, model, quadrature) and reloaded on
    subsequent calls with identical inputs.
    """
    if model not in ("conventional", "integral"):
        raise ValueError(f"unknown propagation model {model!r}")
    quadrature = quadrature or QuadratureSpec()
    arrays.validate_clearance(grid)

    cache_key = None
    if cache_dir is not None:
        cache_key = _cache_key(grid, arrays, carriers, model, quadrature)
        cached = _cache_load(cache_dir, cache_key)
        if cached is not None:
            return cached

    centers = grid.centers()
    wavelengths = carriers.wavelengths
    antennas = np.vstack([arrays.tx_positions, arrays.rx_positions])

    if model == "conventional":
        gains = _point_gain_matrix(centers, antennas, wavelengths)
    else:
        gains = _integral_gain_batch(
            centers, grid.pixel_length, grid.pixel_width, antennas, wavelengths, quadrature
        )

    h_tx = gains[:, :, : arrays.n_tx]  # (K, N_s, N_T)
    h_rx = np.swapaxes(gains[:, :, arrays.n_tx :], 1, 2)  # (K, N_R, N_s)

    d_los = np.linalg.norm(
        arrays.rx_positions[:, None, :] - arrays.tx_positions[None, :, :], axis=-1
    )
    if d_los.min() < _MIN_DISTANCE:
        raise CoincidentPoints("a Tx and an Rx coincide")
    h_los = np.stack([_gain_from_distance(d_los, lam) for lam in wavelengths])

    a = np.einsum("krn,knt->ktrn", h_rx, h_tx).reshape(
        carriers.count * arrays.n_tx * arrays.n_rx, grid.n_pixels
    )

    meta = {
        "model": model,
        "row_ordering": "m = (k*N_T + t)*N_R + r; k outer, t middle, r inner",
        "n_tx": arrays.n_tx,
        "n_rx": arrays.n_rx,
        "n_carriers": carriers.count,
        "grid": grid.metadata(),
        "quadrature": _spec_dict(quadrature) if model == "integral" else None,
    }
    channels = ChannelSet(h_tx=h_tx.copy(), h_rx=h_rx.copy(), h_los=h_los, a=a, meta=meta)

    if cache_dir is not None:
        _cache_store(cache_dir, cache_key, channels)
    return channels


def _spec_dict(spec: QuadratureSpec) -> dict:
    return {
        "rule": spec.rule,
        "points": spec.points,
        "refinement": spec.refinement,
        "rtol": spec.rtol,
        "max_points": spec.max_points,
    }


def _cache_key(grid, arrays, carriers, model, quadrature) -> str:
    payload = {
        "format": matio.VERSION,
        "grid": grid.metadata(),
        "tx": arrays.tx_positions.tolist(),
        "rx": arrays.rx_positions.tolist(),
        "frequencies": carriers.frequencies.tolist(),
        "model": model,
        "quadrature": _spec_dict(quadrature) if model == "integral" else None,
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:20]


_CACHE_PARTS = ("h_tx", "h_rx", "h_los", "a")


def _cache_load(cache_dir, key):
    base = os.path.join(cache_dir, key)
    paths = [os.path.join(base, f"{part}.icmx") for part in _CACHE_PARTS]
    if not all(os.path.exists(p) for p in paths):
        return None
    arrays = {}
    meta = {}
    for part, path in zip(_CACHE_PARTS, paths):
        arrays[part], meta = matio.load_matrix(path)
    return ChannelSet(meta=meta, **arrays)


def _cache_store(cache_dir, key, channels: ChannelSet):
    base = os.path.join(cache_dir, key)
    os.makedirs(base, exist_ok=True)
    for part in _CACHE_PARTS:
        matio.save_matrix(
            os.path.join(base, f"{part}.icmx"), getattr(channels, part), meta=channels.meta
        )
