"""Ground-truth received-signal synthesis from the fine scatterer cloud.

The cloud is treated as the physical scene: each point contributes the
product of its exact Tx-side and Rx-side free-space gains, coupled per
point.  This is deliberately *not* the factorized per-pixel model used by
the reconstruction operator; the residual between the two is part of what
the experiments measure.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import matio
from .errors import CoincidentPoints, TooShortSequence
from .forward_rng import noise_streams
from .propagation import AntennaArray, CarrierSet, _gain_from_distance
from .scene import FineCloud

_MIN_DISTANCE = 1e-12


@dataclass(frozen=True)
class PilotBlock:
    """Pilot matrix with orthogonal equal-power rows, shared by all subcarriers."""

    s: np.ndarray  # (N_T, T)

    def __post_init__(self):
        arr = np.asarray(self.s)
        arr.flags.writeable = False
        object.__setattr__(self, "s", arr)

    @property
    def n_tx(self) -> int:
        return self.s.shape[0]

    @property
    def length(self) -> int:
        return self.s.shape[1]


@dataclass(frozen=True)
class ReceivedBlock:
    """Received pilot observations per subcarrier plus the noise actually used."""

    y: np.ndarray  # (K, N_R, T)
    snr_db: float | None
    noise_var: float


def make_pilots(n_tx: int, length: int, seed: int) -> PilotBlock:
    """Random pilots with S S^H = T I, deterministic in the seed.

    Rows are taken from a Haar-random unitary (QR of a complex Gaussian
    with the sign ambiguity fixed), scaled by sqrt(T).
    """
    if length < n_tx:
        raise TooShortSequence(f"pilot length {length} < {n_tx} transmit antennas")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((length, length)) + 1j * rng.standard_normal((length, length))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag.conj() / np.abs(diag))[None, :]
    s = np.sqrt(length) * q[:n_tx, :]
    return PilotBlock(s=s)


def true_channel(cloud: FineCloud, arrays: AntennaArray, carriers: CarrierSet) -> np.ndarray:
    """Coupled point-sum multipath gains, shape (K, N_R, N_T).

    H_k[r, t] = sum_p w_p * g(rx_r, p, lambda_k) * g(tx_t, p, lambda_k),
    with g the point free-space gain at the exact point position.
    """
    k_total = carriers.count
    out = np.zeros((k_total, arrays.n_rx, arrays.n_tx), dtype=np.complex128)
    if cloud.points.shape[0] == 0:
        return out

    d_tx = np.linalg.norm(cloud.points[:, None, :] - arrays.tx_positions[None, :, :], axis=-1)
    d_rx = np.linalg.norm(cloud.points[:, None, :] - arrays.rx_positions[None, :, :], axis=-1)
    if min(d_tx.min(), d_rx.min()) < _MIN_DISTANCE:
        raise CoincidentPoints("a cloud point coincides with an antenna")

    for k, lam in enumerate(carriers.wavelengths):
        g_tx = _gain_from_distance(d_tx, lam)  # (P, N_T)
        g_rx = _gain_from_distance(d_rx, lam)  # (P, N_R)
        out[k] = np.einsum("pr,p,pt->rt", g_rx, cloud.weights, g_tx)
    return out


def simulate_received(
    true_nlos: np.ndarray,
    h_los: np.ndarray,
    pilots: PilotBlock,
    snr_db: float | None,
    seed: int,
    noise_var: float | None = None,
) -> ReceivedBlock:
    """Y_k = (H_k^NLOS + H_k^LOS) S + N with circular complex Gaussian noise.

    The noise variance is set so that the total received signal power
    (LOS + NLOS, averaged over subcarriers) sits `snr_db` above the noise.
    Pass snr_db=None (or inf) for a noiseless block, or give `noise_var`
    directly to bypass the SNR calibration.  Per-subcarrier noise comes
    from independent streams spawned off the master seed, so any parallel
    evaluation order yields identical blocks.
    """
    true_nlos = np.asarray(true_nlos)
    h_los = np.asarray(h_los)
    if true_nlos.shape != h_los.shape:
        raise ValueError("NLOS and LOS stacks must share (K, N_R, N_T)")
    k_total, n_rx, _ = true_nlos.shape
    length = pilots.length

    signal = np.einsum("krt,tl->krl", true_nlos + h_los, pilots.s)

    if noise_var is not None:
        var = float(noise_var)
    elif snr_db is None or np.isinf(snr_db):
        var = 0.0
    else:
        mean_power = np.mean(np.sum(np.abs(signal) ** 2, axis=(1, 2))) / (n_rx * length)
        var = float(mean_power * 10.0 ** (-snr_db / 10.0))

    y = signal.copy()
    if var > 0.0:
        scale = np.sqrt(var / 2.0)
        for k, rng in enumerate(noise_streams(seed, k_total)):
            y[k] += scale * (
                rng.standard_normal((n_rx, length)) + 1j * rng.standard_normal((n_rx, length))
            )
    return ReceivedBlock(y=y, snr_db=snr_db, noise_var=var)


def dump_simulation(
    out_dir: str,
    received: ReceivedBlock,
    pilots: PilotBlock,
    true_nlos: np.ndarray,
    h_los: np.ndarray,
) -> None:
    """Write Y, S, and the channel stacks in the shared binary matrix format."""
    parts = {
        "y": np.asarray(received.y),
        "s": np.asarray(pilots.s, dtype=np.complex128),
        "h_nlos": np.asarray(true_nlos),
        "h_los": np.asarray(h_los),
    }
    meta = {"noise_var": received.noise_var, "snr_db": received.snr_db}
    for name, array in parts.items():
        matio.save_matrix(os.path.join(out_dir, f"{name}.icmx"), array, meta=meta)
