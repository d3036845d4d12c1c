"""Pilot-based channel estimation, LOS cancellation, and CS stacking."""

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, InconsistentBlockDims, SingularPilots

_MAX_PILOT_COND = 1e8


@dataclass(frozen=True)
class MeasurementVector:
    """Stacked multipath estimates in the same ordering as the operator A."""

    h: np.ndarray  # (K*N_T*N_R,)
    n_carriers: int
    n_tx: int
    n_rx: int
    ordering: str = "m = (k*N_T + t)*N_R + r; k outer, t middle, r inner"

    def __post_init__(self):
        expected = self.n_carriers * self.n_tx * self.n_rx
        if self.h.shape != (expected,):
            raise InconsistentBlockDims(
                f"stacked vector has length {self.h.shape}, expected ({expected},)"
            )


def estimate_channel(y_k: np.ndarray, s_k: np.ndarray) -> np.ndarray:
    """Least-squares channel estimate Y S^H (S S^H)^{-1}.

    With orthogonal pilots (S S^H = T I) this reduces to the matched
    filter Y S^H / T.  Raises SingularPilots when the pilot Gram matrix is
    ill-conditioned (condition number above 1e8).
    """
    gram = s_k @ s_k.conj().T
    if np.linalg.cond(gram) > _MAX_PILOT_COND:
        raise SingularPilots("pilot rows are (nearly) linearly dependent")
    return np.linalg.solve(gram.T, (y_k @ s_k.conj().T).T).T


def cancel_los(h_hat_k: np.ndarray, h_los_k: np.ndarray) -> np.ndarray:
    """Subtract the analytically known LOS gain from the channel estimate."""
    if h_hat_k.shape != h_los_k.shape:
        raise DimMismatch(f"shapes {h_hat_k.shape} and {h_los_k.shape} differ")
    return h_hat_k - h_los_k


def stack_measurements(blocks) -> MeasurementVector:
    """Vectorize K multipath estimates into the stacked measurement vector.

    Within a subcarrier, columns (transmit antennas) are stacked outer and
    rows (receive antennas) inner, matching the operator's row ordering.
    """
    blocks = [np.asarray(b) for b in blocks]
    if not blocks:
        raise InconsistentBlockDims("no blocks to stack")
    shape = blocks[0].shape
    if len(shape) != 2 or any(b.shape != shape for b in blocks):
        raise InconsistentBlockDims("all blocks must share one (N_R, N_T) shape")
    n_rx, n_tx = shape
    h = np.concatenate([b.flatten(order="F") for b in blocks])
    return MeasurementVector(h=h, n_carriers=len(blocks), n_tx=n_tx, n_rx=n_rx)


def unstack_measurements(vec: MeasurementVector):
    """Inverse of stack_measurements; returns the list of (N_R, N_T) blocks."""
    per_block = vec.n_tx * vec.n_rx
    return [
        vec.h[k * per_block : (k + 1) * per_block].reshape((vec.n_rx, vec.n_tx), order="F")
        for k in range(vec.n_carriers)
    ]
