"""Exact dynamic mode decomposition and linear forecasting.

Snapshots are split into X1 (columns 0..m-2) and X2 (columns 1..m-1). With the
rank-r SVD X1 ~ U S V*, the reduced operator is

    A_tilde = U* X2 V S^-1

whose eigenpairs (lam_k, w_k) give the exact modes phi_k = X2 V S^-1 w_k. The
state at month t (t = 0 being the first snapshot) is approximated by
Re(sum_k phi_k lam_k^t b_k), with b fitted to the first snapshot by least squares.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IllConditionedError, RankError, StructuralError
from .preprocess import SnapshotMatrix


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray  # (n, r)
    s: np.ndarray  # (r,), descending
    V: np.ndarray  # (m, r)

    @property
    def rank(self) -> int:
        return len(self.s)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.conj().T


def truncated_svd(X, r: int) -> SvdFactors:
    """Best rank-r factorization of X.

    Singular-vector signs are fixed so that the largest-magnitude entry of each
    left singular vector is positive, making the output deterministic.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise StructuralError("truncated_svd expects a 2-D matrix")
    if not 1 <= r <= min(X.shape):
        raise RankError(f"rank {r} outside [1, {min(X.shape)}] for a {X.shape[0]}x{X.shape[1]} matrix")
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    U, s, V = U[:, :r], s[:r], Vh[:r].conj().T
    pivot = np.argmax(np.abs(U), axis=0)
    phase = U[pivot, np.arange(r)]
    phase = phase / np.abs(phase)
    phase[~np.isfinite(phase)] = 1.0
    U = U / phase
    V = V * phase.conj()
    return SvdFactors(U, s, V)


def rank_by_energy(singular_values, threshold: float) -> int:
    """Smallest r whose leading singular values hold ``threshold`` of the energy."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        raise RankError("no singular values")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    energy = np.cumsum(s**2) / np.sum(s**2)
    # cumulative sums can land a few ulps under 1.0
    hits = np.flatnonzero(energy >= threshold - 1e-12)
    return int(hits[0]) + 1 if hits.size else s.size


@dataclass(frozen=True)
class DmdModel:
    modes: np.ndarray  # (n, r) complex, unit-norm columns
    eigenvalues: np.ndarray  # (r,) discrete-time
    amplitudes: np.ndarray  # (r,)
    n_snapshots: int  # m, columns of the fitted matrix
    dt: float = 1.0
    origin: tuple[int, int] | None = None  # (year, month) of the first snapshot

    @property
    def rank(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_state(self) -> int:
        return self.modes.shape[0]

    @property
    def exponents(self) -> np.ndarray:
        """Continuous-time exponents ln(lambda)/dt on the principal branch."""
        return np.log(self.eigenvalues.astype(complex)) / self.dt


def dmd_fit(X, r: int, rcond: float = 1e-13) -> DmdModel:
    """Fit exact DMD at projection rank ``r``.

    ``X`` is a :class:`SnapshotMatrix` or a plain (n, m) array. Raises
    :class:`IllConditionedError` when the r-th kept singular value is
    numerically zero relative to the first (``sigma_r / sigma_1 <= rcond``).
    """
    origin = None
    if isinstance(X, SnapshotMatrix):
        origin = X.months[0]
        X = X.data
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] < 2:
        raise StructuralError("need a 2-D snapshot matrix with at least 2 columns")
    n, m = X.shape
    if not 1 <= r <= min(n, m - 1):
        raise RankError(f"rank {r} outside [1, {min(n, m - 1)}] for {n} states and {m} snapshots")
    X1, X2 = X[:, :-1], X[:, 1:]

    svd = truncated_svd(X1, r)
    ratio = svd.s[-1] / svd.s[0] if svd.s[0] > 0 else 0.0
    if ratio <= rcond:
        raise IllConditionedError(f"sigma_r/sigma_1 = {ratio:.3e} at rank {r}", ratio)

    # X2 V S^-1 is reused for both the reduced operator and the modes
    X2VSinv = (X2 @ svd.V) / svd.s
    A_tilde = svd.U.conj().T @ X2VSinv
    lam, W = np.linalg.eig(A_tilde)

    modes = X2VSinv @ W
    norms = np.linalg.norm(modes, axis=0)
    # lam = 0 gives a vanishing exact mode; fall back to the projected mode
    null = norms <= 1e-14 * max(norms.max(), 1.0)
    if null.any():
        modes[:, null] = svd.U @ W[:, null]
        norms[null] = np.linalg.norm(modes[:, null], axis=0)
    modes = modes / norms

    b, *_ = np.linalg.lstsq(modes, X[:, 0].astype(modes.dtype), rcond=None)

    order = np.argsort(-np.abs(b), kind="stable")
    return DmdModel(modes[:, order], lam[order], b[order], m, 1.0, origin)


def _propagate(model: DmdModel, times) -> np.ndarray:
    times = np.asarray(times)
    powers = model.eigenvalues[:, None] ** times[None, :]
    return (model.modes @ (powers * model.amplitudes[:, None])).real


def dmd_reconstruct(model: DmdModel, t: int) -> np.ndarray:
    """State estimate at month index ``t`` (0 = first snapshot)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return _propagate(model, [t])[:, 0]


def dmd_forecast(model: DmdModel, steps: int) -> np.ndarray:
    """(n, steps) forecast of the months following the last fitted snapshot.

    The raw linear forecast may contain negative values; see
    :func:`clamp_nonnegative` for the reporting-layer fix.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return _propagate(model, np.arange(model.n_snapshots, model.n_snapshots + steps))


def clamp_nonnegative(forecast) -> np.ndarray:
    """Post-processing for rainfall: negative forecast values become 0."""
    return np.maximum(np.asarray(forecast, dtype=float), 0.0)


def _fmt_complex(z) -> str:
    re, im = float(z.real), float(z.imag)
    return f"{re!r}{'-' if np.signbit(im) else '+'}{abs(im)!r}i"


def _parse_complex(text: str) -> complex:
    return complex(text.strip().replace("i", "j"))


def save_model(model: DmdModel, directory) -> None:
    """Write ``header.json``, ``modes.csv``, ``eigenvalues.csv``, ``amplitudes.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    header = {
        "n": model.n_state,
        "m": model.n_snapshots,
        "r": model.rank,
        "dt": model.dt,
        "origin": None if model.origin is None else f"{model.origin[0]:04d}-{model.origin[1]:02d}",
    }
    (d / "header.json").write_text(json.dumps(header, indent=2) + "\n")
    with open(d / "modes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"mode_{k}" for k in range(model.rank)])
        for row in model.modes.astype(complex):
            w.writerow([_fmt_complex(z) for z in row])
    for name, vec in (("eigenvalues", model.eigenvalues), ("amplitudes", model.amplitudes)):
        with open(d / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", name[:-1]])
            for k, z in enumerate(np.asarray(vec, dtype=complex)):
                w.writerow([k, _fmt_complex(z)])


def load_model(directory) -> DmdModel:
    d = Path(directory)
    header = json.loads((d / "header.json").read_text())
    with open(d / "modes.csv", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    modes = np.array([[_parse_complex(c) for c in row] for row in rows], dtype=complex)
    vecs = {}
    for name in ("eigenvalues", "amplitudes"):
        with open(d / f"{name}.csv", newline="") as fh:
            vecs[name] = np.array([_parse_complex(row[1]) for row in list(csv.reader(fh))[1:]])
    modes = modes.reshape(header["n"], header["r"])
    origin = None
    if header.get("origin"):
        y, mo = header["origin"].split("-")
        origin = (int(y), int(mo))
    return DmdModel(modes, vecs["eigenvalues"], vecs["amplitudes"], header["m"], header["dt"], origin)
