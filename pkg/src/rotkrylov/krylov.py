"""Ground-truth Hamiltonians, real-time Krylov states and noiseless subspace pencils."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateSpectrum, NotHermitian, ParseError
from .pencil import MatrixPencil, eigh, hermitian

FILE_ATOL = 1e-12


@dataclass(frozen=True)
class HamiltonianModel:
    matrix: np.ndarray
    spectrum: np.ndarray
    eigenbasis: np.ndarray

    @classmethod
    def from_matrix(cls, a) -> "HamiltonianModel":
        a = hermitian(a)
        lam, u = eigh(a)
        return cls(a, lam, u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def ground_energy(self) -> float:
        return float(self.spectrum[0])


@dataclass(frozen=True)
class ToyParams:
    xi: float = 1.1
    delta: float = 0.1
    big_delta: float = 2.0
    s: float = 0.9

    def __post_init__(self):
        if min(self.xi, self.delta, self.big_delta) <= 0:
            raise ValueError("xi, delta and big_delta must be positive")
        if not 0 <= self.s < 1:
            raise ValueError("s must lie in [0, 1)")

    @property
    def ground_energy(self) -> float:
        return self.xi / (1 - self.s)


@dataclass(frozen=True)
class KrylovConfig:
    dt: float
    max_dim: int
    psi0: np.ndarray = field(repr=False)

    def __post_init__(self):
        psi0 = np.asarray(self.psi0, dtype=complex)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_dim < 2:
            raise ValueError("max_dim must be at least 2")
        if abs(np.linalg.norm(psi0) - 1) > 1e-12:
            raise ValueError("psi0 must have unit norm")
        psi0.setflags(write=False)
        object.__setattr__(self, "psi0", psi0)


def build_toy_pencil(params: ToyParams = ToyParams()) -> MatrixPencil:
    """Three-state pencil whose Hamiltonian is diagonal in the eigenbasis of S."""
    xi, s = params.xi, params.s
    overlap = np.array([[1, 0, 0], [0, 1, s], [0, s, 1]], dtype=float)
    e0 = np.array([1.0, 0.0, 0.0])
    e_minus = np.array([0.0, 1.0, -1.0]) / np.sqrt(2)
    e_plus = np.array([0.0, 1.0, 1.0]) / np.sqrt(2)
    h = (
        xi * np.outer(e_minus, e_minus)
        + (xi / (1 - s) + params.delta) * np.outer(e0, e0)
        + ((1 + s) * xi / (1 - s) + params.big_delta) * np.outer(e_plus, e_plus)
    )
    return MatrixPencil(h, overlap)


def random_hamiltonian(dim: int, seed: int, gap_scale: float = 1.0) -> HamiltonianModel:
    """Seeded GUE matrix rescaled so that ``max(spectrum) - min(spectrum) == gap_scale``."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (a + a.conj().T)
    lam = np.linalg.eigvalsh(h)
    return HamiltonianModel.from_matrix(h * (gap_scale / (lam[-1] - lam[0])))


def default_psi0(model: HamiltonianModel, seed: int = 0, mix: float = 0.5) -> np.ndarray:
    """Reference-like start state: the basis vector with the lowest diagonal energy
    plus a seeded random admixture, so every eigenvector has nonzero weight."""
    rng = np.random.default_rng(seed)
    n = model.dim
    psi = np.zeros(n, dtype=complex)
    psi[int(np.argmin(np.diag(model.matrix).real))] = 1.0
    g = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi = psi + mix * g / np.linalg.norm(g)
    return psi / np.linalg.norm(psi)


def select_dt(model: HamiltonianModel) -> float:
    """``pi / (lambda_max - lambda_min)``."""
    spread = float(model.spectrum[-1] - model.spectrum[0])
    if spread < 1e-12:
        raise DegenerateSpectrum(f"spectral range {spread:.3e} is too small")
    return np.pi / spread


def _coefficients(model: HamiltonianModel, cfg: KrylovConfig, steps) -> np.ndarray:
    # eigenbasis coefficients of exp(-i H j dt) psi0 for each j in steps, as columns
    c0 = model.eigenbasis.conj().T @ cfg.psi0
    steps = np.asarray(steps, dtype=float)
    phases = np.exp(-1j * np.outer(model.spectrum, steps) * cfg.dt)
    return phases * c0[:, None]


def krylov_state(model: HamiltonianModel, cfg: KrylovConfig, j: int) -> np.ndarray:
    """``exp(-i H j dt) psi0`` evaluated through the cached eigenbasis."""
    if j < 0 or j > cfg.max_dim:
        raise ValueError(f"j={j} outside [0, {cfg.max_dim}]")
    if j == 0:
        return cfg.psi0.copy()
    return model.eigenbasis @ _coefficients(model, cfg, [j])[:, 0]


def build_subspace_pencil(model: HamiltonianModel, cfg: KrylovConfig, d: int) -> MatrixPencil:
    """Projected Hamiltonian and overlap of the first ``d`` Krylov states."""
    if d < 1 or d > cfg.max_dim + 1:
        raise ValueError(f"d={d} outside [1, {cfg.max_dim + 1}]")
    c = _coefficients(model, cfg, np.arange(d))
    h = c.conj().T @ (model.spectrum[:, None] * c)
    s = c.conj().T @ c
    iu = np.triu_indices(d, 1)
    h[(iu[1], iu[0])] = h[iu].conj()
    s[(iu[1], iu[0])] = s[iu].conj()
    h[np.diag_indices(d)] = h[np.diag_indices(d)].real
    # basis states are unit-norm under unitary evolution
    s[np.diag_indices(d)] = 1.0
    return MatrixPencil(h, s)


# -- dense-matrix JSON ------------------------------------------------------


def matrix_to_json(a) -> str:
    """Canonical dense-matrix JSON; the lower triangle is written as the
    conjugate of the upper one so the file is exactly Hermitian."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    iu = np.triu_indices(n, 1)
    a[(iu[1], iu[0])] = a[iu].conj()
    a[np.diag_indices(n)] = a[np.diag_indices(n)].real
    entries = [[float(z.real), float(z.imag)] for z in a.reshape(-1)]
    return json.dumps({"dim": n, "entries": entries}, sort_keys=True)


def save_matrix(path, a) -> None:
    Path(path).write_text(matrix_to_json(a) + "\n")


def parse_matrix(text: str, source: str = "<string>") -> np.ndarray:
    """Parse dense-matrix JSON and validate Hermiticity to 1e-12."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict) or "dim" not in obj or "entries" not in obj:
        raise ParseError(f"{source}: expected an object with 'dim' and 'entries'")
    n = obj["dim"]
    entries = obj["entries"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"{source}: 'dim' must be a positive integer")
    if not isinstance(entries, list) or len(entries) != n * n:
        raise ParseError(f"{source}: 'entries' must hold dim*dim = {n * n} [re, im] pairs")
    try:
        arr = np.array(entries, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{source}: non-numeric entry ({exc})") from exc
    if arr.shape != (n * n, 2):
        raise ParseError(f"{source}: each entry must be an [re, im] pair")
    a = (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)
    asym = np.max(np.abs(a - a.conj().T))
    if asym > FILE_ATOL:
        raise NotHermitian(asym)
    return a


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_matrix(text, str(path))


def load_hamiltonian(path) -> HamiltonianModel:
    return HamiltonianModel.from_matrix(load_matrix(path))
