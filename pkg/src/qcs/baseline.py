"""Classical compressed-sensing baselines to benchmark against.

Dense Gaussian and random one-hot sampling matrices, the K*log(N/K)
measurement bound, an orthogonal-matching-pursuit decoder, and an
empirical restricted-isometry check on random sparse vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, InvalidArgument, SingularSystem
from .frontend import _rng

GAUSSIAN_RANDOM = "gaussian"
ONE_HOT_SAMPLING = "one_hot"

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SensingMatrix:
    """An M x N measurement matrix of a declared kind."""

    entries: np.ndarray
    kind: str

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2:
            raise InvalidArgument("entries must form an M x N matrix")
        if self.kind not in (GAUSSIAN_RANDOM, ONE_HOT_SAMPLING):
            raise InvalidArgument(f"unknown matrix kind {self.kind!r}")
        if self.kind == ONE_HOT_SAMPLING:
            ok = np.all(np.isin(entries, (0.0, 1.0))) and np.all(entries.sum(axis=1) == 1)
            if not ok:
                raise InvalidArgument("one-hot rows must contain a single 1")

    @property
    def shape(self):
        return self.entries.shape


def gaussian_matrix(m: int, n: int, seed=None) -> SensingMatrix:
    """i.i.d. N(0, 1/M) entries, the standard dense CS ensemble."""
    if m < 1 or n < 1:
        raise InvalidArgument("matrix dimensions must be positive")
    rng = _rng(seed)
    entries = rng.standard_normal((m, n)) / np.sqrt(m)
    return SensingMatrix(entries=entries, kind=GAUSSIAN_RANDOM)


def one_hot_matrix(m: int, n: int, seed=None, columns=None) -> SensingMatrix:
    """Rows one-hot at uniformly random columns (or at given columns)."""
    if m < 1 or n < 1:
        raise InvalidArgument("matrix dimensions must be positive")
    if columns is None:
        rng = _rng(seed)
        columns = rng.integers(0, n, size=m)
    columns = np.asarray(columns, dtype=np.int64)
    if columns.size != m or columns.min() < 0 or columns.max() >= n:
        raise InvalidArgument("need one valid column index per row")
    entries = np.zeros((m, n))
    entries[np.arange(m), columns] = 1.0
    return SensingMatrix(entries=entries, kind=ONE_HOT_SAMPLING)


@dataclass(frozen=True)
class RipReport:
    """Outcome of an empirical restricted-isometry check."""

    delta_hat: float
    pass_fraction: float
    trials: int

    def __post_init__(self):
        if self.delta_hat < 0 or not 0 <= self.pass_fraction <= 1:
            raise InvalidArgument("malformed RIP report")


def classical_bound(k: int, n: int, c: float = 1.0) -> int:
    """Non-adaptive measurement count M >= C * K * ln(N/K), floored at K.

    The log base is a convention; natural log with C exposed covers the
    family of published constants.
    """
    k, n = int(k), int(n)
    if k < 1 or k > n:
        raise InvalidArgument("need 1 <= K <= N")
    if c <= 0:
        raise InvalidArgument("the bound constant must be positive")
    return max(k, int(np.ceil(c * k * np.log(n / k))))


def omp_solve(theta, y, k: int, return_residuals: bool = False):
    """Orthogonal matching pursuit: K greedy atom picks with a full
    least-squares refit (normal equations) after each pick.

    Returns the K-sparse coefficient vector; on request also the residual
    norm after each iteration.  A rank-deficient selected submatrix raises
    ``SingularSystem``.
    """
    mat = theta.entries if isinstance(theta, SensingMatrix) else np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = mat.shape
    k = int(k)
    if k < 1 or k > n:
        raise InvalidArgument("sparsity must be in [1, N]")
    if y.shape != (m,):
        raise InvalidArgument("measurement vector length must match the row count")
    residual = y.copy()
    selected: list[int] = []
    coef = np.zeros(0)
    history = [float(np.linalg.norm(residual))]
    for _ in range(k):
        if history[-1] == 0.0:
            break
        scores = np.abs(mat.T @ residual)
        if selected:
            scores[selected] = -np.inf
        selected.append(int(np.argmax(scores)))
        sub = mat[:, selected]
        gram = sub.T @ sub
        if np.linalg.cond(gram) > _COND_LIMIT:
            raise SingularSystem("selected atoms are numerically dependent")
        coef = np.linalg.solve(gram, sub.T @ y)
        residual = y - sub @ coef
        history.append(float(np.linalg.norm(residual)))
    x = np.zeros(n)
    x[selected] = coef
    if return_residuals:
        return x, history
    return x


def _sparse_unit_vector(n: int, k: int, rng) -> np.ndarray:
    support = rng.choice(n, size=k, replace=False)
    values = rng.standard_normal(k)
    values /= np.linalg.norm(values)
    x = np.zeros(n)
    x[support] = values
    return x


def rip_check(
    phi: SensingMatrix,
    k: int,
    delta: float,
    trials: int,
    seed=None,
    sparse_basis: str | None = None,
) -> RipReport:
    """Test (1 - delta) * s * ||x||^2 <= ||Phi x||^2 <= (1 + delta) * s * ||x||^2
    on random K-sparse unit vectors, with s = M/N for one-hot samplers and
    s = 1 for Gaussian matrices.

    ``sparse_basis`` picks where the vectors are sparse: "identity" tests the
    sampler on directly sparse inputs (it fails: most rows miss the support),
    while "fourier" embeds the sparse vector through the unitary DFT first,
    matching the spectrally sparse signals the sampler is meant for.  The
    default is "fourier" for one-hot samplers and "identity" otherwise.
    """
    if not 0 < delta < 1:
        raise InvalidArgument("delta must be in (0, 1)")
    if trials < 1:
        raise InvalidArgument("need at least one trial")
    m, n = phi.shape
    if not 1 <= k <= n:
        raise InvalidArgument("need 1 <= K <= N")
    if sparse_basis is None:
        sparse_basis = "fourier" if phi.kind == ONE_HOT_SAMPLING else "identity"
    if sparse_basis not in ("identity", "fourier"):
        raise InvalidArgument(f"unknown sparse basis {sparse_basis!r}")
    scale = m / n if phi.kind == ONE_HOT_SAMPLING else 1.0
    rng = _rng(seed)
    worst = 0.0
    passes = 0
    for _ in range(int(trials)):
        s = _sparse_unit_vector(n, int(k), rng)
        if sparse_basis == "fourier":
            x = np.fft.ifft(s) * np.sqrt(n)  # unitary; preserves the norm
        else:
            x = s
        energy = float(np.sum(np.abs(phi.entries @ x) ** 2))
        distortion = abs(energy / scale - 1.0)
        worst = max(worst, distortion)
        passes += distortion <= delta
    return RipReport(delta_hat=worst, pass_fraction=passes / trials, trials=int(trials))


def matrix_to_csv(matrix: SensingMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([matrix.kind])
        for row in matrix.entries:
            writer.writerow([f"{v:.17g}" for v in row])


def matrix_from_csv(path) -> SensingMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        kind = next(reader)[0]
        entries = np.array([[float(v) for v in row] for row in reader])
    return SensingMatrix(entries=entries, kind=kind)


def fit_line(x, y):
    """Least-squares slope/intercept/r^2 for scaling fits."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientData("need at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        r2 = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)
