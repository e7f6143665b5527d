"""Average-variance metrics for auxiliary block designs and square array designs.

Two independent routes are provided.  ``direct_metrics`` assembles the full
treatment information matrix of the row-column model and averages pairwise
variances from its Moore-Penrose inverse.  ``closed_form_metrics`` needs only
the auxiliary block design's average pairwise variance ``a_abd`` and maps it
linearly to the test-line metrics.  All variances are in units of sigma^2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    AuxiliaryBlockDesign,
    DesignError,
    SquareArrayDesign,
    error_df,
    from_square_array,
    validate_auxiliary,
    validate_square,
    _require,
)

# eigenvalues below RANK_TOL * (largest eigenvalue) count as zero
RANK_TOL = 1e-9


class DisconnectedError(DesignError):
    pass


class Method(str, enum.Enum):
    DIRECT = "direct"
    CLOSED_FORM = "closed_form"
    YOUDEN = "youden"


@dataclass(frozen=True, eq=False)
class InformationMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    def rank(self) -> int:
        w = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(w > RANK_TOL * max(w.max(), 1.0)))

    def is_connected(self) -> bool:
        return self.rank() == self.dim - 1

    def pinv(self) -> np.ndarray:
        """Moore-Penrose inverse via the symmetric eigendecomposition."""
        w, v = self.eigh()
        keep = w > RANK_TOL * max(w.max(), 1.0)
        return (v[:, keep] / w[keep]) @ v[:, keep].T


@dataclass(frozen=True)
class MetricsReport:
    a_abd: float | None
    a_cc: float | None
    a_ct: float | None
    a_tt: float | None
    error_df: int
    connected: bool
    method: Method

    def as_dict(self) -> dict:
        return {
            "a_abd": self.a_abd,
            "a_cc": self.a_cc,
            "a_ct": self.a_ct,
            "a_tt": self.a_tt,
            "error_df": self.error_df,
            "connected": self.connected,
            "method": self.method.value,
        }

    def max_difference(self, other: "MetricsReport") -> float:
        fields = ("a_abd", "a_cc", "a_ct", "a_tt")
        diffs = [abs(getattr(self, f) - getattr(other, f)) for f in fields
                 if getattr(self, f) is not None and getattr(other, f) is not None]
        return max(diffs) if diffs else float("nan")


# -- auxiliary block design --------------------------------------------------------

def aux_information(aux: AuxiliaryBlockDesign) -> InformationMatrix:
    """``C_b = kI - N N^T / k`` for replication k and block size k."""
    _require(validate_auxiliary(aux))
    n = aux.incidence().astype(float)
    return InformationMatrix(aux.k * np.eye(aux.t) - n @ n.T / aux.k)


def _average_from_eigenvalues(theta: np.ndarray, t: int) -> float:
    return 2.0 / (t - 1) * float(np.sum(1.0 / theta))


def abd_variance(aux: AuxiliaryBlockDesign) -> float:
    """Average variance of pairwise treatment differences in the block design itself."""
    info = aux_information(aux)
    w = np.linalg.eigvalsh(info.matrix)
    nonzero = w[w > RANK_TOL * w.max()]
    if len(nonzero) != aux.t - 1:
        raise DisconnectedError("disconnected auxiliary design")
    return _average_from_eigenvalues(nonzero, aux.t)


def circulant_eigenvalues(first_row) -> np.ndarray:
    """Eigenvalues of a symmetric circulant matrix: real part of the DFT of its first row."""
    return np.fft.fft(np.asarray(first_row, dtype=float)).real


def cyclic_information_row(t: int, initial_block) -> np.ndarray:
    """First row of ``C_b`` for the design developed from ``initial_block`` mod t."""
    block = sorted({int(b) % t for b in initial_block})
    k = len(block)
    conc = np.zeros(t)
    for a in block:
        for b in block:
            conc[(b - a) % t] += 1
    row = -conc / k
    row[0] += k
    return row


def cyclic_abd_variance(t: int, initial_block) -> float:
    """``a_abd`` of a cyclic design from the circulant spectrum (no dense solve)."""
    theta = circulant_eigenvalues(cyclic_information_row(t, initial_block))[1:]
    if np.any(theta < RANK_TOL * len(initial_block)):
        raise DisconnectedError("disconnected auxiliary design")
    return _average_from_eigenvalues(theta, t)


def cyclic_abd_batch(t: int, blocks: np.ndarray) -> np.ndarray:
    """Vectorised ``a_abd`` for many initial blocks (rows of residues), NaN if disconnected.

    The first row of N N^T is the cyclic autocorrelation of the block's
    indicator vector, so its spectrum is ``|DFT(indicator)|^2``.
    """
    blocks = np.asarray(blocks)
    n, k = blocks.shape
    ind = np.zeros((n, t))
    ind[np.arange(n)[:, None], blocks % t] = 1.0
    power = np.abs(np.fft.rfft(ind, axis=1)[:, 1:]) ** 2
    theta = k - power / k
    # m and t-m share an eigenvalue; the Nyquist term (t even) appears once
    weights = np.full(theta.shape[1], 2.0)
    if t % 2 == 0:
        weights[-1] = 1.0
    with np.errstate(divide="ignore"):
        inv = np.where(theta > RANK_TOL * k, 1.0 / theta, np.inf)
    out = 2.0 / (t - 1) * (inv * weights).sum(axis=1)
    out[~np.isfinite(out)] = np.nan
    return out


# -- square array design -------------------------------------------------------------

def _incidences(sq: SquareArrayDesign) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Treatment replications and treatment-by-row / treatment-by-column incidence.

    Treatments are numbered controls first (0..k-1) then test lines.
    """
    t, k = sq.t, sq.k
    v = k + sq.n_test_lines
    g = sq.grid
    treatment = np.where(g < 0, -g - 1, g + k - 1)
    rows = np.repeat(np.arange(t), t)
    cols = np.tile(np.arange(t), t)
    tr = treatment.ravel()
    n_row = np.zeros((v, t))
    n_col = np.zeros((v, t))
    np.add.at(n_row, (tr, rows), 1.0)
    np.add.at(n_col, (tr, cols), 1.0)
    reps = n_row.sum(axis=1)
    return reps, n_row, n_col


def square_information(sq: SquareArrayDesign) -> InformationMatrix:
    """``C = R - Lr/t - Lc/t + r r^T / t^2`` from replications and row/column concurrences."""
    _require(validate_square(sq))
    t = sq.t
    reps, n_row, n_col = _incidences(sq)
    c = np.diag(reps) - (n_row @ n_row.T) / t - (n_col @ n_col.T) / t + np.outer(reps, reps) / t**2
    return InformationMatrix(c)


def projected_information(sq: SquareArrayDesign) -> InformationMatrix:
    """``X^T (I - Z (Z^T Z)^- Z^T) X`` with an explicit generalized inverse.

    Slow reference construction used to cross-check ``square_information``.
    """
    t, k = sq.t, sq.k
    v = k + sq.n_test_lines
    g = sq.grid.ravel()
    x = np.zeros((t * t, v))
    x[np.arange(t * t), np.where(g < 0, -g - 1, g + k - 1)] = 1.0
    zr = np.kron(np.eye(t), np.ones((t, 1)))
    zc = np.kron(np.ones((t, 1)), np.eye(t))
    z = np.hstack([zr, zc])
    proj = np.eye(t * t) - z @ np.linalg.pinv(z.T @ z) @ z.T
    return InformationMatrix(x.T @ proj @ x)


def _mean_within(p: np.ndarray, idx: np.ndarray) -> float:
    sub = p[np.ix_(idx, idx)]
    n = len(idx)
    return float((n * np.trace(sub) - sub.sum()) / (n * (n - 1) / 2))


def _mean_between(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    da = np.diag(p)[a]
    db = np.diag(p)[b]
    total = len(b) * da.sum() + len(a) * db.sum() - 2 * p[np.ix_(a, b)].sum()
    return float(total / (len(a) * len(b)))


def direct_metrics(sq: SquareArrayDesign) -> MetricsReport:
    info = square_information(sq)
    df = error_df(sq.t, sq.k)
    if not info.is_connected():
        return MetricsReport(None, None, None, None, df, False, Method.DIRECT)
    p = info.pinv()
    ctrl = np.arange(sq.k)
    tests = np.arange(sq.k, info.dim)
    try:
        a_abd = abd_variance(from_square_array(sq))
    except DisconnectedError:
        a_abd = None
    return MetricsReport(
        a_abd=a_abd,
        a_cc=_mean_within(p, ctrl),
        a_ct=_mean_between(p, ctrl, tests),
        a_tt=_mean_within(p, tests),
        error_df=df,
        connected=True,
        method=Method.DIRECT,
    )


# -- closed forms ----------------------------------------------------------------

def metrics_from_abd(a_abd: float, t: int, k: int, method: Method = Method.CLOSED_FORM) -> MetricsReport:
    t1 = t * (t - k)
    excess = a_abd - 2.0 / t
    a_tt = 2.0 + 2.0 * t * (t - 1) / (t1 - 1) * excess
    a_ct = 1.0 + 1.0 / t + (t - 1) / (t - k) * excess
    return MetricsReport(a_abd, 2.0 / t, a_ct, a_tt, error_df(t, k), True, method)


def closed_form_metrics(aux: AuxiliaryBlockDesign) -> MetricsReport:
    return metrics_from_abd(abd_variance(aux), aux.t, aux.k)


def youden_lambda(t: int, k: int) -> int:
    num = k * (k - 1)
    if num % (t - 1):
        raise DesignError(f"not Youden parameters: k(k-1)/(t-1) = {num}/{t - 1} is not an integer")
    return num // (t - 1)


def youden_metrics(t: int, k: int, lam: int | None = None) -> MetricsReport:
    """Metrics of a square array built on a symmetric BIBD (Youden square)."""
    expected = youden_lambda(t, k)
    if lam is not None and lam != expected:
        raise DesignError(f"not Youden parameters: lambda must be {expected} for t={t}, k={k}")
    lam = expected
    t1 = t * (t - k)
    a_abd = 2.0 * k / (lam * t)
    a_ct = 1.0 + 1.0 / t + a_abd
    a_tt = 2.0 + 4.0 * k * (t - k) / ((t1 - 1) * lam)
    return MetricsReport(a_abd, 2.0 / t, a_ct, a_tt, error_df(t, k), True, Method.YOUDEN)


def predicted_ct(a_tt: float, t: int, k: int) -> float:
    """Control/test-line average variance implied by the test/test average variance."""
    t1 = t * (t - k)
    return (k - 1) / (k * t) + 1.0 / (k * (t - k)) + (t1 - 1) / (2.0 * t1) * a_tt


def check_ct_tt_relation(report: MetricsReport, t: int, k: int, tol: float = 1e-8) -> bool:
    if not report.connected:
        return False
    return abs(report.a_ct - predicted_ct(report.a_tt, t, k)) < tol


def is_psd_zero_rowsum(info: InformationMatrix, row_tol: float = 1e-10, eig_tol: float = 1e-8) -> bool:
    m = info.matrix
    return (np.abs(m.sum(axis=1)).max() < row_tol
            and np.allclose(m, m.T, atol=1e-12)
            and np.linalg.eigvalsh(m).min() > -eig_tol)
