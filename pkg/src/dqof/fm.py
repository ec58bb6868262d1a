"""Third-order factorization machine surrogate and its coefficient extraction.

The model predicts, for a binary input x,

    b0 + sum_i h_i x_i
       + 1/2 sum_f [S1_f^2 - S2_f]
       + 1/6 sum_f [S1_f^3 - 3 S1_f S2_f + 2 S3_f]

with power sums S{t}_f = sum_i v_{i,f}^t x_i (bits satisfy x^t = x). The
quadratic and cubic parts are exactly the ANOVA kernels of degrees 2 and 3,
so the trained parameters map in closed form to interaction coefficients:
J_ij = sum_f v_i v_j and K_ijr = sum_f v_i v_j v_r, with the bias returned
separately since a constant shift never moves the argmin.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .hubo import HuboProblem, _pair_index_cols, _triple_index_cols, as_bits
from .rng import TAG_FM, as_generator, stream


@dataclass(frozen=True, eq=False)
class FactorizationMachine:
    bias: float
    linear: np.ndarray   # (n_vars,)
    factors: np.ndarray  # (n_vars, rank)

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=np.float64)
        fac = np.asarray(self.factors, dtype=np.float64)
        if lin.ndim != 1 or fac.ndim != 2 or fac.shape[0] != lin.size:
            raise ValueError("need linear (N,) and factors (N, rank)")
        if fac.shape[1] < 1:
            raise ValueError("rank must be >= 1")
        if not (np.isfinite(self.bias) and np.all(np.isfinite(lin)) and np.all(np.isfinite(fac))):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "factors", fac)

    @property
    def n_vars(self) -> int:
        return int(self.linear.size)

    @property
    def rank(self) -> int:
        return int(self.factors.shape[1])

    def to_json_dict(self) -> dict:
        return {
            "format": "fm3",
            "bias": float(self.bias),
            "linear": [float(v) for v in self.linear],
            "factors": [[float(v) for v in row] for row in self.factors],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FactorizationMachine":
        if doc.get("format") != "fm3":
            raise ValueError("not a factorization machine document")
        return cls(
            bias=float(doc["bias"]),
            linear=np.asarray(doc["linear"], dtype=np.float64),
            factors=np.asarray(doc["factors"], dtype=np.float64),
        )

    def save(self, path: str) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "FactorizationMachine":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _power_sums(fm: FactorizationMachine, xf: np.ndarray):
    s1 = fm.factors.T @ xf
    s2 = (fm.factors ** 2).T @ xf
    s3 = (fm.factors ** 3).T @ xf
    return s1, s2, s3


def fm_predict(fm: FactorizationMachine, x) -> float:
    """Model output for one assignment, via the power-sum form."""
    xf = as_bits(x, fm.n_vars).astype(np.float64)
    s1, s2, s3 = _power_sums(fm, xf)
    quad = 0.5 * np.sum(s1 ** 2 - s2)
    cubic = np.sum(s1 ** 3 - 3.0 * s1 * s2 + 2.0 * s3) / 6.0
    return float(fm.bias + fm.linear @ xf + quad + cubic)


def _predict_batch(bias, linear, factors, X: np.ndarray) -> np.ndarray:
    s1 = X @ factors
    s2 = X @ (factors ** 2)
    s3 = X @ (factors ** 3)
    quad = 0.5 * np.sum(s1 ** 2 - s2, axis=1)
    cubic = np.sum(s1 ** 3 - 3.0 * s1 * s2 + 2.0 * s3, axis=1) / 6.0
    return bias + X @ linear + quad + cubic


def prediction_gradients(fm: FactorizationMachine, x):
    """(d/d bias, d/d linear, d/d factors) of the prediction at x."""
    xf = as_bits(x, fm.n_vars).astype(np.float64)
    s1, s2, _ = _power_sums(fm, xf)
    v = fm.factors
    # per (i, f): x_i * (S1 - v + 0.5*(S1^2 - S2) - S1*v + v^2)
    inner = s1[None, :] - v + 0.5 * (s1 ** 2 - s2)[None, :] - s1[None, :] * v + v ** 2
    grad_v = xf[:, None] * inner
    return 1.0, xf.copy(), grad_v


def fm_to_hubo(fm: FactorizationMachine) -> tuple[HuboProblem, float]:
    """Closed-form extraction of interaction coefficients; bias returned apart."""
    n = fm.n_vars
    v = fm.factors
    lin_k = np.arange(n, dtype=np.int64)
    lin_v = fm.linear.copy()

    pi, pj = _pair_index_cols(n)
    pair_v = np.einsum("tf,tf->t", v[pi], v[pj]) if pi.size else np.zeros(0)
    pair_k = pi * n + pj

    ti, tj, tr = _triple_index_cols(n)
    tri_v = np.einsum("tf,tf,tf->t", v[ti], v[tj], v[tr]) if ti.size else np.zeros(0)
    tri_k = (ti * n + tj) * n + tr

    problem = HuboProblem._from_key_arrays(n, lin_k, lin_v, pair_k, pair_v, tri_k, tri_v)
    return problem, float(fm.bias)


# ---------------------------------------------------------------------------
# fitting


def fm_fit(
    X,
    y,
    rank: int,
    epochs: int = 300,
    learning_rate: float = 0.02,
    seed: int = 0,
    l2: float = 0.0,
    return_history: bool = False,
):
    """Least-squares fit by plain SGD with analytic gradients.

    Rows are shuffled into an 80/20 train/validation split; the parameters
    with the best validation RMSE seen across epochs are returned.
    Deterministic per seed. With return_history the per-epoch best validation
    RMSE record comes back as a second element.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size or X.shape[0] == 0:
        raise ValueError("need a non-empty (rows, n_vars) design matrix with targets")
    if not np.all((X == 0) | (X == 1)):
        raise ValueError("inputs must be bits")
    rows, n = X.shape
    rng = stream(seed, TAG_FM)

    perm = rng.permutation(rows)
    n_val = max(1, rows // 5) if rows > 1 else 0
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size == 0:
        train_idx = perm
    Xt, yt = X[train_idx], y[train_idx]
    Xv, yv = X[val_idx], y[val_idx]

    bias = 0.0
    linear = np.zeros(n)
    factors = 0.01 * rng.standard_normal((n, rank))

    def val_rmse():
        if yv.size == 0:
            pred = _predict_batch(bias, linear, factors, Xt)
            return float(np.sqrt(np.mean((pred - yt) ** 2)))
        pred = _predict_batch(bias, linear, factors, Xv)
        return float(np.sqrt(np.mean((pred - yv) ** 2)))

    best = (val_rmse(), bias, linear.copy(), factors.copy())
    history = []
    for _ in range(epochs):
        order = rng.permutation(Xt.shape[0])
        for idx in order:
            xf = Xt[idx]
            s1 = factors.T @ xf
            s2 = (factors ** 2).T @ xf
            s3 = (factors ** 3).T @ xf
            pred = (
                bias
                + linear @ xf
                + 0.5 * np.sum(s1 ** 2 - s2)
                + np.sum(s1 ** 3 - 3.0 * s1 * s2 + 2.0 * s3) / 6.0
            )
            err = pred - yt[idx]
            inner = (
                s1[None, :]
                - factors
                + 0.5 * (s1 ** 2 - s2)[None, :]
                - s1[None, :] * factors
                + factors ** 2
            )
            grad_v = xf[:, None] * inner
            bias -= learning_rate * err
            linear -= learning_rate * (err * xf + l2 * linear)
            factors -= learning_rate * (err * grad_v + l2 * factors)
        score = val_rmse()
        if score < best[0]:
            best = (score, bias, linear.copy(), factors.copy())
        history.append(best[0])

    _, bias, linear, factors = best
    model = FactorizationMachine(bias=bias, linear=linear, factors=factors)
    if return_history:
        return model, history
    return model


# ---------------------------------------------------------------------------
# dataset files: N bit columns then one target column


def save_dataset(X, y, path: str) -> None:
    X = np.asarray(X)
    y = np.asarray(y)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(X.shape[1])] + ["target"])
        for row, target in zip(X, y):
            writer.writerow([int(b) for b in row] + [repr(float(target))])


def load_dataset(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "target":
            raise ValueError("dataset must end with a 'target' column")
        n = len(header) - 1
        bits, targets = [], []
        for row in reader:
            if len(row) != n + 1:
                raise ValueError("dataset row width does not match the header")
            bits.append([int(v) for v in row[:n]])
            targets.append(float(row[n]))
    X = np.asarray(bits, dtype=np.float64)
    if X.size and not np.all((X == 0) | (X == 1)):
        raise ValueError("dataset inputs must be bits")
    return X, np.asarray(targets, dtype=np.float64)
