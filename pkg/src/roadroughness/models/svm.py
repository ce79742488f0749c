"""Support vector regression and classification with an RBF kernel.

Both tasks are solved in the standard box-constrained dual

    min  1/2 lam' Q lam + p' lam   s.t.  z' lam = 0,  0 <= lam <= C

by pairwise coordinate optimization over maximal violating pairs, stopping
when the KKT gap m - M drops below tolerance. For regression the
epsilon-insensitive dual is mapped onto the same form by stacking the two
coefficient blocks; classification is one-vs-rest with argmax over the
decision values.
"""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceError
from .tree import N_CLASSES

KKT_TOL = 1e-3
MAX_ITER = 500_000
_EPS = 1e-12


def rbf_kernel(a, b, gamma: float) -> np.ndarray:
    """exp(-gamma * ||x - x'||^2) for all row pairs."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    d2 = (np.sum(a ** 2, axis=1)[:, None] + np.sum(b ** 2, axis=1)[None, :]
          - 2.0 * a @ b.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


def smo_solve(q_row, diag: np.ndarray, p: np.ndarray, z: np.ndarray,
              c: float, tol: float = KKT_TOL, max_iter: int = MAX_ITER):
    """Generic SMO loop; ``q_row(i)`` returns row i of Q on demand.

    Returns (lam, grad, bias, kkt_gap, n_iter).
    """
    n = len(p)
    lam = np.zeros(n)
    g = p.copy()
    pos = z > 0
    for it in range(max_iter):
        up = (pos & (lam < c - _EPS)) | (~pos & (lam > _EPS))
        low = (pos & (lam > _EPS)) | (~pos & (lam < c - _EPS))
        vals = -z * g
        up_vals = np.where(up, vals, -np.inf)
        low_vals = np.where(low, vals, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m_up = up_vals[i]
        m_low = low_vals[j]
        gap = m_up - m_low
        if gap <= tol:
            bias = float((m_up + m_low) / 2.0)
            return lam, g, bias, float(gap), it
        qi = q_row(i)
        qj = q_row(j)
        a = diag[i] + diag[j] - 2.0 * z[i] * z[j] * qi[j]
        a = max(a, _EPS)
        d = gap / a
        d = min(d, c - lam[i] if z[i] > 0 else lam[i])
        d = min(d, lam[j] if z[j] > 0 else c - lam[j])
        dli = z[i] * d
        dlj = -z[j] * d
        lam[i] += dli
        lam[j] += dlj
        g += dli * qi + dlj * qj
    raise ConvergenceError(
        f"SMO did not converge in {max_iter} iterations "
        f"(max KKT violation {gap:.3e})")


def _solve_svr(k: np.ndarray, y: np.ndarray, c: float, epsilon: float,
               tol: float, max_iter: int):
    """Epsilon-insensitive dual via the stacked 2N formulation."""
    n = len(y)
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    diag = np.concatenate([np.diag(k), np.diag(k)])

    def q_row(i):
        base = k[i % n]
        row = np.concatenate([base, base])
        return z[i] * z * row

    lam, g, bias, gap, _ = smo_solve(q_row, diag, p, z, c, tol, max_iter)
    beta = lam[:n] - lam[n:]
    objective = 0.5 * float(lam @ g + lam @ p)
    return beta, bias, objective, gap


def _solve_binary_svc(k: np.ndarray, z: np.ndarray, c: float, tol: float,
                      max_iter: int):
    diag = np.diag(k).copy()

    def q_row(i):
        return z[i] * z * k[i]

    lam, g, bias, gap, _ = smo_solve(q_row, diag, -np.ones(len(z)), z, c,
                                     tol, max_iter)
    objective = 0.5 * float(lam @ g) - 0.5 * float(lam.sum())
    return lam * z, bias, objective, gap


class SvmModel:
    """RBF-kernel SVM; ``task`` selects epsilon-SVR or one-vs-rest SVC."""

    def __init__(self, task: str = "svr", c: float = 1.0, gamma: float = 0.01,
                 epsilon: float = 0.1, tol: float = KKT_TOL,
                 max_iter: int = MAX_ITER, n_classes: int = N_CLASSES):
        if task not in ("svr", "svc"):
            raise ValueError(f"unknown task: {task}")
        if c <= 0 or gamma <= 0:
            raise ValueError("C and gamma must be positive")
        if epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        self.task = "regression" if task == "svr" else "classification"
        self.kind = task
        self.c = c
        self.gamma = gamma
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter
        self.n_classes = n_classes
        self.sv_x: np.ndarray | None = None
        self.sv_coef: np.ndarray | None = None   # (n_sv,) or (n_sv, n_classes)
        self.bias: np.ndarray | None = None
        self.dual_objective: float | list | None = None

    def fit(self, x, y) -> "SvmModel":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        k = rbf_kernel(x, x, self.gamma)
        if self.kind == "svr":
            beta, bias, obj, _ = _solve_svr(k, y, self.c, self.epsilon,
                                            self.tol, self.max_iter)
            keep = np.abs(beta) > _EPS
            self.sv_x = x[keep]
            self.sv_coef = beta[keep]
            self.bias = np.array([bias])
            self.dual_objective = obj
        else:
            labels = y.astype(int)
            coefs = np.zeros((len(x), self.n_classes))
            biases = np.zeros(self.n_classes)
            objs = []
            for cls in range(self.n_classes):
                z = np.where(labels == cls, 1.0, -1.0)
                if np.all(z < 0) or np.all(z > 0):
                    biases[cls] = -np.inf if np.all(z < 0) else np.inf
                    objs.append(0.0)
                    continue
                coef, bias, obj, _ = _solve_binary_svc(k, z, self.c, self.tol,
                                                       self.max_iter)
                coefs[:, cls] = coef
                biases[cls] = bias
                objs.append(obj)
            keep = np.any(np.abs(coefs) > _EPS, axis=1)
            self.sv_x = x[keep]
            self.sv_coef = coefs[keep]
            self.bias = biases
            self.dual_objective = objs
        return self

    def decision_values(self, x) -> np.ndarray:
        if self.sv_x is None:
            raise ValueError("model is not fitted")
        k = rbf_kernel(np.asarray(x, dtype=float), self.sv_x, self.gamma)
        return k @ self.sv_coef + self.bias

    def predict(self, x) -> np.ndarray:
        vals = self.decision_values(x)
        if self.kind == "svr":
            return vals[:, 0] if vals.ndim == 2 else vals
        return np.argmax(vals, axis=1).astype(float)

    def state_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c, "gamma": self.gamma,
                "epsilon": self.epsilon, "n_classes": self.n_classes,
                "sv_x": self.sv_x.tolist(), "sv_coef": self.sv_coef.tolist(),
                "bias": self.bias.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "SvmModel":
        model = cls(state["kind"], state["c"], state["gamma"],
                    state["epsilon"], n_classes=state["n_classes"])
        model.sv_x = np.array(state["sv_x"], dtype=float)
        model.sv_coef = np.array(state["sv_coef"], dtype=float)
        model.bias = np.array(state["bias"], dtype=float)
        return model
