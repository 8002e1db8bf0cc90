"""Finite-sum smooth losses with per-component values and gradients.

The smooth term is an average H(x) = (1/n) sum_i H_i(x); stochastic
estimators need per-component gradients, so every component exposes its
own value/gradient pair and the container offers vectorized block
evaluation. Two component families are provided: the sigmoid
classification loss 1 / (1 + exp(b <a, x>)) and the squared residual
(<r, x> - b)^2.

Reduction-order contract: row dot products go through one kernel whose
per-row reduction depends only on the row length, and full sums
accumulate over the component axis with a fixed deterministic order, so a
single-component evaluation is bit-identical to the matching row of a
block evaluation and ``full_gradient`` equals the mean of component
gradients exactly.
"""

import numpy as np

from .exceptions import ShapeError

__all__ = [
    "SigmoidComponent",
    "LeastSquaresComponent",
    "FiniteSumLoss",
    "LipschitzBound",
    "SIGMOID_CURVATURE",
]

# Largest absolute second derivative of s -> 1/(1 + e^s); attained where the
# logistic value equals (1 +- 1/sqrt(3)) / 2.
SIGMOID_CURVATURE = 1.0 / (6.0 * np.sqrt(3.0))


def _row_dots(rows, x):
    # einsum reduces each row independently with splits that depend only on
    # the row length, which keeps single-row and block evaluations
    # bit-identical (guarded by test_row_dot_primitive_is_row_consistent).
    return np.einsum("ij,j->i", rows, x)


def _logistic(s):
    """Overflow-safe 1 / (1 + exp(-s)), elementwise."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out


class SigmoidComponent:
    """Sigmoid loss 1 / (1 + exp(b <a, x>)) for one labeled sample."""

    kind = "sigmoid"

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        if self.a.ndim != 1:
            raise ShapeError("feature vector must be 1-D")
        b = float(b)
        if b not in (-1.0, 1.0):
            raise ShapeError(f"sigmoid label must be -1 or +1, got {b}")
        self.b = b

    @property
    def dim(self):
        return self.a.shape[0]

    def value(self, x):
        s = self.b * float(_row_dots(self.a[None, :], np.asarray(x, dtype=float))[0])
        return float(_logistic(np.array([-s]))[0])

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        s = self.b * _row_dots(self.a[None, :], x)
        coef = -self.b * _logistic(s) * _logistic(-s)
        return (coef[:, None] * self.a[None, :])[0]


class LeastSquaresComponent:
    """Squared residual (<r, x> - b)^2 for one measurement row."""

    kind = "least_squares"

    def __init__(self, r, b):
        self.r = np.asarray(r, dtype=float)
        if self.r.ndim != 1:
            raise ShapeError("measurement row must be 1-D")
        self.b = float(b)

    @property
    def dim(self):
        return self.r.shape[0]

    def value(self, x):
        s = float(_row_dots(self.r[None, :], np.asarray(x, dtype=float))[0])
        return (s - self.b) ** 2

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        s = _row_dots(self.r[None, :], x)
        coef = 2.0 * (s - self.b)
        return (coef[:, None] * self.r[None, :])[0]


class LipschitzBound:
    """A certified Lipschitz constant for every component gradient."""

    def __init__(self, L):
        self.L = float(L)

    def __repr__(self):
        return f"LipschitzBound(L={self.L!r})"


class FiniteSumLoss:
    """Average of n smooth components sharing one input dimension.

    When all components are of the same kind the per-component data is
    packed into matrices and block evaluations are vectorized; mixed
    collections fall back to a per-component loop with identical results.
    Instances are immutable and all evaluations are pure.
    """

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ShapeError("a finite-sum loss needs at least one component")
        dim = components[0].dim
        for c in components:
            if c.dim != dim:
                raise ShapeError(f"all components must share dim {dim}, got {c.dim}")
        self.components = components
        self.n = len(components)
        self.dim = dim
        kinds = {c.kind for c in components}
        self._kind = kinds.pop() if len(kinds) == 1 else None
        if self._kind == "sigmoid":
            self._rows = np.vstack([c.a for c in components])
            self._targets = np.array([c.b for c in components])
        elif self._kind == "least_squares":
            self._rows = np.vstack([c.r for c in components])
            self._targets = np.array([c.b for c in components])
        else:
            self._rows = None
            self._targets = None

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.dim:
            raise ShapeError(f"x must be a vector of length {self.dim}, got shape {x.shape}")
        return x

    def _check_idx(self, idx):
        if idx is None:
            return None  # means "all rows", avoiding a fancy-index copy
        idx = np.asarray(idx, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError(f"component index out of range [0, {self.n})")
        return idx

    def _selected(self, idx):
        if idx is None:
            return self._rows, self._targets
        return self._rows[idx], self._targets[idx]

    def component_values(self, x, idx=None):
        """Values of the selected components at x, in the order of idx."""
        x = self._check_x(x)
        idx = self._check_idx(idx)
        if self._kind == "sigmoid":
            rows, targets = self._selected(idx)
            s = targets * _row_dots(rows, x)
            return _logistic(-s)
        if self._kind == "least_squares":
            rows, targets = self._selected(idx)
            s = _row_dots(rows, x)
            return (s - targets) ** 2
        members = self.components if idx is None else [self.components[i] for i in idx]
        return np.array([c.value(x) for c in members])

    def component_gradients(self, x, idx=None):
        """Gradients of the selected components at x, stacked row-wise."""
        x = self._check_x(x)
        idx = self._check_idx(idx)
        if self._kind == "sigmoid":
            rows, targets = self._selected(idx)
            s = targets * _row_dots(rows, x)
            coef = -targets * _logistic(s) * _logistic(-s)
            return coef[:, None] * rows
        if self._kind == "least_squares":
            rows, targets = self._selected(idx)
            s = _row_dots(rows, x)
            coef = 2.0 * (s - targets)
            return coef[:, None] * rows
        members = self.components if idx is None else [self.components[i] for i in idx]
        return np.stack([c.gradient(x) for c in members])

    def component_value(self, i, x):
        return float(self.component_values(x, np.array([i]))[0])

    def component_gradient(self, i, x):
        return self.component_gradients(x, np.array([i]))[0]

    def full_value(self, x):
        """(1/n) sum of component values, accumulated in ascending order."""
        return float(np.add.reduce(self.component_values(x)) / self.n)

    def full_gradient(self, x):
        """(1/n) sum of component gradients, accumulated in ascending order."""
        return np.add.reduce(self.component_gradients(x), axis=0) / self.n

    def lipschitz_bound(self):
        """Certified gradient Lipschitz constant.

        Sigmoid components contribute SIGMOID_CURVATURE * ||a||^2 and
        squared residuals 2 * ||r||^2; the bound is the maximum
        contribution.
        """
        best = 0.0
        for c in self.components:
            if c.kind == "sigmoid":
                best = max(best, SIGMOID_CURVATURE * float(c.a @ c.a))
            elif c.kind == "least_squares":
                best = max(best, 2.0 * float(c.r @ c.r))
            else:
                raise ShapeError(f"unknown component kind {c.kind!r}")
        return LipschitzBound(best)
