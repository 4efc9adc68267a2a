"""Scikit-learn style estimators over raw coordinate arrays.

These wrap the library's dimension estimators behind the familiar
``fit(X)`` / ``get_params`` surface so they compose with pipelines and model
selection.  Fitted attributes follow the trailing-underscore convention:
``dimension_``, ``series_``, ``diagnostics_``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from . import dimension as dim
from .dyadic import DyadicParams, build_system
from .spaces import FiniteMetricSpace, whole_space


def _geometric_grid(start: float, ratio: float, count: int) -> list[float]:
    return [start * ratio ** i for i in range(count)]


def _auto_scales(space: FiniteMetricSpace, count: int, ratio: float) -> list[float]:
    from .spaces import diameter, whole_space as ws
    dia = diameter(ws(space))
    if dia <= 0:
        raise ValueError("cannot pick scales for a zero-diameter point set")
    return _geometric_grid(dia / 4.0, ratio, count)


class BoxCountingDimension(BaseEstimator):
    """Box-counting dimension of a point cloud.

    Parameters
    ----------
    scales : list of float, optional
        Strictly decreasing geometric scale grid; derived from the data
        diameter when omitted.
    n_scales : int
    ratio : float
        Grid ratio used when ``scales`` is omitted.
    metric : {"euclidean", "chebyshev"}
    """

    def __init__(self, scales=None, n_scales=6, ratio=0.5, metric="euclidean"):
        self.scales = scales
        self.n_scales = n_scales
        self.ratio = ratio
        self.metric = metric

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=False)
        space = FiniteMetricSpace(points=X, metric=self.metric)
        scales = self.scales or _auto_scales(space, self.n_scales, self.ratio)
        est = dim.box_dimension(whole_space(space), list(scales))
        self.dimension_ = est.value
        self.series_ = est.series
        self.diagnostics_ = est.diagnostics
        self.estimate_ = est
        return self

    def _check_fitted(self):
        if not hasattr(self, "dimension_"):
            raise NotFittedError("call fit(X) first")

    def predict(self, X=None):
        self._check_fitted()
        return self.dimension_


class _WindowedDimension(BaseEstimator):
    def __init__(self, deltas=None, n_deltas=4, delta_start=0.125, ratio=0.5,
                 metric="euclidean", max_level=None, perfectness=None,
                 bisection_tol=1e-3):
        self.deltas = deltas
        self.n_deltas = n_deltas
        self.delta_start = delta_start
        self.ratio = ratio
        self.metric = metric
        self.max_level = max_level
        self.perfectness = perfectness
        self.bisection_tol = bisection_tol

    def _prepare(self, X):
        X = check_array(X, ensure_2d=False)
        space = FiniteMetricSpace(points=X, metric=self.metric)
        deltas = list(self.deltas) if self.deltas else _geometric_grid(
            self.delta_start, self.ratio, self.n_deltas)
        subset = whole_space(space)
        return space, subset, deltas

    def _store(self, est):
        self.dimension_ = est.value
        self.series_ = est.series
        self.diagnostics_ = est.diagnostics
        self.estimate_ = est
        return self

    def predict(self, X=None):
        if not hasattr(self, "dimension_"):
            raise NotFittedError("call fit(X) first")
        return self.dimension_


class IntermediateDimension(_WindowedDimension):
    """Windowed-cover dimension estimate at an interpolation parameter theta
    (theta = 1 is box-like, small theta approaches the Hausdorff regime)."""

    def __init__(self, theta=0.5, deltas=None, n_deltas=4, delta_start=0.125,
                 ratio=0.5, metric="euclidean", max_level=None,
                 perfectness=None, bisection_tol=1e-3):
        super().__init__(deltas, n_deltas, delta_start, ratio, metric,
                         max_level, perfectness, bisection_tol)
        self.theta = theta

    def fit(self, X, y=None):
        space, subset, deltas = self._prepare(X)
        depth = self.max_level
        if depth is None:
            p = DyadicParams(ratio=self.ratio, max_level=0)
            c_u = self.perfectness or dim.DEFAULT_PERFECTNESS
            consts = dim.WindowConstants(c_u, p.sep, p.cov, p.ratio)
            depth = 0
            for d in deltas:
                w = dim.pick_window(self.theta, d, consts)
                if not w.empty:
                    depth = max(depth, w.level_max)
            depth = min(depth, 40)
        system = build_system(space, DyadicParams(ratio=self.ratio,
                                                  max_level=depth))
        est = dim.intermediate_dimension(system, subset, self.theta, deltas,
                                         perfectness=self.perfectness,
                                         bisection_tol=self.bisection_tol)
        return self._store(est)


class HausdorffDimension(_WindowedDimension):
    """Effective Hausdorff exponent over the usable scale window."""

    def fit(self, X, y=None):
        space, subset, deltas = self._prepare(X)
        depth = self.max_level
        if depth is None:
            import math
            depth = min(40, max(4, math.ceil(
                math.log(max(min(deltas) / 16.0, 1e-12))
                / math.log(self.ratio))))
        system = build_system(space, DyadicParams(ratio=self.ratio,
                                                  max_level=depth))
        est = dim.hausdorff_dimension(system, subset, deltas,
                                      perfectness=self.perfectness,
                                      bisection_tol=self.bisection_tol)
        return self._store(est)
