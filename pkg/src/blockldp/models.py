"""Closed-form and spectral SCGF models with gradients, Hessians and conjugates.

Each model packages the scaled-cumulant generating function Lambda, its first
two derivatives and the Legendre conjugate Lambda*, normalized so that
Lambda(0) = 0.  These serve as ground truth for the empirical estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit, rel_entr

from ._errors import NumericalError, UsageError
from .sources import MarkovSpec

_MAX_POWER_ITER = 100000


@dataclass(frozen=True)
class ScgfModel:
    """An SCGF with derivatives and conjugate.

    Fields
    ------
    lam : Lambda(lambda), finite on all of R^d for every bundled model.
    grad : gradient of Lambda (the exposed point map).
    hess : second derivative; scalar function for d=1, matrix for d>1.
    conj : Legendre conjugate Lambda*(x), +inf outside the closure of the
        attainable means.
    """

    name: str
    d: int
    lam: Callable
    grad: Callable
    hess: Callable
    conj: Callable
    domain: str = "all of R^d"


def _scalarized(fn):
    """Wrap a function of 1-d arrays so any input shape round-trips and
    scalar input yields a python float."""

    def wrapped(x):
        arr = np.asarray(x, dtype=np.float64)
        out = np.asarray(fn(arr.ravel()), dtype=np.float64)
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    return wrapped


def bernoulli_model(p: float) -> ScgfModel:
    """SCGF of iid Bernoulli(p) observations.

    Lambda(lambda) = log(1 - p + p e^lambda), Lambda'(lambda) is the logistic
    function shifted by logit(p), Lambda'' = q(1-q) at q = Lambda', and
    Lambda*(x) = x log(x/p) + (1-x) log((1-x)/(1-p)) on [0, 1], extended by
    continuity at the endpoints (-log(1-p) and -log p) and +inf outside.
    """
    if not 0.0 < p < 1.0:
        raise UsageError("p must lie strictly inside (0, 1), got %r" % (p,))
    logit_p = math.log(p / (1.0 - p))

    @_scalarized
    def lam(l):
        out = np.empty_like(l)
        neg = l <= 0
        # log1p keeps Lambda(0) = 0 exact and the negative tail accurate.
        out[neg] = np.log1p(p * np.expm1(l[neg]))
        pos = ~neg
        lp = l[pos]
        out[pos] = lp + math.log(p) + np.log1p((1.0 - p) * np.exp(-lp) / p)
        return out

    @_scalarized
    def grad(l):
        return expit(l + logit_p)

    @_scalarized
    def hess(l):
        q = expit(l + logit_p)
        return q * (1.0 - q)

    @_scalarized
    def conj(x):
        # rel_entr covers the endpoints (0 log 0 = 0) and returns +inf for
        # arguments outside [0, 1].
        return rel_entr(x, p) + rel_entr(1.0 - x, 1.0 - p)

    return ScgfModel(name="bernoulli:%r" % p, d=1, lam=lam, grad=grad,
                     hess=hess, conj=conj, domain="all of R")


def digit_indicator_model(m: int, a: int) -> ScgfModel:
    """SCGF of the indicator of symbol a in a uniform base-m digit stream.

    Analytically identical to bernoulli_model(1/m):
    Lambda(lambda) = log((m - 1 + e^lambda)/m).
    """
    if not (isinstance(m, (int, np.integer)) and m >= 2):
        raise UsageError("base m must be an integer >= 2, got %r" % (m,))
    if not 0 <= a < m:
        raise UsageError("symbol a must lie in {0, ..., m-1}, got %r" % (a,))
    b = bernoulli_model(1.0 / m)
    return ScgfModel(name="digit:%d:%d" % (m, a), d=1, lam=b.lam, grad=b.grad,
                     hess=b.hess, conj=b.conj, domain="all of R")


def gaussian_model(d: int) -> ScgfModel:
    """Self-dual SCGF of iid standard-normal vectors: Lambda = Lambda* = |.|^2/2."""
    if d < 1:
        raise UsageError("dimension must be >= 1")

    if d == 1:

        @_scalarized
        def quad(l):
            return 0.5 * l * l

        @_scalarized
        def grad(l):
            return l + 0.0

        @_scalarized
        def hess(l):
            return np.ones_like(l)

        return ScgfModel(name="gaussian:1", d=1, lam=quad, grad=grad,
                         hess=hess, conj=quad, domain="all of R")

    def quad_vec(l):
        arr = np.asarray(l, dtype=np.float64)
        return 0.5 * np.sum(arr * arr, axis=-1)

    def grad_vec(l):
        return np.asarray(l, dtype=np.float64) + 0.0

    def hess_vec(l):
        return np.eye(d)

    return ScgfModel(name="gaussian:%d" % d, d=d, lam=quad_vec, grad=grad_vec,
                     hess=hess_vec, conj=quad_vec, domain="all of R^d")


def _log_perron(M: np.ndarray) -> float:
    """log of the Perron root of an entrywise nonnegative primitive matrix,
    by power iteration to relative residual 1e-12."""
    v = np.ones(M.shape[0])
    for _ in range(_MAX_POWER_ITER):
        w = M @ v
        rho = float(np.max(w))
        if rho <= 0.0 or not np.isfinite(rho):
            raise NumericalError("power iteration left the positive cone")
        if float(np.max(np.abs(w - rho * v))) <= 1e-12 * rho:
            return math.log(rho)
        v = w / rho
    raise NumericalError("Perron power iteration did not converge in %d steps"
                         % _MAX_POWER_ITER)


def markov_model(spec: MarkovSpec) -> ScgfModel:
    """Spectral SCGF of a Markov chain with a scalar observable.

    Lambda(lambda) = log rho(P_lambda) with (P_lambda)_{xy} = P_{xy}
    e^{lambda phi(y)} and rho the Perron root (power iteration, relative
    residual 1e-12).  The exponent is shifted by max_y lambda phi(y) before
    exponentiation, which keeps the iteration overflow-free and makes the
    one-state chain reproduce lambda -> lambda*c exactly.  Derivatives use
    central differences with step 1e-5 * max(1, |lambda|); the conjugate is
    the numerical Legendre transform of Lambda sampled on [-20, 20] at step
    0.005 (a discrete sup, so values at tilts exposed outside that grid are
    lower bounds).
    """
    spec.validate()
    if spec.phi.ndim != 1:
        raise UsageError("markov_model requires a scalar observable")
    P = spec.P
    phi = spec.phi
    cache: dict = {}

    def lam_scalar(l: float) -> float:
        shift = float(np.max(l * phi))
        tilted = P * np.exp(l * phi - shift)[None, :]
        return shift + _log_perron(tilted)

    @_scalarized
    def lam(l):
        return np.array([lam_scalar(float(v)) for v in l])

    @_scalarized
    def grad(l):
        out = np.empty(l.shape)
        for idx, v in enumerate(l):
            h = 1e-5 * max(1.0, abs(float(v)))
            out[idx] = (lam_scalar(v + h) - lam_scalar(v - h)) / (2.0 * h)
        return out

    @_scalarized
    def hess(l):
        out = np.empty(l.shape)
        for idx, v in enumerate(l):
            h = 1e-5 * max(1.0, abs(float(v)))
            out[idx] = (lam_scalar(v + h) - 2.0 * lam_scalar(v) + lam_scalar(v - h)) / (h * h)
        return out

    @_scalarized
    def conj(x):
        from .blockstats import SampledFunction
        from .convex import legendre

        if "sampled" not in cache:
            grid = -20.0 + 0.005 * np.arange(8001)
            cache["sampled"] = SampledFunction(
                grid=grid, values=lam(grid), meta={"model": "markov"})
        return legendre(cache["sampled"], x).values

    return ScgfModel(name="markov:%d-state" % spec.s, d=1, lam=lam, grad=grad,
                     hess=hess, conj=conj, domain="all of R")


def exact_prefix_scgf(spec: MarkovSpec, lam: float, n: int) -> float:
    """Finite-n SCGF (1/n) log E exp(lam * S_n) by exact forward recursion.

    S_n sums the scalar observable over n transitions from the initial
    distribution.  The row vector v starts at pi and is multiplied by
    P_lambda n times with per-step renormalization, so the result is exact
    up to float rounding for n <= 24.
    """
    spec.validate()
    if spec.phi.ndim != 1:
        raise UsageError("exact_prefix_scgf requires a scalar observable")
    if not 1 <= n <= 24:
        raise UsageError("n must lie in [1, 24], got %r" % (n,))
    tilted = spec.P * np.exp(lam * spec.phi)[None, :]
    v = spec.stationary().astype(np.float64).copy()
    total = 0.0
    for _ in range(n):
        v = v @ tilted
        s = float(v.sum())
        total += math.log(s)
        v /= s
    return total / n
