"""Shrinkage estimators that post-process the least-squares solution.

All estimators are written as functions of the least-squares estimate
``xls`` (the Tikhonov variants also exist in measurement form), so a Monte
Carlo trial solves for ``xls`` once and fans out. Every function accepts
either a single vector of length ``m`` or a ``(..., m)`` batch and is pure.

The family:

* ``sbme``       -- scalar gain ``||xls||^2 / (||xls||^2 + eps0)``;
* ``shrink_c``   -- scalar gain ``1 - eps0 / (c + ||xls||^2)``, the common
  generalization (``c = eps0`` gives ``sbme``, ``c = 0`` the balanced rule);
* ``off_center_sbme`` -- convex combination of ``xls`` and a fixed point;
* ``ebme``       -- per-spectral-component gains ``(1 - alpha * sig**(b/2))_+``
  in the eigenbasis of ``Q``, shrinking noisy components harder;
* ``balanced_bme`` / ``positive_part_bme`` -- gain ``1 - eps0 / ||xls||^2``
  and its clamp at zero;
* ``bock``       -- scalar gain ``1 - (eps0/eps_max - 2) / ||xls||^2_Q``;
* ``tikhonov1`` / ``tikhonov2`` -- empirically regularized least squares.

``sbme_dominance_holds`` / ``ebme_dominance_holds`` evaluate the sufficient
conditions under which the corresponding estimators beat least squares for
every parameter value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from blindmm.linalg import DimensionMismatchError, LinalgError, as_vector, read_vector_csv
from blindmm.model import Model, ls_estimate


class UnknownEstimatorError(LinalgError):
    """Estimator tag not recognized by the text syntax."""


@dataclass
class EstimateResult:
    """Estimate plus the gain profile that produced it.

    ``shrinkage`` holds the per-spectral-component gain applied in the
    eigenbasis of ``Q`` (all ones for least squares, a constant vector for
    scalar-gain estimators). ``degenerate`` marks the measure-zero
    ``xls = 0`` inputs on which the balanced/Bock/Tikhonov rules are
    undefined and a zero vector is returned by convention.
    """

    xhat: np.ndarray
    shrinkage: np.ndarray
    degenerate: bool = False


def _check_ls(model: Model, xls) -> np.ndarray:
    xls = np.asarray(xls, dtype=np.float64)
    if xls.shape[-1] != model.m:
        raise DimensionMismatchError(
            f"xls: trailing dimension {xls.shape[-1]} does not match m={model.m}"
        )
    if not np.all(np.isfinite(xls)):
        raise DimensionMismatchError("xls: entries must be finite")
    return xls


def _scalar_result(model: Model, xls, gain, degenerate_mask) -> EstimateResult:
    gain = np.asarray(gain, dtype=np.float64)
    xhat = gain[..., None] * xls
    shrinkage = np.broadcast_to(gain[..., None], xls.shape).copy()
    return EstimateResult(
        xhat=xhat, shrinkage=shrinkage, degenerate=bool(np.any(degenerate_mask))
    )


def sbme(model: Model, xls) -> EstimateResult:
    """Spherical rule: shrink toward the origin by
    ``||xls||^2 / (||xls||^2 + eps0)``; gain in [0, 1), zero only at zero."""
    xls = _check_ls(model, xls)
    n2 = np.sum(xls * xls, axis=-1)
    gain = n2 / (n2 + model.eps0)
    return _scalar_result(model, xls, gain, False)


def shrink_c(model: Model, xls, c: float) -> EstimateResult:
    """Scalar gain ``1 - eps0 / (c + ||xls||^2)`` for ``c >= 0``.

    ``c = eps0`` reproduces ``sbme`` exactly; ``c = 0`` reproduces
    ``balanced_bme``. The ``c = 0``, ``xls = 0`` corner is undefined and
    returns zero with the degenerate flag set.
    """
    if c < 0:
        raise ValueError(f"shrink_c: c must be >= 0, got {c}")
    xls = _check_ls(model, xls)
    n2 = np.sum(xls * xls, axis=-1)
    denom = c + n2
    degenerate = denom == 0.0
    # Ratio form of 1 - eps0/(c + n2): keeps relative accuracy when the
    # gain is tiny, and reduces bitwise to the spherical/balanced rules at
    # c = eps0 and c = 0.
    gain = np.where(
        degenerate, 0.0, ((c - model.eps0) + n2) / np.where(degenerate, 1.0, denom)
    )
    return _scalar_result(model, xls, gain, degenerate)


def off_center_sbme(model: Model, xls, x0) -> EstimateResult:
    """Spherical rule centered on ``x0`` instead of the origin: returns
    ``g * xls + (1 - g) * x0`` with the ``sbme`` gain ``g``."""
    xls = _check_ls(model, xls)
    x0 = as_vector(x0, "x0")
    if x0.shape[0] != model.m:
        raise DimensionMismatchError(f"x0: dim {x0.shape[0]} does not match m={model.m}")
    n2 = np.sum(xls * xls, axis=-1)
    gain = n2 / (n2 + model.eps0)
    xhat = gain[..., None] * xls + (1.0 - gain)[..., None] * x0
    shrinkage = np.broadcast_to(gain[..., None], xls.shape).copy()
    return EstimateResult(xhat=xhat, shrinkage=shrinkage, degenerate=False)


def balanced_bme(model: Model, xls) -> EstimateResult:
    """Gain ``1 - eps0 / ||xls||^2``; may be negative (sign flip) by design.

    Undefined at ``xls = 0`` (a probability-zero event): returns the zero
    vector with ``degenerate=True``.
    """
    xls = _check_ls(model, xls)
    n2 = np.sum(xls * xls, axis=-1)
    degenerate = n2 == 0.0
    gain = np.where(
        degenerate, 0.0, (n2 - model.eps0) / np.where(degenerate, 1.0, n2)
    )
    return _scalar_result(model, xls, gain, degenerate)


def positive_part_bme(model: Model, xls) -> EstimateResult:
    """Balanced rule with negative gain clamped: ``(1 - eps0/||xls||^2)_+``.

    Returns exactly zero whenever ``||xls||^2 <= eps0`` (including at
    ``xls = 0``, where no flag is needed)."""
    xls = _check_ls(model, xls)
    n2 = np.sum(xls * xls, axis=-1)
    zero = n2 == 0.0
    gain = np.maximum((n2 - model.eps0) / np.where(zero, 1.0, n2), 0.0)
    gain = np.where(zero, 0.0, gain)
    return _scalar_result(model, xls, gain, False)


def bock(model: Model, xls) -> EstimateResult:
    """Extended scalar-shrinkage rule for colored noise:
    gain ``1 - (eps0/eps_max - 2) / ||xls||^2_Q``; may be negative."""
    xls = _check_ls(model, xls)
    qn = _q_norm2(model, xls)
    degenerate = qn == 0.0
    correction = model.eps0 / model.eps_max - 2.0
    gain = np.where(
        degenerate, 0.0, (qn - correction) / np.where(degenerate, 1.0, qn)
    )
    return _scalar_result(model, xls, gain, degenerate)


def _q_norm2(model: Model, xls) -> np.ndarray:
    v = xls @ model.Qeig.basis
    return (v * v) @ model.Qeig.eigenvalues


def _spectral_result(model: Model, xls, gains, degenerate_mask) -> EstimateResult:
    """Apply per-component gains in the eigenbasis of Q."""
    v = xls @ model.Qeig.basis
    xhat = (gains * v) @ model.Qeig.basis.T
    return EstimateResult(xhat=xhat, shrinkage=gains, degenerate=bool(np.any(degenerate_mask)))


def ebme(model: Model, xls, b: float = -1.0, positive_part: bool = True) -> EstimateResult:
    """Adaptive spectral shrinkage from an ellipsoidal set fit to the data.

    With eigenvalues of ``Q`` ordered so ``sig**b`` is non-increasing, the
    gain of component ``i`` is ``(1 - alpha * sig_i**(b/2))_+`` where
    ``alpha = r1 / (||xls||^2_{Q^b} + r2)``, ``r1`` and ``r2`` sum
    ``sig**(b/2-1)`` and ``sig**(b-1)`` over components after the cutoff
    ``k``, and ``k`` is the smallest index with ``alpha * sig_{k+1}**(b/2)
    < 1``. Exactly the ``k`` leading components (in ``sig**b`` order) are
    clamped to zero. ``b = 0`` collapses to the scalar ``sbme`` gain;
    ``xls = 0`` returns zero.

    ``positive_part=False`` skips the clamp, exposing the raw
    ``(I - alpha Q^{b/2}) xls`` rule the clamp provably improves on.
    """
    xls = _check_ls(model, xls)
    sig = model.Qeig.eigenvalues
    m = model.m
    order = np.argsort(-(sig**b), kind="stable")
    inv_order = np.argsort(order, kind="stable")
    sig_o = sig[order]
    sb = sig_o**b
    sb2 = sig_o ** (b / 2.0)
    r1_suffix = np.cumsum((sig_o ** (b / 2.0 - 1.0))[::-1])[::-1]
    r2_suffix = np.cumsum((sig_o ** (b - 1.0))[::-1])[::-1]

    v = xls @ model.Qeig.basis
    vo = v[..., order]
    l2 = (vo * vo) @ sb
    zero = l2 <= 0.0
    l2_safe = np.where(zero, 1.0, l2)

    alphas = r1_suffix / (l2_safe[..., None] + r2_suffix)
    ok = alphas * sb2 < 1.0
    ok[..., m - 1] = True  # always satisfiable at the last index
    k = np.argmax(ok, axis=-1)
    r1k = np.take_along_axis(np.broadcast_to(r1_suffix, ok.shape), k[..., None], axis=-1)
    r2k = np.take_along_axis(np.broadcast_to(r2_suffix, ok.shape), k[..., None], axis=-1)

    # Ratio form of 1 - alpha * sig**(b/2): the correction enters the
    # numerator before the division, so near-total shrinkage keeps full
    # relative accuracy (at b = 0 the correction vanishes identically).
    denom = l2_safe[..., None] + r2k
    gains_o = (l2_safe[..., None] + (r2k - r1k * sb2)) / denom
    if positive_part:
        gains_o = np.maximum(gains_o, 0.0)
        # Components before the cutoff have non-positive gains by
        # construction; zero them by index to keep the count exact.
        gains_o = np.where(np.arange(m) < k[..., None], 0.0, gains_o)
    gains_o = np.where(zero[..., None], 0.0, gains_o)
    gains = gains_o[..., inv_order]
    xhat = (gains * v) @ model.Qeig.basis.T
    xhat = np.where(zero[..., None], 0.0, xhat)
    return EstimateResult(xhat=xhat, shrinkage=gains, degenerate=False)


def _tikhonov1_from_ls(model: Model, xls) -> EstimateResult:
    """Spectral form of ``(Q + (m/||xls||^2) I)^-1 H' Cw^-1 y``: since
    ``H' Cw^-1 y = Q xls``, the gain of component ``i`` is
    ``sig_i / (sig_i + m/||xls||^2)``."""
    xls = _check_ls(model, xls)
    n2 = np.sum(xls * xls, axis=-1)
    degenerate = n2 == 0.0
    lam = model.m / np.where(degenerate, 1.0, n2)
    sig = model.Qeig.eigenvalues
    gains = sig / (sig + lam[..., None])
    gains = np.where(degenerate[..., None], 0.0, gains)
    return _spectral_result(model, xls, gains, degenerate)


def _tikhonov2_from_ls(model: Model, xls) -> EstimateResult:
    xls = _check_ls(model, xls)
    qn = _q_norm2(model, xls)
    degenerate = qn == 0.0
    gain = np.where(degenerate, 0.0, qn / (model.m + qn))
    return _scalar_result(model, xls, gain, degenerate)


def tikhonov1(model: Model, y) -> EstimateResult:
    """Regularized least squares with ridge weight ``m / ||xls||^2``
    estimated from the data. Not guaranteed to beat least squares."""
    return _tikhonov1_from_ls(model, ls_estimate(model, y))


def tikhonov2(model: Model, y) -> EstimateResult:
    """Shrinkage variant of the empirical ridge: scalar gain
    ``||xls||^2_Q / (m + ||xls||^2_Q)``."""
    return _tikhonov2_from_ls(model, ls_estimate(model, y))


def sbme_dominance_holds(model: Model) -> bool:
    """Sufficient condition for the scalar-gain family (``sbme``,
    ``shrink_c``, ``balanced_bme``) to beat least squares everywhere:
    effective dimension strictly above 4."""
    return model.eps0 / model.eps_max > 4.0


def ebme_dominance_holds(model: Model, b: float) -> bool:
    """Sufficient condition for ``ebme`` with exponent ``b``:
    ``tr(Q**(b/2-1)) > 4 * lambda_max(Q**(b/2-1))``. At ``b = 0`` this is
    exactly the scalar condition."""
    powers = model.Qeig.eigenvalues ** (b / 2.0 - 1.0)
    return float(np.sum(powers)) > 4.0 * float(np.max(powers))


# --- estimator tags -------------------------------------------------------
#
# Text syntax used by the CLI and experiment configs:
#   ls | sbme | bbm | pbm | bock | tik1 | tik2
#   ebme:b=<float>   shrinkc:c=<float>   offcenter:file=<vector csv>

_BARE_KINDS = ("ls", "sbme", "bbm", "pbm", "bock", "tik1", "tik2")


@dataclass(frozen=True)
class EstimatorSpec:
    """Tagged choice of estimator plus its parameters."""

    kind: str
    b: float | None = None
    c: float | None = None
    x0: np.ndarray | None = None
    x0_name: str | None = None

    def __post_init__(self):
        if self.kind in _BARE_KINDS:
            return
        if self.kind == "ebme":
            if self.b is None or not np.isfinite(self.b):
                raise UnknownEstimatorError("ebme requires a finite exponent b")
        elif self.kind == "shrinkc":
            if self.c is None or not (self.c >= 0.0):
                raise UnknownEstimatorError("shrinkc requires c >= 0")
        elif self.kind == "offcenter":
            if self.x0 is None:
                raise UnknownEstimatorError("offcenter requires a center vector x0")
        else:
            raise UnknownEstimatorError(f"unknown estimator tag {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "ebme":
            return f"ebme:b={self.b:g}"
        if self.kind == "shrinkc":
            return f"shrinkc:c={self.c:g}"
        if self.kind == "offcenter":
            return f"offcenter:file={self.x0_name}" if self.x0_name else "offcenter"
        return self.kind


def parse_estimator_spec(text: str, vector_loader=read_vector_csv) -> EstimatorSpec:
    """Parse the estimator text syntax; unknown tags are errors.

    ``vector_loader`` resolves the ``offcenter:file=...`` argument (callers
    may bind it to a config-relative loader).
    """
    text = text.strip()
    kind, _, arg = text.partition(":")
    kind = kind.strip()
    if kind in _BARE_KINDS:
        if arg:
            raise UnknownEstimatorError(f"estimator {kind!r} takes no parameters: {text!r}")
        return EstimatorSpec(kind=kind)
    if kind == "ebme":
        key, _, val = arg.partition("=")
        if key.strip() != "b":
            raise UnknownEstimatorError(f"expected ebme:b=<float>, got {text!r}")
        try:
            b = float(val)
        except ValueError as exc:
            raise UnknownEstimatorError(f"bad ebme exponent in {text!r}") from exc
        return EstimatorSpec(kind="ebme", b=b)
    if kind == "shrinkc":
        key, _, val = arg.partition("=")
        if key.strip() != "c":
            raise UnknownEstimatorError(f"expected shrinkc:c=<float>, got {text!r}")
        try:
            c = float(val)
        except ValueError as exc:
            raise UnknownEstimatorError(f"bad shrinkc constant in {text!r}") from exc
        return EstimatorSpec(kind="shrinkc", c=c)
    if kind == "offcenter":
        key, _, val = arg.partition("=")
        if key.strip() != "file" or not val:
            raise UnknownEstimatorError(f"expected offcenter:file=<csv>, got {text!r}")
        x0 = vector_loader(val)
        return EstimatorSpec(kind="offcenter", x0=np.asarray(x0, dtype=np.float64), x0_name=val)
    raise UnknownEstimatorError(f"unknown estimator tag {kind!r}")


def estimate_from_ls(model: Model, spec: EstimatorSpec, xls) -> EstimateResult:
    """Fan-out evaluation: apply ``spec`` to a precomputed ``xls``."""
    if spec.kind == "ls":
        xls = _check_ls(model, xls)
        return EstimateResult(
            xhat=xls.copy(), shrinkage=np.ones_like(xls), degenerate=False
        )
    if spec.kind == "sbme":
        return sbme(model, xls)
    if spec.kind == "bbm":
        return balanced_bme(model, xls)
    if spec.kind == "pbm":
        return positive_part_bme(model, xls)
    if spec.kind == "bock":
        return bock(model, xls)
    if spec.kind == "tik1":
        return _tikhonov1_from_ls(model, xls)
    if spec.kind == "tik2":
        return _tikhonov2_from_ls(model, xls)
    if spec.kind == "ebme":
        return ebme(model, xls, b=spec.b)
    if spec.kind == "shrinkc":
        return shrink_c(model, xls, spec.c)
    if spec.kind == "offcenter":
        return off_center_sbme(model, xls, spec.x0)
    raise UnknownEstimatorError(f"unknown estimator tag {spec.kind!r}")
