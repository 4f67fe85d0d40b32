"""Double-well potentials and their structural constants.

A :class:`DoubleWell` bundles ``W``, ``W'`` and ``W''`` with the growth
exponent ``p``, the growth constant ``c_W``, the well half-width ``delta_W``
and the convexity constant ``kappa_W``.  Constants are certified once by a
sampling scan (:func:`verify_structural_assumptions`) and stored.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DoubleWell",
    "make_prototype_well",
    "convexified_well",
    "AssumptionReport",
    "verify_structural_assumptions",
    "sign_property_holds",
    "max_principle_bound",
]


@dataclass(frozen=True)
class DoubleWell:
    """Potential triple with structural constants.

    Attributes
    ----------
    W, Wp, Wpp : callable
        The potential and its first two derivatives (vectorized).
    p : float
        Growth exponent, ``p > 1``.
    c_W : float
        Growth constant of ``|W'|``.
    delta_W : float
        Well neighbourhood half-width in (0, 1/2].
    kappa_W : float
        Lower bound of ``W''`` on the well neighbourhoods.
    name : str
    """

    W: object
    Wp: object
    Wpp: object
    p: float
    c_W: float
    delta_W: float
    kappa_W: float
    name: str = field(default="custom")


def make_prototype_well():
    """The quartic ``W(t) = (1 - t^2)^2 / 4`` with ``p = 4``, ``c_W = 3``, ``delta_W = 0.18``.

    ``delta_W`` is below the largest admissible value ``1 - sqrt(2/3)``, where
    ``W''(t) = 3t^2 - 1`` drops to ``kappa_W = 1``.
    """
    return DoubleWell(
        W=lambda t: 0.25 * (1 - np.square(t)) ** 2,
        Wp=lambda t: np.asarray(t) ** 3 - np.asarray(t),
        Wpp=lambda t: 3 * np.square(t) - 1,
        p=4.0,
        c_W=3.0,
        delta_W=0.18,
        kappa_W=1.0,
        name="quartic",
    )


def convexified_well(w, kappa):
    """Convex C^1 modification of ``w`` around the well ``kappa``.

    Equal to ``W`` on ``(kappa - delta_W, kappa + delta_W)`` and continued by the
    tangent lines outside.

    Parameters
    ----------
    w : DoubleWell
    kappa : {+1, -1}

    Returns
    -------
    callable
    """
    if kappa not in (1, -1):
        raise ValueError("kappa must be +1 or -1")
    lo, hi = kappa - w.delta_W, kappa + w.delta_W
    Wlo, Whi = float(w.W(lo)), float(w.W(hi))
    Plo, Phi = float(w.Wp(lo)), float(w.Wp(hi))

    def Wt(t):
        t = np.asarray(t, dtype=float)
        inner = np.clip(t, lo, hi)
        return np.where(t < lo, Wlo + Plo * (t - lo), np.where(t > hi, Whi + Phi * (t - hi), w.W(inner)))

    return Wt


@dataclass
class AssumptionReport:
    """Outcome of the structural scan.

    ``checks`` maps an assumption label to ``(passed, worst_margin)``; a
    negative margin quantifies the violation.
    """

    checks: dict
    fd_errors: dict

    @property
    def passed(self):
        return all(ok for ok, _ in self.checks.values())

    def failed(self):
        return [k for k, (ok, _) in self.checks.items() if not ok]


def verify_structural_assumptions(w, sample_range=(-10.0, 10.0), n_samples=20001):
    """Sampling scan of the well assumptions and of the stored constants.

    Checks nonnegativity and the zero set ``{W = 0} = {-1, 1}`` (H1),
    nondegenerate wells and the ``kappa_W`` bound on the well neighbourhoods
    (H2), the two-sided growth bound on ``|W'|`` with ``c_W`` (H3, on the
    sample range plus an asymptotic ratio test at ``|t| = 1e3``), and finite
    difference consistency of ``W'`` and ``W''``.

    Returns
    -------
    AssumptionReport
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    t = np.linspace(sample_range[0], sample_range[1], n_samples)
    t = np.union1d(t, [-1.0, 1.0])
    W, Wp, Wpp = (np.asarray(f(t), dtype=float) for f in (w.W, w.Wp, w.Wpp))
    checks = {}
    checks["H1: W >= 0"] = (bool(W.min() >= -1e-14), float(W.min()))
    w_pm = np.array([w.W(-1.0), w.W(1.0)], dtype=float)
    away = np.abs(np.abs(t) - 1) > 1e-3
    zero_margin = float(min(-np.abs(w_pm).max(), W[away].min() if away.any() else 0.0))
    checks["H1: {W=0} = {+-1}"] = (bool(np.abs(w_pm).max() <= 1e-14 and W[away].min() > 0), zero_margin)
    wells = np.array([w.Wpp(-1.0), w.Wpp(1.0)], dtype=float)
    checks["H2: W''(+-1) > 0"] = (bool(wells.min() > 0), float(wells.min()))
    near = np.abs(np.abs(t) - 1) <= w.delta_W
    kmargin = float((Wpp[near] - w.kappa_W).min()) if near.any() else 0.0
    checks["H2: W'' >= kappa_W near wells"] = (kmargin >= -1e-12, kmargin)
    checks["delta_W in (0, 1/2]"] = (0 < w.delta_W <= 0.5, float(min(w.delta_W, 0.5 - w.delta_W)))
    a = np.abs(t) ** (w.p - 1)
    lower = np.abs(Wp) - (a - 1) / w.c_W
    upper = w.c_W * (a + 1) - np.abs(Wp)
    tb = np.array([1e3, -1e3])
    ratio = np.abs(np.asarray(w.Wp(tb), dtype=float)) / np.abs(tb) ** (w.p - 1)
    asym = float(min(ratio.min() - 1 / w.c_W, w.c_W - ratio.max()))
    checks["H3: lower growth"] = (bool(lower.min() >= -1e-12 and asym >= 0), float(min(lower.min(), asym)))
    checks["H3: upper growth"] = (bool(upper.min() >= -1e-12 and asym >= 0), float(min(upper.min(), asym)))
    dt = t[1:] - t[:-1]
    mid = 0.5 * (t[1:] + t[:-1])
    fd1 = np.abs((W[1:] - W[:-1]) / dt - np.asarray(w.Wp(mid), dtype=float))
    fd2 = np.abs((Wp[1:] - Wp[:-1]) / dt - np.asarray(w.Wpp(mid), dtype=float))
    scale = 1 + np.abs(np.asarray(w.Wpp(mid), dtype=float)) + np.abs(W[1:])
    fd_errors = {"W'": float(fd1.max()), "W''": float(fd2.max()), "step": float(dt.max())}
    # central differences are second order; allow a generous O(dt) envelope
    ok_fd = bool(np.all(fd1 <= 10 * dt.max() * scale) and np.all(fd2 <= 10 * dt.max() * scale))
    checks["finite-difference consistency"] = (ok_fd, float(max(fd1.max(), fd2.max())))
    return AssumptionReport(checks, fd_errors)


def sign_property_holds(w, delta, t_max=100.0, n_samples=20001):
    """Check ``W'(t) t - delta |t| >= 0`` for sampled ``|t| >= (1 + c_W delta)^(1/(p-1))``."""
    t0 = (1 + w.c_W * delta) ** (1 / (w.p - 1))
    t = np.linspace(t0, max(t_max, 2 * t0), n_samples)
    t = np.concatenate([t, -t])
    return bool(np.all(np.asarray(w.Wp(t)) * t - delta * np.abs(t) >= -1e-12))


def max_principle_bound(w, eps, s, f_sup, g_sup):
    """Sup bound ``max((1 + c_W eps^(2s) |f|_inf)^(1/(p-1)), |g|_inf)`` on solutions."""
    return max((1 + w.c_W * eps ** (2 * s) * f_sup) ** (1 / (w.p - 1)), g_sup)
