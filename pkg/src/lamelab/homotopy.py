"""Predictor-corrector path tracking for square analytic systems H(x, s) = 0."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class TrackOptions:
    initial_step: float = 0.02
    max_step: float = 0.25
    min_step: float = 1e-13
    max_steps: int = 40000
    newton_tol: float = 1e-11
    corrector_iters: int = 4
    anti_jump: float = 0.05
    degenerate_scale: float = 1e-11


@dataclass
class Homotopy:
    """residual(x, s), jac(x, s), ds(x, s) and a local length scale used against path jumping."""

    residual: Callable
    jac: Callable
    ds: Callable
    scale: Callable = field(default=lambda x: 1.0)


@dataclass
class TrackResult:
    x: np.ndarray
    s: float
    status: str
    steps: int
    message: str = ""


def newton(residual, jac, x, tol=1e-12, maxit=20, scale=None):
    """Plain Newton; returns (x, converged, last step norm)."""
    x = np.array(x, dtype=complex)
    step_norm = np.inf
    for _ in range(maxit):
        F = residual(x)
        try:
            dx = np.linalg.solve(jac(x), -F)
        except np.linalg.LinAlgError:
            return x, False, np.inf
        if not np.all(np.isfinite(dx)):
            return x, False, np.inf
        x = x + dx
        step_norm = np.linalg.norm(dx)
        ref = 1.0 + np.linalg.norm(x) if scale is None else scale
        if step_norm <= tol * ref:
            return x, True, step_norm
    return x, False, step_norm


def _tangent(H, x, s):
    return np.linalg.solve(H.jac(x, s), -H.ds(x, s))


def track(H: Homotopy, x0, s0: float = 0.0, s1: float = 1.0, opts: TrackOptions | None = None) -> TrackResult:
    """Follow the solution branch through x0 at s0 to s1 (real parameter)."""
    opts = opts or TrackOptions()
    x = np.array(x0, dtype=complex)
    s = s0
    direction = 1.0 if s1 >= s0 else -1.0
    h = opts.initial_step * abs(s1 - s0)
    steps = 0
    while direction * (s1 - s) > 1e-15:
        steps += 1
        if steps > opts.max_steps:
            return TrackResult(x, s, "failed", steps, "too many steps")
        h = min(h, abs(s1 - s), opts.max_step * abs(s1 - s0))
        ds = direction * h
        try:
            k1 = _tangent(H, x, s)
            k2 = _tangent(H, x + 0.5 * ds * k1, s + 0.5 * ds)
            k3 = _tangent(H, x + 0.5 * ds * k2, s + 0.5 * ds)
            k4 = _tangent(H, x + ds * k3, s + ds)
            xp = x + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        except (np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError, ArithmeticError):
            xp = None
        ok = False
        if xp is not None and np.all(np.isfinite(xp)):
            try:
                loc = H.scale(xp)
                xn = xp
                ok = True
                for it in range(opts.corrector_iters):
                    F = H.residual(xn, s + ds)
                    dx = np.linalg.solve(H.jac(xn, s + ds), -F)
                    if it == 0 and np.linalg.norm(dx) > opts.anti_jump * loc:
                        ok = False
                        break
                    xn = xn + dx
                    if np.linalg.norm(dx) <= opts.newton_tol * max(loc, 1e-300) + 1e-15 * np.linalg.norm(xn):
                        break
                else:
                    ok = np.linalg.norm(dx) <= 1e-8 * max(loc, 1e-300)
            except (np.linalg.LinAlgError, ZeroDivisionError, ArithmeticError):
                ok = False
        if ok and np.all(np.isfinite(xn)):
            x = xn
            s = s + ds
            h *= 1.6
            try:
                if H.scale(x) < opts.degenerate_scale:
                    return TrackResult(x, s, "degenerate", steps, "local scale collapsed")
            except (ZeroDivisionError, ArithmeticError):
                return TrackResult(x, s, "degenerate", steps, "hit singularity")
        else:
            h *= 0.5
            if h < opts.min_step * abs(s1 - s0):
                return TrackResult(x, s, "failed", steps, "step underflow")
    return TrackResult(x, s1, "ok", steps)


def dedup_points(points, distance, tol):
    """Greedy clustering: returns list of (representative, member indices)."""
    groups = []
    for idx, pt in enumerate(points):
        for g in groups:
            if distance(g[0], pt) < tol:
                g[1].append(idx)
                break
        else:
            groups.append((pt, [idx]))
    return groups
