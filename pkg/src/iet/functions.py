"""Named test-function families for the CLI and fixtures.

A function spec is a small JSON-able dict, e.g.

    {"kind": "sin", "freq": 1, "amp": 1.0}
    {"kind": "coboundary", "psi": {"kind": "sin", "freq": 2}}
    {"kind": "gamma", "vector": {"A": 1, "B": -1, ...}}
    {"kind": "comp_bump", "amps": {...}, "power": 6}
    {"kind": "plateau_cycles", "values": [0, 0.35], "width": 0.2}

All families provide Taylor oracles, so jets, Schwarzians and the solver
can consume them directly.
"""
from __future__ import annotations

import math
from typing import Callable

import mpmath
from mpmath import mp

from . import taylor
from .combinatorics import sigma_and_cycles
from .errors import InputFormatError
from .iem import pi_like
from .piecewise import PiecewiseFunction, PiecewisePoly


def _smoothstep_series(t: taylor.TSeries) -> taylor.TSeries:
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3 (C^2 at the edges)."""
    return ((t * 6 - 15) * t + 10) * t * t * t


def scalar_fn(spec: dict) -> tuple[Callable, Callable]:
    """(value callable, taylor factory) for a global function on [0, L]."""
    kind = spec.get("kind", "sin")
    if kind == "sin":
        freq = spec.get("freq", 1)
        amp = spec.get("amp", 1)
        phase = spec.get("phase", 0)

        def value(x):
            return amp * mpmath.sin(2 * mpmath.pi * freq * x + phase)

        def factory(x, order):
            t = taylor.TSeries.variable(x, order)
            return taylor.sin(t * (2 * pi_like(x) * freq) + phase) * amp
        return value, factory
    if kind == "poly":
        coeffs = [c for c in spec["coeffs"]]

        def value(x):
            acc = 0 * x
            for c in reversed(coeffs):
                acc = acc * x + c
            return acc

        def factory(x, order):
            t = taylor.TSeries.variable(x, order)
            acc = taylor.TSeries.constant(x * 0, order)
            for c in reversed(coeffs):
                acc = acc * t + c
            return acc
        return value, factory
    raise InputFormatError(f"unknown scalar function kind {kind!r}")


def piecewise_function(iem, spec: dict, order: int = 6) -> PiecewiseFunction:
    kind = spec.get("kind")
    if kind == "gamma":
        vec = [spec["vector"][a] for a in iem.pi.alphabet]
        return PiecewiseFunction.from_gamma(iem, [iem.mode.coerce(v)
                                                  for v in vec])
    if kind == "coboundary":
        value, factory = scalar_fn(spec["psi"])
        return PiecewiseFunction.coboundary(iem, value, factory, order=order)
    if kind in ("sin", "poly"):
        value, factory = scalar_fn(spec)
        return PiecewiseFunction.from_global(iem, value, order, factory)
    if kind == "comp_bump":
        return compact_bump(iem, spec.get("amps"), spec.get("power", 6),
                            order=order)
    if kind == "plateau_cycles":
        psi = plateau_cycle_psi(iem, spec["values"], spec.get("extras"))
        return PiecewiseFunction.coboundary(iem, psi[0], psi[1], order=order)
    raise InputFormatError(f"unknown piecewise function kind {kind!r}")


def compact_bump(iem, amps: dict | None = None, power: int = 6,
                 order: int = 6) -> PiecewiseFunction:
    """Per-interval bumps amp_a sin^power(pi tau): vanish to order power-1
    at every half-point, so all boundary data through that order is zero."""
    alphabet = iem.pi.alphabet
    if amps is None:
        amps = {a: ((-1) ** i) * (1 + i) / (2 * len(alphabet))
                for i, a in enumerate(alphabet)}
    ev, tf = {}, {}
    for a in alphabet:
        p = iem.pi.position_top(a)
        left = iem.top_points[p - 1]
        ln = iem.top_points[p] - left
        amp = iem.mode.coerce(amps[a])

        def value(x, left=left, ln=ln, amp=amp):
            return amp * mpmath.sin(mpmath.pi * (x - left) / ln) ** power

        def factory(x, order, left=left, ln=ln, amp=amp):
            t = taylor.TSeries.variable(x, order)
            u = (t - left) / ln
            return taylor.sin(u * pi_like(x)).power_int(power) * amp
        ev[a] = value
        tf[a] = factory
    return PiecewiseFunction(iem, ev, order, tf)


def plateau_cycle_psi(iem, values, extras: list | None = None):
    """A polynomial psi taking the prescribed constant of each sigma-cycle
    at every singularity point touching that cycle.

    Half-points paired by sigma share their underlying point, so matching
    the values pointwise makes phi = psi o T - psi vanish at every
    half-point; nu(phi) then recovers the cycle constants. A polynomial
    interpolant keeps phi exactly representable in the solver's pipeline
    (no projection error), unlike sharp plateaus.

    extras: additional (point, value) interpolation constraints, useful to
    make psi nontrivial when all cycle values coincide.
    """
    pi = iem.pi
    sigma = sigma_and_cycles(pi)
    if len(values) != sigma.s:
        raise InputFormatError(f"need {sigma.s} cycle values")
    targets = {}
    for ci, cyc in enumerate(sigma.cycles):
        for (a, side) in cyc:
            p = pi.position_top(a)
            xt = iem.top_points[p - 1] if side == "L" else iem.top_points[p]
            q = pi.position_bottom(a)
            xb = iem.bottom_points[q - 1] if side == "L" else iem.bottom_points[q]
            for x in (xt, xb):
                hit = [k for k in targets if abs(k - x) == 0]
                if hit and targets[hit[0]] != values[ci]:
                    raise InputFormatError(
                        "inconsistent plateau values (colliding points)")
                targets[x] = values[ci]
    anchors = sorted(targets.items(), key=lambda kv: float(kv[0]))
    if extras:
        anchors.extend((iem.mode.coerce(x), v) for x, v in extras)
    # Minimal-norm fit in a smooth basis [1, x/L, sin(2 pi k x/L),
    # cos(2 pi k x/L)]: interpolates the constraints without the Runge
    # oscillation a high-degree polynomial would bring, and stays entire,
    # so the solver's Chebyshev projection is spectrally accurate.
    import numpy as np
    total = float(iem.total)
    # Lowest mode count that can satisfy the constraints: the solver's
    # per-interval Chebyshev projection must resolve every mode, and its
    # error is amplified through the level pipeline.
    n_modes = max(5, -(-(len(anchors) - 2) // 2))
    xs = [float(x) for x, _ in anchors]
    vs = [float(v) for _, v in anchors]

    def basis_row(x):
        row = [1.0, x / total]
        for k in range(1, n_modes + 1):
            row.append(math.sin(2 * math.pi * k * x / total))
            row.append(math.cos(2 * math.pi * k * x / total))
        return row

    a = np.array([basis_row(x) for x in xs])
    coef, *_ = np.linalg.lstsq(a, np.array(vs), rcond=None)
    resid = np.abs(a @ coef - np.array(vs)).max()
    if resid > 1e-10:
        raise InputFormatError("cycle-value interpolation failed")

    def value(x):
        acc = coef[0] + coef[1] * x / total
        for k in range(1, n_modes + 1):
            arg = 2 * mpmath.pi * k * x / total
            acc += coef[2 * k] * mpmath.sin(arg) + \
                coef[2 * k + 1] * mpmath.cos(arg)
        return acc

    def factory(x, order):
        t = taylor.TSeries.variable(x, order)
        acc = (t / total) * coef[1] + coef[0]
        for k in range(1, n_modes + 1):
            s, c = taylor.sin_cos(t * (2 * pi_like(x) * k / total))
            acc = acc + s * coef[2 * k] + c * coef[2 * k + 1]
        return acc

    return value, factory
