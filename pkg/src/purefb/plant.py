"""Pseudo-affine pure-feedback plant descriptions and their assumption data.

A plant is a lower-triangular cascade

    dx_i/dt = f_i(x_1..x_i, theta) + g_i(x_1..x_{i+1}, theta) * x_{i+1}

for i < n, with the input u taking the role of x_{n+1} in the last stage.
Synthesis never sees the true f_i/g_i, only the declared bound functions:
rho_i dominating the drift growth and phi_i bounding the control gain from
above.  The true bounding constants are a verification-only oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .autodiff import partial, real_value, seed

__all__ = [
    "BoundSpec",
    "OracleConstants",
    "PlantConfigError",
    "PlantSpec",
    "ProbeReport",
    "UncertaintyProfile",
    "assumption_probe",
    "box_sampler",
    "check_origin",
    "decompose",
    "theta_eval",
]


class PlantConfigError(ValueError):
    """A plant or uncertainty description violates its declared contract."""


@dataclass(frozen=True)
class PlantSpec:
    """Stage functions of the cascade.

    drift[i] maps ((x_1..x_{i+1}), theta) -> real with drift[i](0, theta) = 0;
    gain[i] maps ((x_1..x_{i+1}, next), theta) -> real where ``next`` is
    x_{i+2} for inner stages and the input u for the last one.  Indices are
    0-based; both tuples have length n.
    """

    n: int
    drift: tuple
    gain: tuple

    def __post_init__(self):
        if self.n < 1:
            raise PlantConfigError("state dimension must be >= 1")
        if len(self.drift) != self.n or len(self.gain) != self.n:
            raise PlantConfigError(
                "drift/gain must each supply one function per stage"
            )

    def stage_rate(self, i, x, next_val, theta):
        """dx_{i+1}/dt at 0-based stage i given the downstream value."""
        xbar = x[: i + 1]
        return self.drift[i](xbar, theta) + self.gain[i](
            tuple(xbar) + (next_val,), theta
        ) * next_val


@dataclass(frozen=True)
class BoundSpec:
    """Known growth envelopes used by synthesis.

    rho[i] maps (x_1..x_{i+1}) -> real >= 0 and dominates the drift:
    |f_i| <= c_i rho_i sum|x_j|.  phi[i] maps (x_1..x_{i+2}) -> real > 0 and
    bounds the gain from above for inner stages; the last entry is optional
    and only exercised by the sampling probe.  All bound functions must be
    built from the supported smooth primitives so they can be differentiated.
    """

    n: int
    rho: tuple
    phi: tuple

    def __post_init__(self):
        if len(self.rho) != self.n:
            raise PlantConfigError("rho must supply one function per stage")
        if len(self.phi) not in (self.n - 1, self.n):
            raise PlantConfigError(
                "phi must cover stages 1..n-1 (the last stage entry is optional)"
            )

    def phi_at(self, i):
        """phi for 0-based stage i, or None when not declared."""
        if i < len(self.phi):
            return self.phi[i]
        return None


@dataclass(frozen=True)
class UncertaintyProfile:
    """Piecewise-continuous uncertainty trajectory with a declared box."""

    value: Callable[[float], tuple]
    box: tuple
    name: str = "theta"

    def __call__(self, t):
        return theta_eval(self, t)


def theta_eval(profile: UncertaintyProfile, t: float):
    """Evaluate an uncertainty profile and enforce its declared box."""
    v = profile.value(t)
    box = profile.box
    if len(v) != len(box):
        raise PlantConfigError(
            "%s(t) returned %d components for a box of %d"
            % (profile.name, len(v), len(box))
        )
    for j, (lo, hi) in enumerate(box):
        vj = v[j]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if not (lo - slack <= vj <= hi + slack):
            raise PlantConfigError(
                "%s[%d] = %r at t = %r leaves its declared box [%r, %r]"
                % (profile.name, j + 1, vj, t, lo, hi)
            )
    return v


@dataclass(frozen=True)
class OracleConstants:
    """True bounding constants of one concrete scenario; verification only.

    The controller path never reads these: synthesis receives PlantSpec,
    BoundSpec and design parameters and nothing else.  b/B bracket the
    control gains, c scales the drift envelopes.
    """

    b: tuple
    B: tuple
    c: tuple

    def __post_init__(self):
        n = len(self.b)
        if len(self.B) != n or len(self.c) != n:
            raise PlantConfigError("oracle constant tuples must share one length")
        for i in range(n):
            if not 0.0 < self.b[i] <= self.B[i]:
                raise PlantConfigError(
                    "need 0 < b[%d] <= B[%d], got %r, %r"
                    % (i + 1, i + 1, self.b[i], self.B[i])
                )
            if not self.c[i] >= 0.0:
                raise PlantConfigError("c[%d] must be >= 0" % (i + 1,))

    @property
    def n(self):
        return len(self.b)

    def vartheta(self, i):
        """max(1, c_1..c_{i+1}, B_1..B_{i+1}) for 0-based stage i."""
        return max(1.0, max(self.c[: i + 1]), max(self.B[: i + 1]))

    def beta(self, i):
        """Per-stage drift coefficient of the integrated energy bound."""
        if i == 0:
            return self.c[0]
        th = self.vartheta(i)
        return (i + 1) * th * th + 1.0

    def sigma(self, i):
        return self.B[i] ** 2

    def epsilon(self):
        """Single constant absorbing every cross term of the energy budget."""
        n = self.n
        cands = [self.beta(i) for i in range(n)]
        cands.append(float(n))
        for j in range(1, n):
            cands.append((n - j) + self.sigma(j - 1))
        return max(cands)


def decompose(f, xbar_next, theta, eps_d=1e-8):
    """Split a pure-feedback stage f(x_1..x_{i+1}, theta) into drift + gain.

    Returns (varphi, g) with varphi = f evaluated at a zeroed last argument
    and g the exact secant slope toward the actual last argument, falling
    back to the forward derivative at zero when |x_{i+1}| <= eps_d.  By the
    mean value theorem f = varphi + g * x_{i+1} exactly on the secant branch.
    """
    if not eps_d > 0.0:
        raise PlantConfigError("eps_d must be positive")
    head = tuple(xbar_next[:-1])
    last = xbar_next[-1]
    varphi = f(head + (0.0,), theta)
    if not np.isfinite(real_value(varphi)):
        raise PlantConfigError("stage function is not finite at the zeroed point")
    if abs(real_value(last)) > eps_d:
        full = f(tuple(xbar_next), theta)
        if not np.isfinite(real_value(full)):
            raise PlantConfigError("stage function is not finite at the sample")
        g = (full - varphi) / last
    else:
        (d,), tag = seed([0.0])
        y = f(head + (d,), theta)
        g = partial(y, 0, tag)
        if not np.isfinite(real_value(g)):
            raise PlantConfigError("stage derivative is not finite at zero")
    return varphi, g


def box_sampler(x_box, theta_box, u_box):
    """Uniform sampler over per-component (lo, hi) boxes for the probe."""

    def sample(rng):
        x = tuple(float(rng.uniform(lo, hi)) for lo, hi in x_box)
        th = tuple(float(rng.uniform(lo, hi)) for lo, hi in theta_box)
        u = float(rng.uniform(u_box[0], u_box[1]))
        return x, th, u

    return sample


@dataclass
class ProbeViolation:
    index: int
    stage: int
    kind: str
    lhs: float
    rhs: float
    x: tuple
    theta: tuple
    u: float


@dataclass
class ProbeReport:
    samples: int
    checked: int
    violation_count: int
    violations: list

    @property
    def passed(self):
        return self.violation_count == 0


def assumption_probe(plant, bounds, oracle, sampler, n_samples, seed_=0,
                     max_recorded=100):
    """Sample the declared growth/gain envelopes against the true stages.

    Checks |f_i| <= c_i rho_i sum_{j<=i} |x_j| and b_i <= g_i <= B_i phi_i
    (lower bound only on the last stage unless its phi is declared) at
    n_samples random points.  A certificate of consistency between the plant,
    its bound declarations and the oracle constants, not a proof.
    """
    rng = np.random.default_rng(seed_)
    violations = []
    count = 0
    checked = 0

    def record(idx, stage, kind, lhs, rhs, x, th, u):
        nonlocal count
        count += 1
        if len(violations) < max_recorded:
            violations.append(ProbeViolation(idx, stage, kind, lhs, rhs, x, th, u))

    for idx in range(n_samples):
        x, th, u = sampler(rng)
        sum_abs = 0.0
        for i in range(plant.n):
            xbar = x[: i + 1]
            sum_abs += abs(x[i])
            fv = plant.drift[i](xbar, th)
            envelope = oracle.c[i] * bounds.rho[i](xbar) * sum_abs
            checked += 1
            if abs(fv) > envelope + 1e-12 * (1.0 + abs(envelope)):
                record(idx, i + 1, "drift", abs(fv), envelope, x, th, u)
            nxt = x[i + 1] if i + 1 < plant.n else u
            gv = plant.gain[i](tuple(xbar) + (nxt,), th)
            tol = 1e-12 * (1.0 + abs(gv))
            checked += 1
            if gv < oracle.b[i] - tol:
                record(idx, i + 1, "gain-low", gv, oracle.b[i], x, th, u)
            phi_i = bounds.phi_at(i)
            if phi_i is not None:
                cap = oracle.B[i] * phi_i(tuple(xbar) + (nxt,))
                checked += 1
                if gv > cap + 1e-12 * (1.0 + abs(cap)):
                    record(idx, i + 1, "gain-high", gv, cap, x, th, u)
    return ProbeReport(n_samples, checked, count, violations)


def check_origin(plant, theta_samples):
    """Verify drift[i](0, theta) == 0 for each supplied theta draw."""
    zero = (0.0,) * plant.n
    worst = 0.0
    for th in theta_samples:
        for i in range(plant.n):
            worst = max(worst, abs(plant.drift[i](zero[: i + 1], th)))
    return worst
