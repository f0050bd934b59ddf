"""Adaptive high-gain backstepping synthesis for pure-feedback cascades.

Stage i uses the error coordinates z_1 = x_1, z_i = x_i - alpha_{i-1} and the
virtual control

    alpha_i = -mu_i k_i psi_i^2 z_i,      dk_i/dt = gamma_i psi_i^2 z_i^2,

where psi_i is a gain-shape function dominating every cross term of the
stage-i error derivative.  psi_1 = rho_1 + 1.  For i >= 2 the shape is
psi_i = eta_i + phi_{i-1} + 1 with eta_i built constructively:

  * reconstruct x-bar from (z-bar, k-bar),
  * differentiate alpha_{i-1} with respect to all state and gain arguments
    by a forward pass (derivatives wrapped in smooth_abs),
  * majorize each |x_q| by |z_q| + mu_{q-1} k_{q-1} psi_{q-1}^2 |z_{q-1}|
    and collect the bracket
        rho_i sum|x_j|
        + sum_j |d alpha_{i-1}/d x_j| (rho_j sum_{l<=j}|x_l| + phi_j |x_{j+1}|)
        + sum_j gamma_j |d alpha_{i-1}/d k_j| psi_j^2 z_j^2
    into nonnegative coefficients c_q of |z_q|,
  * eta_i = sum_q c_q, which dominates the bracket over sum|z_q|.

Because eta_i itself contains a derivative pass, synthesizing stage i+1
differentiates through it; the dual-number tower in ``autodiff`` makes that
legal.  The tower depth grows with the stage index, so automatic synthesis
is limited to four stages.

A scenario may instead supply externally derived gain shapes ("paper"
stages), including a plain psi (not squared) in the virtual control; the
update law always squares the shape.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .autodiff import partial, seed, smooth_abs

__all__ = [
    "ControllerStack",
    "DesignParams",
    "PaperStage",
    "StageEval",
    "SynthesisError",
    "build_eta",
    "build_psi",
    "psi1",
    "synthesize",
]

MAX_AUTO_STAGES = 4


class SynthesisError(ValueError):
    """A design parameter set or bound description cannot be synthesized."""


@dataclass(frozen=True)
class PaperStage:
    """Externally derived gain shape for one stage.

    psi maps the growing prefixes (z, k, x) to a scalar; k holds the gains
    of the stages below, x the reconstructed state prefix.
    alpha_psi_power is the exponent of psi inside the virtual control (the
    update law is always quadratic in psi).
    """

    psi: Callable
    alpha_psi_power: int = 2

    def __post_init__(self):
        if self.alpha_psi_power not in (1, 2):
            raise SynthesisError("alpha_psi_power must be 1 or 2")


@dataclass(frozen=True)
class DesignParams:
    """Per-stage design constants of the adaptive controller."""

    mu: tuple
    gamma: tuple
    k0: tuple
    deadzone: float = 0.0
    smoothing: float = 1e-6
    mode: str = "auto"
    paper_stages: Optional[tuple] = None

    def __post_init__(self):
        n = len(self.mu)
        if len(self.gamma) != n or len(self.k0) != n:
            raise SynthesisError("mu, gamma and k0 must share one length")
        for name, vals in (("mu", self.mu), ("gamma", self.gamma), ("k0", self.k0)):
            for i, v in enumerate(vals):
                if not v > 0.0:
                    raise SynthesisError(
                        "%s[%d] must be positive, got %r" % (name, i + 1, v)
                    )
        if self.deadzone < 0.0:
            raise SynthesisError("deadzone must be >= 0")
        if not self.smoothing > 0.0:
            raise SynthesisError("smoothing must be positive")
        if self.mode not in ("auto", "paper"):
            raise SynthesisError("mode must be 'auto' or 'paper'")
        if self.mode == "paper":
            if self.paper_stages is None or len(self.paper_stages) != n:
                raise SynthesisError("paper mode needs one PaperStage per stage")
        elif self.paper_stages is not None:
            raise SynthesisError("auto mode does not take paper stages")

    @property
    def n(self):
        return len(self.mu)


class StageEval(NamedTuple):
    """One forward sweep of the controller at a state/gain point."""

    z: list
    psi: list
    eta: list
    alpha: list


class ControllerStack:
    """Synthesized stage functions for one bound/design pair.

    All evaluation methods are generic over the dual-number scalar tower, so
    any of them can sit inside a differentiation pass of a later stage.
    """

    def __init__(self, bounds, params):
        n = params.n
        if params.mode == "auto":
            if bounds is None:
                raise SynthesisError("automatic synthesis needs bound functions")
            if bounds.n != n:
                raise SynthesisError("bound and design stage counts differ")
            if n > MAX_AUTO_STAGES:
                raise SynthesisError(
                    "automatic synthesis supports at most %d stages; the "
                    "derivative tower depth grows with the stage index"
                    % MAX_AUTO_STAGES
                )
            if len(bounds.phi) < n - 1:
                raise SynthesisError("automatic synthesis needs phi_1..phi_{n-1}")
        self.n = n
        self.params = params
        self.bounds = bounds
        self._mu = params.mu
        self._gamma = params.gamma
        self._eps = params.smoothing
        self._deadzone = params.deadzone
        if params.mode == "paper":
            self._paper = params.paper_stages
            self._pow = tuple(s.alpha_psi_power for s in params.paper_stages)
        else:
            self._paper = None
            self._pow = (2,) * n
        self._rho = bounds.rho if bounds is not None else None
        self._phi = bounds.phi if bounds is not None else None

    # -- forward sweeps ----------------------------------------------------

    def _stage_psi_eta(self, st, z, k, x, psi):
        """Gain shape (and dominance coefficient, auto mode) of stage st."""
        if self._paper is not None:
            return self._paper[st].psi(z, k, x), None
        if st == 0:
            return self._rho[0](x[:1]) + 1.0, None
        et = self._eta_core(st, z, k, x, psi)
        return et + self._phi[st - 1](x[: st + 1]) + 1.0, et

    def evaluate(self, x, k, upto=None):
        """Forward sweep over stages 0..upto-1 from state coordinates.

        x and k are sequences of generic scalars with at least ``upto``
        entries; alpha[n-1] is the actual plant input.
        """
        n = self.n if upto is None else upto
        mu = self._mu
        pw = self._pow
        z = []
        psi = []
        eta = []
        alpha = []
        for st in range(n):
            zi = x[st] - alpha[st - 1] if st else x[0]
            z.append(zi)
            ps, et = self._stage_psi_eta(st, z, k, x, psi)
            psi.append(ps)
            eta.append(et)
            body = ps * ps if pw[st] == 2 else ps
            alpha.append(-(mu[st] * k[st] * body * zi))
        return StageEval(z, psi, eta, alpha)

    def reconstruct(self, zbar, kbar):
        """Invert the error transform: x-bar from (z-bar, k-bar).

        kbar needs len(zbar) - 1 entries.  Returns (x, psi, eta, alpha) with
        alpha covering stages below the last.
        """
        m = len(zbar)
        mu = self._mu
        pw = self._pow
        x = [zbar[0]]
        z = []
        psi = []
        eta = []
        alpha = []
        for st in range(m):
            z.append(zbar[st])
            ps, et = self._stage_psi_eta(st, z, kbar, x, psi)
            psi.append(ps)
            eta.append(et)
            if st + 1 < m:
                body = ps * ps if pw[st] == 2 else ps
                a = -(mu[st] * kbar[st] * body * zbar[st])
                alpha.append(a)
                x.append(zbar[st + 1] + a)
        return x, psi, eta, alpha

    def _eta_core(self, st, z, k, x, psi):
        """Dominance coefficient of stage st (0-based, st >= 1).

        z, k, x, psi are the sweep prefixes; one fresh differentiation pass
        of alpha_{st-1} with respect to (x_1..x_st, k_1..k_st) runs inside.
        """
        i = st
        eps = self._eps
        mu = self._mu
        gamma = self._gamma
        duals, tag = seed([x[j] for j in range(i)] + [k[j] for j in range(i)])
        xs = duals[:i]
        ks = duals[i:]
        a_prev = self.evaluate(xs, ks, upto=i).alpha[i - 1]
        dax = [smooth_abs(partial(a_prev, j, tag), eps) for j in range(i)]
        dak = [smooth_abs(partial(a_prev, i + j, tag), eps) for j in range(i)]
        # weight of |z_{r}| contributed by the majorant of |x_{r+1}|
        w1 = [mu[r] * k[r] * psi[r] * psi[r] for r in range(i)]
        c = []
        t0 = self._rho[i](x[: i + 1])
        for r in range(i + 1):
            c.append(t0)
        for r in range(i):
            c[r] = c[r] + t0 * w1[r]
        for j in range(i):
            arv = dax[j] * self._rho[j](x[: j + 1])
            for r in range(j + 1):
                c[r] = c[r] + arv
            for r in range(j):
                c[r] = c[r] + arv * w1[r]
            apv = dax[j] * self._phi[j](x[: j + 2])
            c[j + 1] = c[j + 1] + apv
            c[j] = c[j] + apv * w1[j]
            c[j] = c[j] + gamma[j] * dak[j] * psi[j] * psi[j] * smooth_abs(z[j], eps)
        eta = c[0]
        for r in range(1, i + 1):
            eta = eta + c[r]
        return eta

    # -- public point evaluations -----------------------------------------

    def transform(self, x, k):
        """Error coordinates z at a state/gain point."""
        return self.evaluate(x, k).z

    def alpha_value(self, stage, xbar, kbar):
        """Virtual control of a 1-based stage at state coordinates."""
        return self.evaluate(xbar, kbar, upto=stage).alpha[stage - 1]

    def psi_value(self, stage, zbar, kbar):
        """Gain shape of a 1-based stage at transformed coordinates."""
        _, psi, _, _ = self.reconstruct(list(zbar[:stage]), kbar)
        return psi[stage - 1]

    def eta_value(self, stage, zbar, kbar):
        """Dominance coefficient of a 1-based stage (auto mode only)."""
        if self._paper is not None:
            raise SynthesisError("eta is only constructed in auto mode")
        if stage < 2:
            raise SynthesisError("eta starts at stage 2")
        _, _, eta, _ = self.reconstruct(list(zbar[:stage]), kbar)
        return eta[stage - 1]

    def gain_rate(self, stage, zbar, kbar):
        """Adaptation rate gamma_i psi_i^2 z_i^2 with the dead zone applied."""
        st = stage - 1
        zi = zbar[st]
        dz = self._deadzone
        if dz > 0.0 and abs(zi) < dz:
            return 0.0
        ps = self.psi_value(stage, zbar, kbar)
        return self._gamma[st] * ps * ps * zi * zi


def synthesize(bounds, params, floor_probe=200, floor_seed=7):
    """Build the controller stack and, for supplied shapes, audit psi >= 1."""
    stack = ControllerStack(bounds, params)
    if params.mode == "paper" and floor_probe:
        rng = np.random.default_rng(floor_seed)
        bad = 0
        n = params.n
        for _ in range(floor_probe):
            zb = [float(v) for v in rng.uniform(-3.0, 3.0, size=n)]
            kb = [float(v) for v in rng.uniform(0.01, 5.0, size=n)]
            _, psi, _, _ = stack.reconstruct(zb, kb)
            if min(float(p) for p in psi) < 1.0:
                bad += 1
        if bad:
            warnings.warn(
                "supplied gain shapes dipped below 1 at %d of %d probe points"
                % (bad, floor_probe),
                stacklevel=2,
            )
    return stack


def psi1(bounds):
    """First-stage gain shape rho_1 + 1 as a standalone function of z_1."""
    rho1 = bounds.rho[0]

    def psi(z1):
        return rho1((z1,)) + 1.0

    return psi


def build_eta(stage, stack):
    """Dominance coefficient of a 1-based stage as a function of (z, k)."""
    if stage < 2:
        raise SynthesisError("eta starts at stage 2")

    def eta(zbar, kbar):
        return stack.eta_value(stage, zbar, kbar)

    return eta


def build_psi(stage, eta_fn, bounds):
    """Compose a stage gain shape from its dominance coefficient.

    Returns psi(zbar, kbar, xbar) = eta(zbar, kbar) + phi_{stage-1}(xbar) + 1
    with xbar the reconstructed state prefix.
    """
    if stage < 2:
        raise SynthesisError("composed shapes start at stage 2")
    phi_prev = bounds.phi[stage - 2]

    def psi(zbar, kbar, xbar):
        return eta_fn(zbar, kbar) + phi_prev(tuple(xbar[:stage])) + 1.0

    return psi
