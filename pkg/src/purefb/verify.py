"""Runtime monitors for the closed-loop stability claims.

Every monitor is a pure function of (trajectory, oracle constants,
tolerances): the same inputs always produce the same report.  The oracle
constants are the true bounding constants of a scenario; the controller
never reads them, which keeps the unknown-constants premise intact while
still letting the test harness check the quantitative claims:

* ``check_theorem1``   boundedness, tail convergence of the state, gain
  monotonicity and settling, and a Barbalat-style tail test on the
  squared-error integrals carried inside the trajectory.
* ``dominance_audit``  pointwise sampling of the synthesized stage
  inequality (error-derivative bracket vs. vartheta * eta * sum |z_j|).
* ``lyapunov_budget``  the integrated energy bound, affine in the gains,
  with the constant epsilon computed from the oracle and the offset
  anchored at the first sample.
* ``monte_carlo``      seeded sweep of randomized initial states and
  uncertainty draws, aggregating check_theorem1 results.

An incomplete (diverged) trajectory is reported as not applicable and
failed, never silently passed.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "AuditReport",
    "BudgetReport",
    "CheckResult",
    "InvariantReport",
    "MonteCarloReport",
    "VerifyTolerances",
    "check_theorem1",
    "dominance_audit",
    "lyapunov_budget",
    "monte_carlo",
]


@dataclass(frozen=True)
class VerifyTolerances:
    """Thresholds operationalizing the asymptotic claims at a finite horizon."""

    tol_x: float = 1e-2  # tail sup-norm of the plant state
    tol_k: float = 1e-3  # gain settling over the tail window
    tail_frac: float = 0.1  # fraction of the horizon treated as "tail"
    k_monotone: float = 1e-12  # tolerated per-step gain decrease
    z_tail: float = 1e-2  # tail increment of each squared-error integral
    energy_slack: float = 1e-6  # slack in gamma_i int z_i^2 <= k_i(T)-k_i(0)
    budget_slack: float = 1e-6  # absolute slack of the energy budget

    def to_dict(self):
        return {
            "tol_x": self.tol_x,
            "tol_k": self.tol_k,
            "tail_frac": self.tail_frac,
            "k_monotone": self.k_monotone,
            "z_tail": self.z_tail,
            "energy_slack": self.energy_slack,
            "budget_slack": self.budget_slack,
        }


@dataclass
class CheckResult:
    """One monitored condition: signed margin >= 0 means satisfied."""

    name: str
    passed: bool
    margin: float
    where: Optional[float] = None  # time of the worst margin, when meaningful
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "where": None if self.where is None else float(self.where),
            "detail": self.detail,
        }


@dataclass
class InvariantReport:
    sid: str
    applicable: bool
    diverged: bool
    checks: list = field(default_factory=list)
    detail: str = ""

    @property
    def passed(self):
        return self.applicable and all(c.passed for c in self.checks)

    def failed_names(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self):
        return {
            "scenario": self.sid,
            "applicable": self.applicable,
            "diverged": self.diverged,
            "passed": self.passed,
            "detail": self.detail,
            "checks": [c.to_dict() for c in self.checks],
        }


def _meta_cols(traj, key):
    cols = traj.meta.get(key)
    if not cols:
        raise ValueError(
            "trajectory metadata lacks %r; monitors need the column grouping "
            "recorded by the scenario" % key
        )
    return list(cols)


def check_theorem1(traj, tol=None):
    """Boundedness, convergence, gain settling and Barbalat-proxy checks.

    Expects the column grouping (x_cols, k_cols, intz_cols, gamma) in the
    trajectory metadata.  A diverged trajectory yields applicable=False and
    passed=False.
    """
    tol = tol or VerifyTolerances()
    if traj.diverged:
        t_fail = traj.failure.t if traj.failure is not None else None
        return InvariantReport(
            sid=traj.sid,
            applicable=False,
            diverged=True,
            checks=[
                CheckResult(
                    "complete", False, float("-inf"), t_fail,
                    "run aborted before the horizon; invariants not evaluable",
                )
            ],
            detail="divergence flag set",
        )
    x_cols = _meta_cols(traj, "x_cols")
    k_cols = _meta_cols(traj, "k_cols")
    intz_cols = _meta_cols(traj, "intz_cols")
    gammas = [float(g) for g in _meta_cols(traj, "gamma")]
    t = traj.t
    t_final = t[-1]
    checks = []

    # (a) every recorded signal stays finite and below the abort threshold
    worst = 0.0
    worst_col = ""
    finite = True
    for name in traj.columns[1:]:
        colv = traj.col(name)
        if not np.all(np.isfinite(colv)):
            finite = False
            worst_col = name
            break
        m = float(np.max(np.abs(colv)))
        if m > worst:
            worst, worst_col = m, name
    checks.append(
        CheckResult(
            "bounded",
            finite,
            float("-inf") if not finite else 1e9 - worst,
            None,
            "largest recorded magnitude %.6g in %s" % (worst, worst_col),
        )
    )

    # (b) tail convergence of the plant state
    t_tail = t_final * (1.0 - tol.tail_frac)
    mask = t >= t_tail
    sup = max(float(np.max(np.abs(traj.col(c)[mask]))) for c in x_cols)
    checks.append(
        CheckResult(
            "state-tail",
            sup <= tol.tol_x,
            tol.tol_x - sup,
            t_tail,
            "sup |x| over the tail window = %.6g (tol %.3g)" % (sup, tol.tol_x),
        )
    )

    # (c) gains nondecreasing and settled
    mono_margin = float("inf")
    mono_where = None
    settle_worst = 0.0
    i_tail = int(np.searchsorted(t, t_tail))
    for name in k_cols:
        kv = traj.col(name)
        if len(kv) > 1:
            d = np.diff(kv)
            j = int(np.argmin(d))
            if d[j] < mono_margin:
                mono_margin = float(d[j])
                mono_where = float(t[j + 1])
        settle_worst = max(settle_worst, float(kv[-1] - kv[i_tail]))
    checks.append(
        CheckResult(
            "gain-monotone",
            mono_margin >= -tol.k_monotone,
            mono_margin + tol.k_monotone,
            mono_where,
            "worst recorded gain decrement %.3g" % min(mono_margin, 0.0),
        )
    )
    checks.append(
        CheckResult(
            "gain-settled",
            settle_worst <= tol.tol_k,
            tol.tol_k - settle_worst,
            t_tail,
            "largest gain change over the tail = %.6g (tol %.3g)"
            % (settle_worst, tol.tol_k),
        )
    )

    # (d) squared-error integrals: bounded by the gain increments (the
    # update law gives gamma_i int z_i^2 <= k_i(T) - k_i(0) since psi >= 1)
    # and flattening out (Barbalat proxy on two equal tail windows)
    energy_margin = float("inf")
    energy_det = []
    flat_ok = True
    flat_margin = float("inf")
    t_prev = t_final * (1.0 - 2.0 * tol.tail_frac)
    i_prev = int(np.searchsorted(t, t_prev))
    for name, kname, g in zip(intz_cols, k_cols, gammas):
        iz = traj.col(name)
        kv = traj.col(kname)
        dk = float(kv[-1] - kv[0])
        lhs = g * float(iz[-1])
        m = dk + tol.energy_slack * max(1.0, abs(dk)) - lhs
        energy_margin = min(energy_margin, m)
        energy_det.append("%s: gamma*int=%.6g dk=%.6g" % (name, lhs, dk))
        tail_inc = float(iz[-1] - iz[i_tail])
        prev_inc = float(iz[i_tail] - iz[i_prev])
        flat_margin = min(
            flat_margin, tol.z_tail - tail_inc, prev_inc + 1e-9 - tail_inc
        )
        if tail_inc > tol.z_tail or tail_inc > prev_inc + 1e-9:
            flat_ok = False
    checks.append(
        CheckResult(
            "error-energy",
            energy_margin >= 0.0,
            energy_margin,
            None,
            "; ".join(energy_det),
        )
    )
    checks.append(
        CheckResult(
            "error-tail-flat",
            flat_ok,
            flat_margin,
            t_tail,
            "squared-error integrals must stop growing in the tail",
        )
    )
    return InvariantReport(
        sid=traj.sid, applicable=True, diverged=False, checks=checks
    )


@dataclass
class AuditReport:
    stage: int
    samples: int
    violations: int
    min_slack: float
    worst: Optional[dict] = None
    vartheta: float = 1.0

    @property
    def passed(self):
        return self.violations == 0

    def to_dict(self):
        return {
            "stage": self.stage,
            "samples": self.samples,
            "violations": self.violations,
            "min_slack": self.min_slack,
            "vartheta": self.vartheta,
            "worst": self.worst,
            "passed": self.passed,
        }


def _fd_partial(fn, args, j, rel=1e-6):
    base = args[j]
    h = rel * max(1.0, abs(base))
    hi = list(args)
    lo = list(args)
    hi[j] = base + h
    lo[j] = base - h
    return (fn(hi) - fn(lo)) / (2.0 * h)


def dominance_audit(
    stack,
    bounds,
    oracle,
    stage=2,
    samples=10000,
    seed=0,
    z_box=(-5.0, 5.0),
    k_box=(0.01, 10.0),
    theta_box=None,
    vartheta=None,
    rel_tol=1e-7,
):
    """Sample the stage dominance inequality of the constructive synthesis.

    For each draw of (z, k) the reconstructed-state bracket

        rho_i sum|x_j| + sum_{j<i} ( |d alpha_{i-1}/d x_j| (rho_j sum_{l<=j}|x_l|
            + phi_j |x_{j+1}|) + gamma_j |d alpha_{i-1}/d k_j| psi_j^2 z_j^2 )

    is evaluated with central-difference partials and exact absolute values
    (independent of the dual-number path and its smoothing) and compared
    against vartheta_i * eta_i * sum|z_j|.  theta draws are taken when a box
    is given, but both sides of this inequality are theta-free; the
    uncertainty enters the stage derivative only through the oracle factor
    vartheta_i.  Pass vartheta=0.0 as a negative control: every sample with
    nonzero z must then violate.
    """
    if stage < 2:
        raise ValueError("the dominance construction starts at stage 2")
    if stack.params.mode != "auto":
        raise ValueError("the audit targets the constructive (auto) synthesis")
    i = stage
    st = stage - 1
    gamma = stack.params.gamma
    rng = np.random.default_rng(seed)
    vt = oracle.vartheta(st) if vartheta is None else float(vartheta)
    violations = 0
    min_slack = float("inf")
    worst = None
    for sidx in range(samples):
        zb = [float(v) for v in rng.uniform(z_box[0], z_box[1], size=i)]
        kb = [float(v) for v in rng.uniform(k_box[0], k_box[1], size=st)]
        if theta_box is not None:
            # drawn for sampling-policy uniformity; see docstring
            [float(rng.uniform(lo, hi)) for lo, hi in theta_box]
        x, psi, eta, _ = stack.reconstruct(zb, kb)
        xf = [float(v) for v in x]

        def alpha_of_x(xs):
            return float(stack.alpha_value(st, xs, kb))

        def alpha_of_k(ks):
            return float(stack.alpha_value(st, xf[:st], ks))

        lhs = float(bounds.rho[st](xf)) * sum(abs(v) for v in xf)
        for j in range(st):
            dax = abs(_fd_partial(alpha_of_x, xf[:st], j))
            dak = abs(_fd_partial(alpha_of_k, kb, j))
            rho_j = float(bounds.rho[j](xf[: j + 1]))
            phi_j = float(bounds.phi[j](xf[: j + 2]))
            part = rho_j * sum(abs(v) for v in xf[: j + 1])
            part += phi_j * abs(xf[j + 1])
            pj = float(psi[j])
            lhs += dax * part + gamma[j] * dak * pj * pj * zb[j] * zb[j]
        rhs = vt * float(eta[st]) * sum(abs(v) for v in zb)
        slack = rhs + rel_tol * (1.0 + abs(rhs)) - lhs
        if slack < min_slack:
            min_slack = slack
            worst = {"z": zb, "k": kb, "lhs": lhs, "rhs": rhs, "sample": sidx}
        if slack < 0.0:
            violations += 1
    return AuditReport(
        stage=stage,
        samples=samples,
        violations=violations,
        min_slack=min_slack,
        worst=worst,
        vartheta=vt,
    )


@dataclass
class BudgetReport:
    sid: str
    applicable: bool
    passed: bool
    min_slack: float
    where: Optional[float]
    epsilon: float
    detail: str = ""

    def to_dict(self):
        return {
            "scenario": self.sid,
            "applicable": self.applicable,
            "passed": self.passed,
            "min_slack": self.min_slack,
            "where": self.where,
            "epsilon": self.epsilon,
            "detail": self.detail,
        }


def lyapunov_budget(traj, oracle, mu=None, gamma=None, slack=1e-6):
    """Check the integrated energy bound along a recorded trajectory.

    The proof integrates the error-energy derivative into

        V(t) <= -1/2 sum_i (b_i mu_i / gamma_i) k_i(t)^2
                + 2 epsilon sum_i k_i(t) / gamma_i + C0,

    with V = 1/2 sum z_i^2 and epsilon computed from the oracle constants.
    The offset C0 is anchored at the first sample using the design
    constants the run recorded; the per-sample affine form uses the
    constants under test (mu, gamma - defaulting to the recorded ones).
    Supplying constants that differ from the run's therefore breaks the
    anchor and fails the check, which is exactly the sensitivity the
    negative control asserts.

    Applicable only when every stage adapts its gain (the budget sums over
    all stages); otherwise reports not-applicable without judging.
    """
    if traj.diverged:
        return BudgetReport(
            traj.sid, False, False, float("-inf"), None, 0.0,
            "diverged run; budget not evaluable",
        )
    n = traj.meta.get("n")
    adaptive = list(traj.meta.get("adaptive", []))
    if n is None or adaptive != list(range(1, int(n) + 1)):
        return BudgetReport(
            traj.sid, False, False, 0.0, None, 0.0,
            "budget needs adaptation on every stage",
        )
    z_cols = _meta_cols(traj, "z_cols")
    k_cols = _meta_cols(traj, "k_cols")
    rec_mu = [float(v) for v in _meta_cols(traj, "mu")]
    rec_gamma = [float(v) for v in _meta_cols(traj, "gamma")]
    mu = rec_mu if mu is None else [float(v) for v in mu]
    gamma = rec_gamma if gamma is None else [float(v) for v in gamma]
    eps = oracle.epsilon()
    V = np.zeros(traj.data.shape[0])
    for name in z_cols:
        zv = traj.col(name)
        V += 0.5 * zv * zv

    def affine(mu_v, gamma_v, krow):
        out = 0.0
        for bi, mi, gi, kv in zip(oracle.b, mu_v, gamma_v, krow):
            out += -0.5 * (bi * mi / gi) * kv * kv + 2.0 * eps * kv / gi
        return out

    kcols = [traj.col(name) for name in k_cols]
    k0 = [float(c[0]) for c in kcols]
    c0 = float(V[0]) - affine(rec_mu, rec_gamma, k0)
    min_slack = float("inf")
    where = None
    for idx in range(len(V)):
        krow = [float(c[idx]) for c in kcols]
        s = affine(mu, gamma, krow) + c0 + slack - float(V[idx])
        if s < min_slack:
            min_slack = s
            where = float(traj.t[idx])
    return BudgetReport(
        sid=traj.sid,
        applicable=True,
        passed=min_slack >= 0.0,
        min_slack=min_slack,
        where=where,
        epsilon=eps,
        detail="offset anchored at t=0 with the run's recorded constants",
    )


@dataclass
class MonteCarloReport:
    sid: str
    runs: int
    passes: int
    seed: int
    results: list = field(default_factory=list)

    @property
    def all_passed(self):
        return self.passes == self.runs

    def to_dict(self):
        return {
            "scenario": self.sid,
            "runs": self.runs,
            "passes": self.passes,
            "seed": self.seed,
            "all_passed": self.all_passed,
            "results": self.results,
        }


def _mc_run(args):
    from . import scenarios

    sid, overrides, tol_kwargs = args
    scn = scenarios.build(sid, **overrides)
    traj = scn.run()
    report = check_theorem1(traj, VerifyTolerances(**tol_kwargs))
    tail = None
    if not traj.diverged:
        mask = traj.t >= traj.t[-1] * 0.9
        tail = max(
            float(np.max(np.abs(traj.col(c)[mask]))) for c in traj.meta["x_cols"]
        )
    return {
        "overrides": {
            key: val for key, val in overrides.items() if key in ("x0", "theta")
        },
        "diverged": traj.diverged,
        "passed": report.passed,
        "failed": report.failed_names(),
        "tail_sup_x": tail,
    }


def monte_carlo(
    sid,
    M,
    seed,
    x0_box,
    theta_box=None,
    overrides=None,
    tol=None,
    workers=1,
):
    """Seeded robustness sweep: M randomized runs, theorem checks aggregated.

    Initial states are drawn uniformly from x0_box; when theta_box is given
    each run also draws a constant uncertainty vector from it (declared as
    the run's box).  All draws come from one generator seeded up front,
    so the aggregate is deterministic regardless of worker count.
    """
    if M < 1:
        raise ValueError("Monte-Carlo needs at least one run")
    tol = tol or VerifyTolerances()
    rng = np.random.default_rng(seed)
    base = dict(overrides or {})
    jobs = []
    for _ in range(M):
        over = dict(base)
        over["x0"] = tuple(float(rng.uniform(lo, hi)) for lo, hi in x0_box)
        if theta_box is not None:
            over["theta"] = tuple(
                float(rng.uniform(lo, hi)) for lo, hi in theta_box
            )
            over["theta_box"] = tuple(tuple(edge) for edge in theta_box)
        jobs.append((sid, over, tol.to_dict()))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_run, jobs))
    else:
        results = [_mc_run(job) for job in jobs]
    passes = sum(1 for r in results if r["passed"])
    return MonteCarloReport(
        sid=sid, runs=M, passes=passes, seed=seed, results=results
    )
