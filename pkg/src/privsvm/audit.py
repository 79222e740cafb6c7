"""Seeded Monte-Carlo audits of the mechanisms' guarantees.

Each audit is a pure function of its configuration and a 64-bit base seed:
trial t draws from a generator seeded with mix64(base_seed, t), so trials
never share state and reports are reproducible bit for bit. Statistical
audits of proved guarantees must pass (up to documented Monte-Carlo slack);
a failure indicates an implementation defect. The privacy-ratio audit is the
one exception: finite samples cannot certify a density-ratio bound, so it is
a smoke test with an explicit heuristic slack, never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as _kernels
from . import mechanisms as _mechanisms
from .data import Database, DomainBox, Example, bounding_box, neighbor_replace_last
from .kernels import (
    KernelSpec,
    UnsupportedKernelError,
    linear_kernel,
    rbf_kernel,
    sample_spectral,
    spectral_second_moment,
)
from .mechanisms import RBF_SIGMA_CEILING, train_private_rff
from .solver import decision_values, solve_svm_dual

__all__ = [
    "mix64",
    "child_rng",
    "AuditReport",
    "LowerBoundFamily",
    "MechanismParams",
    "linear_separation_pair",
    "rbf_packing_family",
    "default_grid_resolution",
    "sup_norm_distance",
    "sensitivity_audit",
    "utility_audit",
    "kernel_approx_audit",
    "privacy_ratio_audit",
    "packing_separation_audit",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(base_seed: int, t: int) -> int:
    """splitmix64 finalizer of (base_seed + t * golden ratio) mod 2^64."""
    z = (base_seed + t * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def child_rng(base_seed: int, t: int):
    """Independent generator for trial t of an audit seeded with base_seed."""
    return np.random.default_rng(mix64(base_seed, t))


@dataclass(frozen=True)
class AuditReport:
    """Outcome of one audit: observed statistic against its theoretical bound.

    `comparison` states the pass direction: "<=" means pass iff
    statistic <= bound, ">=" the reverse (minus any slack noted in details).
    """

    name: str
    trials: int
    statistic: float
    bound: float
    passed: bool
    seed: int
    comparison: str = "<="
    details: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "audit": {
                "name": self.name,
                "trials": self.trials,
                "statistic": self.statistic,
                "bound": self.bound,
                "pass": self.passed,
                "seed": self.seed,
                "comparison": self.comparison,
                "details": dict(self.details),
            }
        }


@dataclass(frozen=True)
class LowerBoundFamily:
    """Pairwise-neighboring databases whose exact SVM classifiers separate."""

    databases: tuple
    expected_separation: float
    construction: str
    params: dict = field(default_factory=dict)
    expected_weights: tuple | None = None


@dataclass(frozen=True)
class MechanismParams:
    """Which private mechanism an audit should exercise, and with what knobs."""

    mechanism: str  # "finite" or "rff"
    C: float
    lam: float
    kernel: KernelSpec | None = None
    d_hat: int | None = None

    def __post_init__(self):
        if self.mechanism not in ("finite", "rff"):
            raise ValueError("mechanism must be 'finite' or 'rff'")
        if self.mechanism == "rff" and (self.kernel is None or self.d_hat is None):
            raise ValueError("rff mechanism needs a kernel and d_hat")


def linear_separation_pair(C: float, n: int, eps: float) -> LowerBoundFamily:
    """Neighbouring pair of 1-D databases whose exact linear-SVM weights differ
    by exactly 2*eps.

    Both share floor(n/2) points at -M labelled -1 and the next n-1-floor(n/2)
    points at +M labelled +1, with M = 2 n eps / C; they differ only in the
    label of the last point, placed at M - m with m = n eps / C. Closed-form
    optimal weights are attached for regression checks.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if n <= 1:
        raise ValueError("n must exceed 1")
    eps_cap = math.sqrt(C) / (2 * n)
    if not 0 < eps < eps_cap:
        raise ValueError(
            f"eps must lie strictly inside (0, sqrt(C)/(2n)) = (0, {eps_cap!r})"
        )
    M = 2.0 * n * eps / C
    m = n * eps / C
    neg = n // 2
    pos = n - 1 - neg
    xs = np.concatenate([np.full(neg, -M), np.full(pos, M), [M - m]])[:, None]
    base_labels = np.concatenate([np.full(neg, -1.0), np.full(pos, 1.0), [0.0]])
    labels1 = base_labels.copy()
    labels1[-1] = -1.0
    labels2 = base_labels.copy()
    labels2[-1] = 1.0
    w1 = C * (M * (n - 2) + m) / n
    w2 = C * (M * n - m) / n
    return LowerBoundFamily(
        databases=(Database(xs, labels1), Database(xs, labels2)),
        expected_separation=2.0 * eps,
        construction="linear-pair",
        params={
            "C": C,
            "n": n,
            "eps": eps,
            "M": M,
            "m": m,
            "bound_margin_ok": 1.0 / M > C * (M * n - m) / n,
        },
        expected_weights=(w1, w2),
    )


def rbf_packing_family(C: float, n: int, sigma: float) -> LowerBoundFamily:
    """N pairwise-neighbouring 2-D databases whose rbf-SVM classifiers form a
    packing.

    Database i holds n-1 negatively labelled points at the origin and one
    positive point at angle 2 pi i / N on the unit circle; any two databases
    differ only in that last point. Requires n > C and
    sigma < sqrt(1/(2 ln 2)) so that the last dual coefficient is pinned at
    C/n and adjacent classifiers stay C/(2n) apart.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if n <= C:
        raise ValueError("n must exceed C")
    if n <= 1:
        raise ValueError("n must exceed 1")
    if not 0 < sigma < RBF_SIGMA_CEILING:
        raise ValueError(
            f"sigma must lie in (0, {RBF_SIGMA_CEILING:.4f}) for the packing family"
        )
    N = math.floor((2.0 / sigma) * math.sqrt(2.0 / math.log(2.0)))
    databases = []
    for i in range(1, N + 1):
        theta = 2.0 * math.pi * i / N
        points = np.zeros((n, 2))
        points[-1] = (math.cos(theta), math.sin(theta))
        labels = np.full(n, -1.0)
        labels[-1] = 1.0
        databases.append(Database(points, labels))
    return LowerBoundFamily(
        databases=tuple(databases),
        expected_separation=C / (2.0 * n),
        construction="rbf-packing",
        params={
            "C": C,
            "n": n,
            "sigma": sigma,
            "N": N,
            "gamma": math.exp(-1.0 / (2.0 * sigma**2)),
        },
    )


def default_grid_resolution(d: int) -> int:
    """51 points per axis up to 2-D, 11 up to 4-D; beyond that pick explicitly."""
    if d <= 2:
        return 51
    if d <= 4:
        return 11
    raise ValueError("choose a grid resolution explicitly for d > 4")


def sup_norm_distance(f, g, box: DomainBox, grid_resolution: int) -> float:
    """Max of |f(x) - g(x)| over a regular grid on the box."""
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    worst = 0.0
    for x in box.grid(grid_resolution):
        worst = max(worst, abs(float(f(x)) - float(g(x))))
    return worst


def _linear_weights(db: Database, C: float) -> np.ndarray:
    model = solve_svm_dual(db, linear_kernel(), C)
    return db.points.T @ (model.alphas * db.labels)


def sensitivity_audit(
    trials: int, n: int, C: float, box: DomainBox, seed: int
) -> AuditReport:
    """Check the weight-vector l1 sensitivity bound on random neighbour pairs.

    Each trial draws a database of n uniform points in the box with uniform
    labels, rotates it by a random offset (so every position gets its turn as
    the differing entry), replaces the last entry, trains the exact
    linear-map SVM on both, and records |w - w'|_1. The bound is
    4 C kappa sqrt(F) / n with kappa the largest point norm in the box and
    F = d; the bound always holds, so any observed violation is an
    implementation defect.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    d = box.dim
    worst = 0.0
    for t in range(trials):
        rng = child_rng(seed, t)
        points = rng.uniform(box.lower, box.upper, size=(n, d))
        labels = rng.integers(0, 2, size=n) * 2.0 - 1.0
        shift = int(rng.integers(0, n))
        db = Database(np.roll(points, shift, axis=0), np.roll(labels, shift))
        replacement = Example(
            rng.uniform(box.lower, box.upper, size=d),
            int(rng.integers(0, 2) * 2 - 1),
        )
        neighbor = neighbor_replace_last(db, replacement)
        diff = _linear_weights(db, C) - _linear_weights(neighbor, C)
        worst = max(worst, float(np.abs(diff).sum()))
    kappa = box.max_l2_norm()
    bound = 4.0 * C * kappa * math.sqrt(d) / n
    return AuditReport(
        name="sensitivity",
        trials=trials,
        statistic=worst,
        bound=bound,
        passed=worst <= bound,
        seed=seed,
        details={"n": n, "C": C, "kappa": kappa, "F": d},
    )


def _mean_hinge(margins: np.ndarray) -> float:
    return float(np.mean(np.maximum(0.0, 1.0 - margins)))


def utility_audit(
    db: Database,
    params: MechanismParams,
    eps: float,
    delta: float,
    trials: int,
    grid_resolution: int,
    seed: int,
    box: DomainBox | None = None,
) -> AuditReport:
    """Estimate how often the private classifier strays more than eps from its
    non-private reference in sup-norm over the domain.

    The reference is the exact SVM on the same feature map (finite mechanism)
    or on the exact kernel (rff mechanism). The sup-norm is measured on a
    regular grid over the box, augmented with the training points so the
    hinge-risk transfer check (mean hinge gap <= sup gap, hinge being
    1-Lipschitz) is exact. Passing means the failure fraction is at most
    delta.
    """
    if not (math.isfinite(eps) and eps > 0):
        raise ValueError("eps must be finite and positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if trials < 1:
        raise ValueError("trials must be positive")
    box = box if box is not None else bounding_box(db)
    eval_points = np.vstack([box.grid(grid_resolution), db.points])
    y = db.labels
    failures = 0
    hinge_violation = 0.0

    if params.mechanism == "finite":
        w_ref = _linear_weights(db, params.C)
        ref_vals = eval_points @ w_ref
        ref_hinge = _mean_hinge(y * (db.points @ w_ref))
        for t in range(trials):
            mu = _mechanisms._draw_noise(params.lam, db.dim, child_rng(seed, t))
            vals = eval_points @ (w_ref + mu)
            sup = float(np.max(np.abs(vals - ref_vals)))
            if sup > eps:
                failures += 1
            trial_hinge = _mean_hinge(y * (db.points @ (w_ref + mu)))
            hinge_violation = max(hinge_violation, abs(trial_hinge - ref_hinge) - sup)
    else:
        ref_model = solve_svm_dual(db, params.kernel, params.C)
        ref_vals = decision_values(ref_model, eval_points)
        ref_hinge = _mean_hinge(y * decision_values(ref_model, db.points))
        for t in range(trials):
            private = train_private_rff(
                db, params.kernel, params.C, params.lam, params.d_hat,
                child_rng(seed, t),
            )
            vals = private.decision_values(eval_points)
            sup = float(np.max(np.abs(vals - ref_vals)))
            if sup > eps:
                failures += 1
            trial_hinge = _mean_hinge(y * private.decision_values(db.points))
            hinge_violation = max(hinge_violation, abs(trial_hinge - ref_hinge) - sup)

    statistic = failures / trials
    return AuditReport(
        name="utility",
        trials=trials,
        statistic=statistic,
        bound=delta,
        passed=statistic <= delta,
        seed=seed,
        details={
            "mechanism": params.mechanism,
            "lambda": params.lam,
            "eps": eps,
            "grid_resolution": grid_resolution,
            "eval_points": int(eval_points.shape[0]),
            "hinge_transfer_ok": bool(hinge_violation <= 1e-12),
            "hinge_transfer_violation": hinge_violation,
        },
    )


def kernel_approx_audit(
    kernel: KernelSpec,
    d_hat: int,
    box: DomainBox,
    eps: float,
    trials: int,
    grid_resolution: int,
    seed: int,
) -> AuditReport:
    """Fraction of independent feature-map draws whose kernel approximation
    misses by eps or more, against the failure probability the dimension
    calibration promises at this d_hat.

    Both kernels depend only on x - y, so the sup is taken over a grid on the
    displacement box. When the inverted failure probability exceeds one the
    bound is vacuous and flagged as such.
    """
    if not kernel.translation_invariant():
        raise UnsupportedKernelError("kernel approximation requires a translation-invariant kernel")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if trials < 1:
        raise ValueError("trials must be positive")
    d = box.dim
    deltas = box.displacement_box().grid(grid_resolution)
    true_vals = _kernels.gram(kernel, deltas, np.zeros((1, d)))[:, 0]
    failures = 0
    worst_sup = 0.0
    for t in range(trials):
        omegas = sample_spectral(kernel, d, d_hat, child_rng(seed, t))
        approx = np.mean(np.cos(deltas @ omegas.T), axis=1)
        sup = float(np.max(np.abs(approx - true_vals)))
        worst_sup = max(worst_sup, sup)
        if sup >= eps:
            failures += 1
    statistic = failures / trials
    sigma_p2 = spectral_second_moment(kernel, d)
    diam = box.diameter()
    if math.isfinite(sigma_p2):
        delta_inverted = (
            2.0**8 * sigma_p2 * diam**2 / eps**2
            * math.exp(-d_hat * eps**2 / (4.0 * (d + 2)))
        )
    else:
        delta_inverted = math.inf
    bound = min(1.0, delta_inverted)
    return AuditReport(
        name="kernel_approx",
        trials=trials,
        statistic=statistic,
        bound=bound,
        passed=statistic <= bound,
        seed=seed,
        details={
            "d_hat": d_hat,
            "eps": eps,
            "grid_resolution": grid_resolution,
            "delta_inverted": delta_inverted,
            "bound_vacuous": bool(delta_inverted >= 1.0),
            "worst_sup_error": worst_sup,
        },
    )


def _require_neighbors(db1: Database, db2: Database):
    if db1.dim != db2.dim or db1.n != db2.n:
        raise ValueError("neighboring databases must share size and dimension")
    if not (
        np.array_equal(db1.points[:-1], db2.points[:-1])
        and np.array_equal(db1.labels[:-1], db2.labels[:-1])
    ):
        raise ValueError("databases are not neighbors: they differ before the last entry")


def privacy_ratio_audit(
    db1: Database,
    db2: Database,
    params: MechanismParams,
    beta: float,
    trials: int,
    bins: int,
    coordinate_index: int,
    seed: int,
) -> AuditReport:
    """Finite-sample smoke test of the released coordinate's density ratio.

    Histograms one coordinate of the released weights over `trials` runs per
    database on shared bin edges and reports the largest |log count ratio|
    over bins holding at least 20 samples from each side. Passing means the
    statistic stays within beta plus the heuristic slack
    3 sqrt(2 / min bin count). This can expose a broken mechanism; it cannot
    certify privacy.
    """
    _require_neighbors(db1, db2)
    if params.mechanism != "finite":
        raise ValueError("privacy ratio audit supports the finite mechanism only")
    if trials < 1 or bins < 2:
        raise ValueError("trials and bins must be positive (bins >= 2)")
    if not 0 <= coordinate_index < db1.dim:
        raise ValueError("coordinate_index out of range")
    if beta <= 0:
        raise ValueError("beta must be positive")

    d = db1.dim
    samples = []
    for which, db in enumerate((db1, db2)):
        w = _linear_weights(db, params.C)
        # solver output is deterministic; only the noise varies across trials
        noise = _mechanisms._draw_noise(
            params.lam, trials * d, child_rng(seed, which)
        ).reshape(trials, d)
        samples.append(w[coordinate_index] + noise[:, coordinate_index])

    lo = min(samples[0].min(), samples[1].min())
    hi = max(samples[0].max(), samples[1].max())
    edges = np.linspace(lo, hi, bins + 1)
    counts1, _ = np.histogram(samples[0], bins=edges)
    counts2, _ = np.histogram(samples[1], bins=edges)
    qualifying = (counts1 >= 20) & (counts2 >= 20)

    kappa = max(
        float(np.max(np.linalg.norm(db1.points, axis=1))),
        float(np.max(np.linalg.norm(db2.points, axis=1))),
    )
    lam_required = 4.0 * params.C * kappa * math.sqrt(d) / (beta * db1.n)
    details = {
        "lambda": params.lam,
        "lambda_required_for_beta": lam_required,
        "beta": beta,
        "bins": bins,
        "coordinate_index": coordinate_index,
        "qualifying_bins": int(qualifying.sum()),
        "smoke_test": True,
    }
    if not np.any(qualifying):
        return AuditReport(
            name="privacy_ratio",
            trials=trials,
            statistic=math.nan,
            bound=beta,
            passed=False,
            seed=seed,
            details={**details, "reason": "no bin holds 20 samples from both sides"},
        )
    ratios = np.abs(
        np.log(counts1[qualifying].astype(float) / counts2[qualifying].astype(float))
    )
    statistic = float(np.max(ratios))
    min_count = int(
        min(counts1[qualifying].min(), counts2[qualifying].min())
    )
    slack = 3.0 * math.sqrt(2.0 / min_count)
    return AuditReport(
        name="privacy_ratio",
        trials=trials,
        statistic=statistic,
        bound=beta,
        passed=statistic <= beta + slack,
        seed=seed,
        details={**details, "slack": slack, "min_bin_count": min_count},
    )


def packing_separation_audit(C: float, n: int, sigma: float) -> AuditReport:
    """Train the exact rbf SVM on every database of the packing family and
    verify the pairwise classifier separation the construction promises.

    The statistic is the minimum over ordered pairs i != j of
    |f_i(x_{i,last}) - f_j(x_{i,last})|; it must reach C/(2n) up to solver
    tolerance. Deterministic: no seed is consumed.
    """
    family = rbf_packing_family(C, n, sigma)
    kernel = rbf_kernel(sigma)
    models = [solve_svm_dual(db, kernel, C) for db in family.databases]
    last_alphas = [float(m.alphas[-1]) for m in models]

    N = family.params["N"]
    worst = math.inf
    for i, model_i in enumerate(models):
        probe = family.databases[i].points[-1]
        f_ii = float(decision_values(model_i, probe[None, :])[0])
        for j, model_j in enumerate(models):
            if i == j:
                continue
            f_ji = float(decision_values(model_j, probe[None, :])[0])
            worst = min(worst, abs(f_ii - f_ji))
    refined = (
        1.0 - math.exp(-(2.0 / sigma**2) * math.sin(math.pi / N) ** 2)
    ) * C / n
    bound = C / (2.0 * n)
    tolerance = 1e-6
    return AuditReport(
        name="rbf_packing_separation",
        trials=N * (N - 1) // 2,
        statistic=worst,
        bound=bound,
        passed=worst >= bound - tolerance,
        seed=0,
        comparison=">=",
        details={
            "N": N,
            "sigma": sigma,
            "C": C,
            "n": n,
            "deterministic": True,
            "tolerance": tolerance,
            "refined_pair_bound": refined,
            "alpha_last_min": min(last_alphas),
            "alpha_last_max": max(last_alphas),
            "expected_alpha_last": C / n,
        },
    )
