"""Monte Carlo verification of the aggregation guarantees.

For a rule, an attack, and an honest estimator N(g, sigma^2 I_d), this
module estimates the quantities bounded by the resilience conditions:

* the inner product <E F, g> against (1 - sin alpha) * ||g||^2, and
* the squared deviation ||E F - g||^2 against eta^2(n, f) * d * sigma^2,
* the moments E||F||^r for r = 2, 3, 4 against combinations of the
  honest moments E||G||^r.

All checks are statistical: point estimates carry standard errors and
the pass/fail booleans apply a three-standard-error slack.  The bounds
themselves concern exact expectations, so a Monte Carlo run can support
or falsify them but never prove them; reports say which way the evidence
points.  Trials accumulate in fixed trial order, so reported estimates
do not depend on any parallel execution schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import AdversaryView, AttackSpec, apply_attack, check_attack_applicable
from .aggregation import RuleSpec, _require_krum_valid, _select, as_vector, eta, resilience_angle
from .errors import InvalidInput
from .streams import SubstreamSource

__all__ = ["ResilienceReport", "check_safety_radius", "estimate_resilience"]

_MOMENT_ORDERS = (2, 3, 4)

# integer partitions of r: candidate products E||G||^{r_1} * ... * E||G||^{r_k}
_PARTITIONS = {
    2: ((2,), (1, 1)),
    3: ((3,), (2, 1), (1, 1, 1)),
    4: ((4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)),
}


@dataclass(eq=False)
class ResilienceReport:
    """Point estimates, bounds, and standard errors from one Monte Carlo run."""

    rule: str
    attack: str
    n: int
    f: int
    d: int
    sigma: float
    grad_norm: float
    trials: int
    eta: float
    sin_alpha: float
    within_guarantee: bool
    empirical_mean_F: np.ndarray
    inner_product: float
    bound_i: float
    condition_i_holds: bool
    mean_dev_sq: float        # ||mean_F - g||^2
    mean_sq_dev: float        # empirical E||F - g||^2
    dev_bound: float          # eta^2 * d * sigma^2
    deviation_bound_holds: bool
    moments: dict[int, float]
    moment_reference: dict[int, float]   # (n - f) * E||G||^r comparators
    condition_ii_holds: bool
    ratio_ceiling: float
    byzantine_selection_rate: float | None
    standard_errors: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        d = {
            "rule": self.rule,
            "attack": self.attack,
            "n": self.n,
            "f": self.f,
            "d": self.d,
            "sigma": self.sigma,
            "grad_norm": self.grad_norm,
            "trials": self.trials,
            "eta": self.eta,
            "sin_alpha": self.sin_alpha,
            "within_guarantee": self.within_guarantee,
            "empirical_mean_F": [float(v) for v in self.empirical_mean_F],
            "inner_product": self.inner_product,
            "bound_i": self.bound_i,
            "condition_i_holds": self.condition_i_holds,
            "mean_dev_sq": self.mean_dev_sq,
            "mean_sq_dev": self.mean_sq_dev,
            "dev_bound": self.dev_bound,
            "deviation_bound_holds": self.deviation_bound_holds,
            "condition_ii_holds": self.condition_ii_holds,
            "ratio_ceiling": self.ratio_ceiling,
            "byzantine_selection_rate": self.byzantine_selection_rate,
        }
        for r in _MOMENT_ORDERS:
            d[f"moment_{r}"] = self.moments[r]
            d[f"moment_reference_{r}"] = self.moment_reference[r]
        for name, se in sorted(self.standard_errors.items()):
            d[f"se_{name}"] = se
        return d

    CSV_COLUMNS = (
        "rule", "attack", "n", "f", "d", "sigma", "grad_norm", "trials",
        "eta", "sin_alpha", "within_guarantee",
        "inner_product", "se_inner_product", "bound_i", "condition_i_holds",
        "mean_dev_sq", "se_mean_dev_sq", "mean_sq_dev", "se_mean_sq_dev",
        "dev_bound", "deviation_bound_holds",
        "moment_2", "moment_reference_2", "moment_3", "moment_reference_3",
        "moment_4", "moment_reference_4", "condition_ii_holds",
        "byzantine_selection_rate",
    )

    def to_csv_row(self) -> str:
        flat = self.to_json_dict()

        def fmt(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            if value is None:
                return ""
            if isinstance(value, float):
                return format(value, ".17g")
            return str(value)

        return ",".join(fmt(flat[c]) for c in self.CSV_COLUMNS)


def _sample_se(s1: float, s2: float, trials: int) -> float:
    var = max(0.0, (s2 - s1 * s1 / trials) / (trials - 1))
    return math.sqrt(var / trials)


def estimate_resilience(rule: RuleSpec, n: int, f: int, d: int, g, sigma: float,
                        attack: AttackSpec, trials: int, master_seed: int,
                        ratio_ceiling: float | None = None) -> ResilienceReport:
    """Monte Carlo resilience estimate for one (rule, attack) pairing.

    Per trial, the n - f honest workers draw N(g, sigma^2 I_d), the
    Byzantine workers occupy the last f ids and mount `attack`, and the
    rule aggregates all n proposals.  Requires 2f + 2 < n (the reference
    angle comes from eta(n, f)) and a non-zero g.
    """
    g = as_vector(g)
    if g.size != d:
        raise InvalidInput(f"g has d={g.size}, expected {d}")
    grad_norm = float(np.linalg.norm(g))
    if grad_norm == 0.0:
        raise InvalidInput("g must be non-zero: condition (i) compares against ||g||^2 > 0")
    if sigma < 0 or not math.isfinite(sigma):
        raise InvalidInput(f"sigma must be a finite non-negative real: got {sigma}")
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 2:
        raise InvalidInput(f"trials must be an integer >= 2: got {trials!r}")
    if not 0 <= f < n:
        raise InvalidInput(f"f must satisfy 0 <= f < n: got n={n}, f={f}")
    rule.check_preconditions(n, f)
    check_attack_applicable(attack, f)
    angle = resilience_angle(n, f, d, sigma, grad_norm)
    eta_val = eta(n, f)
    ceiling = float(n) if ratio_ceiling is None else float(ratio_ceiling)

    n_honest = n - f
    honest_ids = tuple(range(1, n_honest + 1))
    byz_ids = tuple(range(n_honest + 1, n + 1))
    byz_set = set(byz_ids)
    selection_rule = rule.kind in ("krum", "multi_krum", "medoid")
    streams = SubstreamSource(master_seed)

    sum_F = np.zeros(d)
    sumsq_F = np.zeros(d)
    s1_inner = s2_inner = 0.0
    s1_dev = s2_dev = 0.0
    mom1 = {r: 0.0 for r in _MOMENT_ORDERS}
    mom2 = {r: 0.0 for r in _MOMENT_ORDERS}
    hmom1 = {r: 0.0 for r in (1, 2, 3, 4)}
    byz_hits = 0

    for trial in range(trials):
        rng = streams.generator(0, trial)
        H = g + sigma * rng.standard_normal((n_honest, d))
        if f:
            view = AdversaryView(round=trial, parameter_vector=np.zeros(d),
                                 correct_vectors=tuple(zip(honest_ids, H)),
                                 true_gradient=g, rule_descriptor=rule)
            B = apply_attack(attack, view, byz_ids, rng=rng)
            X = np.vstack([H, np.stack(B)])
        else:
            X = H
        sel = _select(rule, X, f, with_scores=False)
        F = sel.output
        sum_F += F
        sumsq_F += F * F
        ip = float(F @ g)
        s1_inner += ip
        s2_inner += ip * ip
        diff = F - g
        dev = float(diff @ diff)
        s1_dev += dev
        s2_dev += dev * dev
        norm_F = math.sqrt(float(F @ F))
        for r in _MOMENT_ORDERS:
            p = norm_F ** r
            mom1[r] += p
            mom2[r] += p * p
        hnorm = np.sqrt((H * H).sum(axis=1))
        acc = hnorm.copy()
        for r in (1, 2, 3, 4):
            hmom1[r] += float(acc.sum())
            acc *= hnorm
        if selection_rule and byz_set.intersection(sel.selected_ids):
            byz_hits += 1

    mean_F = sum_F / trials
    inner = float(mean_F @ g)
    se_inner = _sample_se(s1_inner, s2_inner, trials)
    bound_i = (1.0 - angle.sin_alpha) * grad_norm * grad_norm
    condition_i = inner - 3.0 * se_inner >= bound_i

    mean_sq_dev = s1_dev / trials
    se_mean_sq_dev = _sample_se(s1_dev, s2_dev, trials)
    dev = mean_F - g
    mean_dev_sq = float(dev @ dev)
    var_F = np.maximum(0.0, (sumsq_F - sum_F * sum_F / trials) / (trials - 1))
    # delta method: Var(||m - g||^2) ~ 4 * sum_k (m - g)_k^2 Var(m_k)
    se_mean_dev_sq = 2.0 * math.sqrt(float((dev * dev * var_F).sum() / trials))
    dev_bound = eta_val * eta_val * d * sigma * sigma
    deviation_holds = mean_dev_sq + 3.0 * se_mean_dev_sq <= dev_bound

    moments = {r: mom1[r] / trials for r in _MOMENT_ORDERS}
    honest_samples = n_honest * trials
    hmean = {r: hmom1[r] / honest_samples for r in (1, 2, 3, 4)}
    reference = {r: n_honest * hmean[r] for r in _MOMENT_ORDERS}
    condition_ii = True
    for r in _MOMENT_ORDERS:
        best_product = max(math.prod(hmean[k] for k in part) for part in _PARTITIONS[r])
        if not (math.isfinite(moments[r]) and moments[r] <= ceiling * best_product):
            condition_ii = False

    ses = {
        "inner_product": se_inner,
        "mean_sq_dev": se_mean_sq_dev,
        "mean_dev_sq": se_mean_dev_sq,
    }
    for r in _MOMENT_ORDERS:
        ses[f"moment_{r}"] = _sample_se(mom1[r], mom2[r], trials)

    return ResilienceReport(
        rule=rule.describe(), attack=attack.variant, n=n, f=f, d=d, sigma=sigma,
        grad_norm=grad_norm, trials=trials, eta=eta_val, sin_alpha=angle.sin_alpha,
        within_guarantee=angle.within_guarantee, empirical_mean_F=mean_F,
        inner_product=inner, bound_i=bound_i, condition_i_holds=condition_i,
        mean_dev_sq=mean_dev_sq, mean_sq_dev=mean_sq_dev, dev_bound=dev_bound,
        deviation_bound_holds=deviation_holds, moments=moments,
        moment_reference=reference, condition_ii_holds=condition_ii,
        ratio_ceiling=ceiling,
        byzantine_selection_rate=(byz_hits / trials if selection_rule and f else
                                  (0.0 if selection_rule else None)),
        standard_errors=ses,
    )


def check_safety_radius(delta: float, R: float, n: int, f: int) -> bool:
    """Sufficient separation for Krum to provably select an honest worker.

    If all honest vectors lie within pairwise distance delta and every
    Byzantine vector is at distance > R from every honest one, then an
    honest score is at most (n-f-2) * delta^2 while a Byzantine score is
    at least (n-2f-1) * R^2 (a Byzantine neighbour list holds at most
    f - 1 other Byzantines).  The check returns True when
    R^2 * (n-2f-1) > delta^2 * (n-f-2), which makes every Byzantine
    score strictly larger.  Sufficient, not necessary.
    """
    _require_krum_valid(n, f)
    if delta < 0 or R < 0 or not (math.isfinite(delta) and math.isfinite(R)):
        raise InvalidInput(f"delta and R must be finite non-negative reals: got {delta}, {R}")
    return R * R * (n - 2 * f - 1) > delta * delta * (n - f - 2)
