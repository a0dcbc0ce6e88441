"""Built-in acceptance checks for the whole package.

Each criterion reproduces one quantitative prediction end to end and
reports uniform result rows (estimate, interval, reference, pass flag).
``scale`` shrinks ensemble sizes for smoke and determinism runs;
tolerances are pinned and never scale.  All randomness derives from the
master seed, so outputs are byte-identical for a fixed (seed, scale),
any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .charge import (
    DetectorParams,
    total_success_probability,
    uncollapse_success_probability,
    waiting_time_cdf,
)
from .evolving import (
    execute_plan as execute_reversal_plan,
    plan_execution_ensemble,
    plan_from_kraus,
    plan_success_probability,
    success_bound,
    two_step_ensemble,
)
from .linalg import max_abs
from .measurement import (
    KrausOperator,
    PriorEnsemble,
    QuantumState,
    bayes_update,
    build_uncollapse,
    joint_success_probability,
    measure_and_uncollapse,
    outcome_probability,
    pair_update,
    polar_decompose,
    random_density_matrix,
    random_pure_state,
    success_probability_bound,
)
from .multiqubit import build_plan, execute_plan, stepwise_probabilities
from .multiqubit import success_probability as multiqubit_success_probability
from .phase import (
    PhaseMeasurementParams,
    null_kraus,
    null_update,
    pi_pulse,
    protocol_ensemble,
    success_probability as phase_success_probability,
)
from .stats import bernoulli_estimate, ks_distance
from .trajectory import (
    NoiseStream,
    TrajectoryConfig,
    sample_total_uncollapse,
    simulate_evolving_pure,
    run_first_passage_ensemble,
    wait_and_stop_ensemble,
)

DEFAULT_SEED = 20260808
_MIX = 0x9E3779B97F4A7C15

# coarse steps are exact for crossing rates (Gaussian marginals + exact
# bridge crossing probability); the finer step below is for waiting times
_RATE_CONFIG = TrajectoryConfig(d_tau=0.05, escape_radius=6.0)
_TIME_CONFIG = TrajectoryConfig(d_tau=0.005, escape_radius=6.0)


def _derive(seed: int, *indices: int) -> int:
    out = seed & 0xFFFFFFFFFFFFFFFF
    for k in indices:
        out = (out * _MIX + k + 1) & 0xFFFFFFFFFFFFFFFF
    return out


def _sized(n: int, scale: float, floor: int) -> int:
    return max(floor, int(round(n * scale)))


@dataclass(frozen=True)
class Row:
    label: str
    value: float
    reference: float
    within: bool
    ci_low: float | None = None
    ci_high: float | None = None

    def as_record(self) -> dict:
        return {
            "label": self.label,
            "value": float(self.value),
            "ci_low": None if self.ci_low is None else float(self.ci_low),
            "ci_high": None if self.ci_high is None else float(self.ci_high),
            "reference": float(self.reference),
            "within": bool(self.within),
        }


@dataclass
class CriterionResult:
    index: int
    name: str
    rows: list[Row] = field(default_factory=list)
    runtime_s: float = 0.0  # console only; never serialized

    @property
    def passed(self) -> bool:
        return all(bool(r.within) for r in self.rows)

    def as_record(self) -> dict:
        return {
            "index": self.index,
            "name": self.name,
            "passed": self.passed,
            "rows": [r.as_record() for r in self.rows],
        }


def _interval_row(label: str, successes: int, trials: int, reference: float) -> Row:
    est = bernoulli_estimate(successes, trials)
    return Row(
        label=label,
        value=est.rate,
        reference=reference,
        within=est.contains(reference),
        ci_low=est.ci_low,
        ci_high=est.ci_high,
    )


def _tolerance_row(label: str, value: float, tolerance: float) -> Row:
    return Row(label=label, value=value, reference=tolerance, within=value <= tolerance)


def _mixed_qubit(p1: float) -> QuantumState:
    return QuantumState(rho=np.diag([p1, 1.0 - p1]).astype(complex))


def _random_invertible_kraus(rng: np.random.Generator, dim: int = 2) -> KrausOperator:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    e = g @ g.conj().T + 0.3 * np.eye(dim)
    e = e / (np.linalg.eigvalsh(e)[-1] * 1.02)
    vals, vecs = np.linalg.eigh(e)
    sqrt_e = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    return KrausOperator(q @ sqrt_e)


def criterion_1(seed: int, scale: float, workers: int) -> CriterionResult:
    """Wait-and-stop success rate on a (population, readout) grid."""
    res = CriterionResult(1, "wait-and-stop success probability grid")
    n = _sized(100_000, scale, 500)
    for i, p1 in enumerate((0.1, 0.5, 0.9)):
        for j, r0 in enumerate((0.5, 1.0, 2.0)):
            state = _mixed_qubit(p1)
            ens = wait_and_stop_ensemble(
                state, r0, n, _RATE_CONFIG, _derive(seed, 1, i * 3 + j), workers=workers
            )
            ref = uncollapse_success_probability(state, r0)
            res.rows.append(_interval_row(f"p1={p1} r0={r0}", ens.successes, ens.n, ref))
    return res


def criterion_2(seed: int, scale: float, workers: int) -> CriterionResult:
    """Waiting-time law at r0 = 1: KS distance and mean."""
    res = CriterionResult(2, "waiting-time distribution")
    r0 = 1.0
    state = _mixed_qubit(0.5)
    target = _sized(100_000, scale, 500)
    n_total = int(math.ceil(target / uncollapse_success_probability(state, r0) * 1.05))
    ens = wait_and_stop_ensemble(
        state, r0, n_total, _TIME_CONFIG, _derive(seed, 2), collect_times=True, workers=workers
    )
    times = ens.waiting_times
    comp = ks_distance(times, lambda t: waiting_time_cdf(t, r0), reference="waiting-time CDF")
    res.rows.append(_tolerance_row("ks_distance", comp.statistic, 0.01))
    mean = float(np.mean(times))
    se = float(np.std(times, ddof=1) / math.sqrt(times.size))
    res.rows.append(
        Row(
            label="mean_waiting_time",
            value=mean,
            reference=abs(r0),
            within=abs(mean - abs(r0)) <= 3.0 * se,
            ci_low=mean - 3.0 * se,
            ci_high=mean + 3.0 * se,
        )
    )
    return res


def criterion_3(seed: int, scale: float, workers: int) -> CriterionResult:
    """Total reversibility law 1 - erf(sqrt(t/2T_M)), state independent."""
    res = CriterionResult(3, "total reversibility erf law")
    n = _sized(100_000, scale, 500)
    populations = (0.2, 0.5, 0.8)
    for i, tau in enumerate((0.5, 1.0, 2.0, 4.0)):
        ref = float(total_success_probability(tau))
        estimates = []
        for j, p1 in enumerate(populations):
            hits = sample_total_uncollapse(
                _mixed_qubit(p1), tau, n, _derive(seed, 3, i * 10 + j), workers=workers
            )
            estimates.append(hits / n)
            res.rows.append(_interval_row(f"tau={tau} p1={p1}", hits, n, ref))
        for a in range(len(estimates)):
            for b in range(a + 1, len(estimates)):
                pa, pb = estimates[a], estimates[b]
                se = math.sqrt(
                    pa * (1 - pa) / n + pb * (1 - pb) / n
                )
                res.rows.append(
                    Row(
                        label=f"tau={tau} pair {populations[a]}/{populations[b]}",
                        value=abs(pa - pb),
                        reference=3.0 * se,
                        within=abs(pa - pb) <= 3.0 * se + 1e-15,
                    )
                )
    return res


def criterion_4(seed: int, scale: float, workers: int) -> CriterionResult:
    """Exact restoration: abstract operator algebra and simulated records."""
    res = CriterionResult(4, "exact state restoration")
    rng = np.random.default_rng(_derive(seed, 4))
    n_states = _sized(200, scale, 20)
    worst = 0.0
    for k in range(n_states):
        state = random_pure_state(2, rng) if k % 2 == 0 else random_density_matrix(2, rng)
        op = _random_invertible_kraus(rng)
        restored, _, _ = measure_and_uncollapse(op, state)
        worst = max(worst, max_abs(restored.rho - state.rho))
    res.rows.append(_tolerance_row("abstract_max_error", worst, 1e-9))

    params = DetectorParams(i1=1.1, i2=0.9, s_i=0.04)
    n_runs = _sized(200, scale, 10)
    worst_sim = 0.0
    unfinished = 0
    for k in range(n_runs):
        psi_in = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi_in /= np.linalg.norm(psi_in)
        cfg = TrajectoryConfig(
            d_tau=1e-3,
            epsilon=float(rng.uniform(-2.0, 2.0)),
            coupling=float(rng.uniform(-2.0, 2.0)),
        )
        sim = simulate_evolving_pure(psi_in, 0.5, params, cfg, NoiseStream(_derive(seed, 4, k), 0))
        plan = plan_from_kraus(sim.extraction, choice=1 + k % 2)
        psi_m = sim.psi / np.linalg.norm(sim.psi)
        walk_cfg = TrajectoryConfig(d_tau=1e-3, escape_radius=7.0)
        for attempt in range(500):
            ex = _execute_once(plan, psi_m, walk_cfg, _derive(seed, 4, k, attempt))
            if ex is not None:
                worst_sim = max(worst_sim, max_abs(np.outer(ex, ex.conj()) - np.outer(psi_in, psi_in.conj())))
                break
        else:
            unfinished += 1
    res.rows.append(_tolerance_row("simulated_max_error", worst_sim, 1e-6))
    res.rows.append(_tolerance_row("simulated_unfinished_runs", float(unfinished), 0.0))
    return res


def _execute_once(plan, psi_m, cfg, seed):
    out = execute_reversal_plan(plan, psi_m, cfg, NoiseStream(seed, 0))
    return out.restored if out.success else None


def criterion_5(seed: int, scale: float, workers: int) -> CriterionResult:
    """Zero information: a collapse-uncollapse pair leaves any prior fixed."""
    res = CriterionResult(5, "zero-information property")
    rng = np.random.default_rng(_derive(seed, 5))
    n_cases = _sized(50, scale, 10)
    worst_prior = 0.0
    worst_joint = 0.0
    for _ in range(n_cases):
        k = int(rng.integers(2, 5))
        states = tuple(random_pure_state(2, rng) if rng.random() < 0.5 else random_density_matrix(2, rng) for _ in range(k))
        w = rng.random(k) + 0.05
        prior = PriorEnsemble(states=states, weights=w / w.sum())
        op = _random_invertible_kraus(rng)
        updated = pair_update(prior, op)
        worst_prior = max(worst_prior, float(np.max(np.abs(updated.weights - prior.weights))))
        p_min = joint_success_probability(op)
        for _ in range(10):
            state = random_density_matrix(2, rng)
            joint = outcome_probability(op, state) * success_probability_bound(op, state)
            worst_joint = max(worst_joint, abs(joint - p_min))
    res.rows.append(_tolerance_row("prior_restoration_error", worst_prior, 1e-12))
    res.rows.append(_tolerance_row("joint_state_independence", worst_joint, 1e-12))
    return res


def criterion_6(seed: int, scale: float, workers: int) -> CriterionResult:
    """Phase-qubit null-result reversal: algebra, Monte Carlo, process map."""
    res = CriterionResult(6, "phase-qubit protocol")
    kets = [
        np.array([1.0, 1.0]) / math.sqrt(2.0),
        np.array([1.0, -1.0j]) / math.sqrt(2.0),
        np.array([1.0, 0.0]),
        np.array([0.0, 1.0]),
    ]
    states = [QuantumState.from_ket(k) for k in kets]
    worst_alg = 0.0
    n = _sized(100_000, scale, 2000)
    mc_rows = []
    for i in range(1, 10):
        p_t = i / 10.0
        params = PhaseMeasurementParams(p_t=p_t, phi=0.7)
        for j, state in enumerate(states):
            ref = phase_success_probability(state, params)
            bound = success_probability_bound(null_kraus(params), state)
            worst_alg = max(worst_alg, abs(ref - bound))
            if j == i % 4:  # one Monte Carlo column per strength
                nulls, successes = protocol_ensemble(state, params, n, _derive(seed, 6, i))
                mc_rows.append(_interval_row(f"mc p_t={p_t} state={j}", successes, nulls, ref))
    res.rows.append(_tolerance_row("grid_algebraic_error", worst_alg, 1e-12))
    res.rows.extend(mc_rows)

    params = PhaseMeasurementParams(p_t=0.55, phi=1.1)
    pulse = pi_pulse()
    worst_map = 0.0
    for state in states:
        after = null_update(state, params)
        flipped = pulse @ after.rho @ pulse.conj().T
        flipped = QuantumState(rho=0.5 * (flipped + flipped.conj().T), pure=state.pure)
        second = null_update(flipped, params)
        restored = pulse @ second.rho @ pulse.conj().T
        worst_map = max(worst_map, max_abs(restored - state.rho))
    res.rows.append(_tolerance_row("process_identity_error", worst_map, 1e-10))
    return res


def criterion_7(seed: int, scale: float, workers: int) -> CriterionResult:
    """Evolving-qubit reversal is optimal; the two-readout variant is not."""
    res = CriterionResult(7, "evolving-qubit optimality")
    rng = np.random.default_rng(_derive(seed, 7))
    params = DetectorParams(i1=1.1, i2=0.9, s_i=0.04)
    n_ops = _sized(10, scale, 3)
    n_runs = _sized(10_000, scale, 500)
    walk_cfg = TrajectoryConfig(d_tau=0.02, escape_radius=6.0)
    for k in range(n_ops):
        psi_in = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi_in /= np.linalg.norm(psi_in)
        cfg = TrajectoryConfig(
            d_tau=1e-3,
            epsilon=float(rng.uniform(-2.0, 2.0)),
            coupling=float(rng.uniform(0.3, 2.0)),
        )
        sim = simulate_evolving_pure(psi_in, 0.6, params, cfg, NoiseStream(_derive(seed, 7, k), 0))
        ext = sim.extraction
        plan = plan_from_kraus(ext, choice=1)
        m = ext.matrix

        lam_state = np.linalg.eigh(m.conj().T @ m).eigenvectors[:, 0]
        post = m @ lam_state
        post /= np.linalg.norm(post)
        hits = plan_execution_ensemble(
            plan, post, n_runs, walk_cfg, _derive(seed, 7, k, 1), workers=workers
        )
        res.rows.append(_interval_row(f"op{k} eigenstate", hits, n_runs, 1.0))

        st_in = QuantumState.from_ket(psi_in)
        psi_m = sim.psi / np.linalg.norm(sim.psi)
        bound = success_bound(ext, st_in)
        res.rows.append(
            _tolerance_row(
                f"op{k} plan-vs-bound", abs(plan_success_probability(plan, psi_m) - bound), 1e-10
            )
        )
        hits_r = plan_execution_ensemble(
            plan, psi_m, n_runs, walk_cfg, _derive(seed, 7, k, 2), workers=workers
        )
        res.rows.append(_interval_row(f"op{k} random state", hits_r, n_runs, bound))

        post_lam = m @ lam_state
        post_lam /= np.linalg.norm(post_lam)
        hits_two = two_step_ensemble(
            ext, post_lam, 1.7, n_runs, walk_cfg, _derive(seed, 7, k, 3), workers=workers
        )
        est = bernoulli_estimate(hits_two, n_runs)
        res.rows.append(
            Row(
                label=f"op{k} two-step below bound",
                value=est.rate,
                reference=1.0,
                within=est.ci_high < 1.0,
                ci_low=est.ci_low,
                ci_high=est.ci_high,
            )
        )
    return res


def criterion_8(seed: int, scale: float, workers: int) -> CriterionResult:
    """Multiqubit step sequence: success law, dual formulas, restoration."""
    res = CriterionResult(8, "multiqubit reversal")
    rng = np.random.default_rng(_derive(seed, 8))
    n_runs = _sized(10_000, scale, 500)
    for n_qubits in (2, 3):
        dim = 2**n_qubits
        op = _random_invertible_kraus(rng, dim)
        plan = build_plan(op, gamma=1.0)
        psi_in = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        psi_in /= np.linalg.norm(psi_in)
        psi_m = op.matrix @ psi_in
        psi_m /= np.linalg.norm(psi_m)
        u_m = polar_decompose(op).unitary
        psi_t = u_m.conj().T @ psi_m

        trace_form, normalized_form = stepwise_probabilities(plan, psi_t)
        res.rows.append(
            _tolerance_row(
                f"N={n_qubits} stepwise agreement",
                float(np.max(np.abs(trace_form - normalized_form))),
                1e-12,
            )
        )
        ref = multiqubit_success_probability(plan, psi_t)
        res.rows.append(
            _tolerance_row(
                f"N={n_qubits} product-vs-sum", abs(float(np.prod(trace_form)) - ref), 1e-12
            )
        )
        hits = 0
        worst_restore = None
        gen = NoiseStream(_derive(seed, 8, n_qubits), 0).generator()
        for _ in range(n_runs):
            out = execute_plan(plan, psi_t, gen)
            if out.success:
                hits += 1
                if worst_restore is None:
                    worst_restore = max_abs(
                        np.outer(out.restored, out.restored.conj())
                        - np.outer(psi_in, psi_in.conj())
                    )
        res.rows.append(_interval_row(f"N={n_qubits} success rate", hits, n_runs, ref))
        res.rows.append(
            _tolerance_row(
                f"N={n_qubits} restored error",
                worst_restore if worst_restore is not None else math.inf,
                1e-9,
            )
        )
    return res


def brute_force_crossing(
    r0: float, drift: float, n_walkers: int, d_tau: float, seed: int,
    escape: float = 4.5, tau_max: float = 12.0,
) -> int:
    """Plain discrete random walk, independent of the trajectory engine.

    No bridge test: crossings are endpoint sign changes only, so the
    estimate carries the usual O(sqrt(d_tau)) barrier shift; at
    d_tau = 1e-4 that shift (~0.0016 for r0 = 1) sits well inside the
    3-sigma band of 1e5 walkers.  SFC64 noise keeps it decoupled from the
    engine's Philox streams.
    """
    rng = np.random.Generator(np.random.SFC64(seed))
    sqrt_dt = np.float32(math.sqrt(d_tau))
    drift_dt = np.float32(drift * d_tau)
    x = np.full(n_walkers, r0, dtype=np.float32)
    crossed = 0
    for _ in range(int(tau_max / d_tau)):
        if x.size == 0:
            break
        noise = rng.standard_normal(x.size, dtype=np.float32)
        noise *= sqrt_dt
        x += drift_dt
        x += noise
        hit = x <= 0.0
        crossed += int(np.count_nonzero(hit))
        keep = ~hit
        esc = keep & (x >= escape)
        if esc.any():
            keep &= ~esc
        x = x[keep]
    return crossed


def criterion_9(seed: int, scale: float, workers: int) -> CriterionResult:
    """Brute-force walk vs analytic crossing law vs trajectory engine."""
    res = CriterionResult(9, "first-passage oracle equivalence")
    r0 = 1.0
    ref = math.exp(-2.0 * r0)
    n = _sized(100_000, scale, 2_000)
    crossed_oracle = brute_force_crossing(r0, +1.0, n, 1e-4, _derive(seed, 9, 1))
    res.rows.append(_interval_row("brute-force walk", crossed_oracle, n, ref))
    ens = run_first_passage_ensemble(
        r0, +1.0, n, _RATE_CONFIG, _derive(seed, 9, 2), workers=workers
    )
    res.rows.append(_interval_row("trajectory engine", ens.crossed, ens.n, ref))
    pa, pb = crossed_oracle / n, ens.crossed / n
    se = math.sqrt(pa * (1 - pa) / n + pb * (1 - pb) / n)
    res.rows.append(
        Row(
            label="oracle-vs-engine",
            value=abs(pa - pb),
            reference=3.0 * se,
            within=abs(pa - pb) <= 3.0 * se + 1e-15,
        )
    )
    return res


_CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_criteria(
    seed: int = DEFAULT_SEED,
    scale: float = 1.0,
    workers: int = 1,
    indices: tuple[int, ...] | None = None,
) -> list[CriterionResult]:
    """Run statistical criteria 1-9 (determinism is criterion 10, below)."""
    chosen = sorted(indices) if indices else sorted(_CRITERIA)
    results = []
    for idx in chosen:
        t0 = time.perf_counter()
        out = _CRITERIA[idx](seed, scale, workers)
        out.runtime_s = time.perf_counter() - t0
        results.append(out)
    return results


def render_acceptance_json(results: list[CriterionResult], seed: int, scale: float) -> str:
    payload = {
        "version": __version__,
        "seed": seed,
        "scale": scale,
        "passed": all(r.passed for r in results),
        "criteria": [r.as_record() for r in results],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_acceptance_csv(results: list[CriterionResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["criterion", "name", "label", "value", "ci_low", "ci_high", "reference", "within"])
    for r in results:
        for row in r.rows:
            writer.writerow(
                [
                    r.index,
                    r.name,
                    row.label,
                    repr(float(row.value)),
                    "" if row.ci_low is None else repr(float(row.ci_low)),
                    "" if row.ci_high is None else repr(float(row.ci_high)),
                    repr(float(row.reference)),
                    bool(row.within),
                ]
            )
    return buf.getvalue()


def criterion_10(seed: int, scale: float, workers: int) -> CriterionResult:
    """Determinism: identical selftest bytes for different worker counts."""
    res = CriterionResult(10, "selftest determinism across worker counts")
    t0 = time.perf_counter()
    inner_scale = min(scale, 0.02)
    indices = (1, 2, 3, 5, 9)
    first = run_criteria(seed=seed, scale=inner_scale, workers=1, indices=indices)
    second = run_criteria(seed=seed, scale=inner_scale, workers=max(2, workers), indices=indices)
    json_match = render_acceptance_json(first, seed, inner_scale) == render_acceptance_json(
        second, seed, inner_scale
    )
    csv_match = render_acceptance_csv(first) == render_acceptance_csv(second)
    res.rows.append(
        Row(label="json bytes identical", value=float(json_match), reference=1.0, within=json_match)
    )
    res.rows.append(
        Row(label="csv bytes identical", value=float(csv_match), reference=1.0, within=csv_match)
    )
    res.runtime_s = time.perf_counter() - t0
    return res


def run_acceptance(
    seed: int = DEFAULT_SEED,
    scale: float = 1.0,
    workers: int = 1,
    indices: tuple[int, ...] | None = None,
) -> list[CriterionResult]:
    """Run the full acceptance suite (criteria 1-10)."""
    wanted = sorted(indices) if indices else list(range(1, 11))
    results = run_criteria(seed, scale, workers, tuple(i for i in wanted if i in _CRITERIA))
    if 10 in wanted:
        results.append(criterion_10(seed, scale, workers))
    return results
