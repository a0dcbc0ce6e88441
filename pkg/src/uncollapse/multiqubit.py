"""Undoing an arbitrary measurement of N entangled charge qubits.

The reversal operator sqrt(min_j p_j) E^{-1/2} is diagonal in the
eigenbasis of E = M†M, so it factors into 2^N single-axis shrink
operators.  Each factor is realized physically by rotating the targeted
eigenvector onto the all-ones register state, watching a detector that
can only fire there for a computed duration, and rotating back; seeing
no tunneling in any of the 2^N steps restores the input state exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import basis_to_all_ones, herm_eig, max_abs
from .measurement import (
    KrausOperator,
    QuantumState,
    UncollapseImpossibleError,
)
from .trajectory import _as_generator

PROJECTIVE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class StepPlan:
    """Ordered rotate-measure-rotate steps realizing the reversal operator.

    Step i rotates eigenvector i onto the all-ones state, measures for
    duration t_i = -(2/gamma) ln(shrink_i), and rotates back.  The step
    with the smallest eigenvalue has zero duration.
    """

    unitaries: tuple[np.ndarray, ...]
    durations: np.ndarray
    shrink_factors: np.ndarray
    gamma: float
    basis: np.ndarray  # eigenbasis columns of E, eigenvalues ascending

    def __post_init__(self):
        t = np.asarray(self.durations, dtype=float)
        s = np.asarray(self.shrink_factors, dtype=float)
        if t.size != s.size or len(self.unitaries) != t.size:
            raise ValueError("one unitary, duration and shrink factor per step")
        if np.any(t < 0.0):
            raise ValueError("durations must be nonnegative")
        if np.any((s <= 0.0) | (s > 1.0 + 1e-12)):
            raise ValueError("shrink factors must lie in (0, 1]")
        if max_abs(t - (-2.0 / self.gamma) * np.log(s)) > 1e-10 * max(1.0, float(t.max())):
            raise ValueError("durations inconsistent with shrink factors")
        object.__setattr__(self, "durations", t)
        object.__setattr__(self, "shrink_factors", s)

    @property
    def dim(self) -> int:
        return self.durations.size


def build_plan(op: KrausOperator | np.ndarray, gamma: float) -> StepPlan:
    """Plan the 2^N-step reversal of a measurement operator.

    Diagonalizes E = M†M; each step's shrink factor is
    sqrt(min_j p_j / p_i) and its duration follows from the detector rate.
    Projective operators cannot be undone.
    """
    if gamma <= 0.0:
        raise ValueError("detector rate gamma must be positive")
    matrix = op.matrix if isinstance(op, KrausOperator) else np.asarray(op, dtype=complex)
    element = matrix.conj().T @ matrix
    eig = herm_eig(0.5 * (element + element.conj().T))
    p = eig.values
    if p[0] <= PROJECTIVE_THRESHOLD:
        raise UncollapseImpossibleError("measurement is projective within tolerance")
    dim = p.size
    shrink = np.sqrt(p[0] / p)
    shrink = np.minimum(shrink, 1.0)
    durations = np.maximum((-2.0 / gamma) * np.log(shrink), 0.0)
    basis_dagger = eig.vectors.conj().T
    unitaries = tuple(
        basis_to_all_ones(i, dim) @ basis_dagger for i in range(dim)
    )
    return StepPlan(
        unitaries=unitaries,
        durations=durations,
        shrink_factors=shrink,
        gamma=gamma,
        basis=eig.vectors,
    )


def null_step_kraus(duration: float, gamma: float, dim: int) -> np.ndarray:
    """No-tunneling operator of one detector window.

    Shrinks the all-ones axis (last index) by exp(-gamma t / 2) and leaves
    every perpendicular axis untouched.
    """
    if duration < 0.0:
        raise ValueError("duration must be nonnegative")
    d = np.ones(dim, dtype=complex)
    d[-1] = math.exp(-0.5 * gamma * duration)
    return np.diag(d)


def uncollapse_operator(plan: StepPlan) -> np.ndarray:
    """Product of all rotate-measure-rotate factors: the plan's net operator."""
    dim = plan.dim
    total = np.eye(dim, dtype=complex)
    for i in range(dim):
        u = plan.unitaries[i]
        step = u.conj().T @ null_step_kraus(plan.durations[i], plan.gamma, dim) @ u
        total = step @ total
    return total


def _diag_populations(plan: StepPlan, state) -> np.ndarray:
    """Populations of the state in the plan's eigenbasis."""
    if isinstance(state, QuantumState):
        d = np.diag(plan.basis.conj().T @ state.rho @ plan.basis).real
    else:
        psi = np.asarray(state, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        d = np.abs(plan.basis.conj().T @ psi) ** 2
    return np.clip(d, 0.0, None)


def success_probability(plan: StepPlan, state) -> float:
    """Probability that no step tunnels: sum_i rho_ii exp(-gamma t_i).

    ``state`` is the state entering the plan (after the unitary part of
    the measurement has been reversed), as a density matrix or vector.
    """
    d = _diag_populations(plan, state)
    return float(np.sum(d * plan.shrink_factors**2))


def stepwise_probabilities(plan: StepPlan, state) -> tuple[np.ndarray, np.ndarray]:
    """Per-step null-result probabilities, computed two independent ways.

    The first form is the ratio of unnormalized traces after and before
    each step; the second is 1 - (tunneling strength) * (population of
    the targeted axis in the renormalized running state).  Their
    element-wise agreement proves the product-equals-sum identity for the
    total success probability.
    """
    d = _diag_populations(plan, state)
    f = plan.shrink_factors**2
    dim = plan.dim

    shrunk_prefix = np.concatenate([[0.0], np.cumsum(d * f)])
    raw_suffix = np.concatenate([np.cumsum((d)[::-1])[::-1], [0.0]])
    trace_ratio = np.empty(dim)
    for i in range(dim):
        num = shrunk_prefix[i + 1] + raw_suffix[i + 1]
        den = shrunk_prefix[i] + raw_suffix[i]
        trace_ratio[i] = num / den

    normalized_form = np.empty(dim)
    w = d.copy()
    for i in range(dim):
        p = 1.0 - (1.0 - f[i]) * w[i]
        normalized_form[i] = p
        w[i] *= f[i]
        w /= p
    return trace_ratio, normalized_form


@dataclass(frozen=True)
class MultiqubitExecution:
    success: bool
    restored: QuantumState | np.ndarray | None
    failed_step: int | None


def execute_plan(plan: StepPlan, state, stream) -> MultiqubitExecution:
    """Run the 2^N rotate-measure-rotate steps on a state.

    Tunneling at any step destroys the register (failure); an all-null
    run returns the restored state, matching the input of the original
    measurement exactly.  Accepts a density matrix or a (possibly
    entangled) state vector.
    """
    gen = _as_generator(stream)
    dim = plan.dim
    vector_input = not isinstance(state, QuantumState)
    if vector_input:
        cur = np.asarray(state, dtype=complex).reshape(-1).copy()
        cur /= np.linalg.norm(cur)
    else:
        cur = state.rho.copy()
    if cur.shape[0] != dim:
        raise ValueError("state dimension does not match the plan")

    for i in range(dim):
        u = plan.unitaries[i]
        keep = plan.shrink_factors[i] ** 2
        if vector_input:
            y = u @ cur
            p_tunnel = (1.0 - keep) * abs(y[-1]) ** 2
            if gen.random() < p_tunnel:
                return MultiqubitExecution(success=False, restored=None, failed_step=i)
            y[-1] *= plan.shrink_factors[i]
            y /= np.linalg.norm(y)
            cur = u.conj().T @ y
        else:
            y = u @ cur @ u.conj().T
            p_tunnel = (1.0 - keep) * float(y[-1, -1].real)
            if gen.random() < p_tunnel:
                return MultiqubitExecution(success=False, restored=None, failed_step=i)
            y[-1, :] *= plan.shrink_factors[i]
            y[:, -1] *= plan.shrink_factors[i]
            y /= np.trace(y).real
            cur = u.conj().T @ y @ u
    if vector_input:
        return MultiqubitExecution(success=True, restored=cur, failed_step=None)
    cur = 0.5 * (cur + cur.conj().T)
    return MultiqubitExecution(
        success=True, restored=QuantumState(rho=cur), failed_step=None
    )
