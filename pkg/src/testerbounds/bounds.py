"""Uncertainty bounds for outcome combinations of tester scenarios.

For a combination x = (x_1, ..., x_L), one outcome per test, three bounds on
the mixed success probability sum_l r_l p_l(x_l | channel) are computed:

* ``trivial_bound``  t(x) = sum_l r_l max_channel p_l(x_l), each inner maximum
  certified by the channel optimizer;
* ``upper_bound``    d_in * ||sum_l r_l T_l(x_l)||, a closed-form cap that
  needs no optimization;
* ``exact_bound``    the certified maximum of the weighted probability itself.

A combination exhibits an unavoidable trade-off when the exact bound sits
strictly below the trivial one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel_opt import ChannelOptResult, maximize_over_channels
from .linalg import (
    DimensionError,
    HermitianOperator,
    Ket,
    ValidationError,
    eig_hermitian,
    operator_norm,
    partial_trace,
)
from .testers import Channel, Scenario, Tester, channel_to_json

TIGHTNESS_ATOL = 1e-8
TRADEOFF_MARGIN = 1e-8


def _testers_for(scenario: Scenario, testers: Sequence[Tester] | None) -> list[Tester]:
    return list(testers) if testers is not None else scenario.testers()


def _check_combination(scenario: Scenario, combination: Sequence[str]) -> tuple[str, ...]:
    combination = tuple(str(c) for c in combination)
    if len(combination) != len(scenario.tests):
        raise ValidationError(f"combination {combination} must name one outcome per test")
    for label, test in zip(combination, scenario.tests):
        if label not in test.labels:
            raise ValidationError(f"label {label!r} not an outcome of its test")
    return combination


def objective_operator(scenario: Scenario, combination: Sequence[str],
                       testers: Sequence[Tester] | None = None) -> HermitianOperator:
    """Weighted tester-element sum sum_l r_l T_l(x_l) for one combination."""
    combination = _check_combination(scenario, combination)
    testers = _testers_for(scenario, testers)
    total = np.zeros((scenario.d_in * scenario.d_out,) * 2, dtype=complex)
    for weight, tester, label in zip(scenario.weights, testers, combination):
        total += weight * tester.element(label).mat
    return HermitianOperator(total, (scenario.d_in, scenario.d_out))


def trivial_bound(scenario: Scenario, combination: Sequence[str], tol: float = 1e-6,
                  testers: Sequence[Tester] | None = None) -> float:
    """Weighted sum of certified per-test maxima.

    Each inner maximum is reported through its dual certificate, so the
    returned number is always an upper estimate of the true trivial bound,
    off by at most ``tol``.
    """
    combination = _check_combination(scenario, combination)
    testers = _testers_for(scenario, testers)
    total = 0.0
    for weight, tester, label in zip(scenario.weights, testers, combination):
        if weight == 0.0:
            continue
        result = maximize_over_channels(tester.element(label), tol=tol)
        total += weight * result.dual_value
    return total


def upper_bound(scenario: Scenario, combination: Sequence[str],
                testers: Sequence[Tester] | None = None) -> float:
    """d_in times the operator norm of the weighted tester-element sum."""
    objective = objective_operator(scenario, combination, testers)
    return scenario.d_in * operator_norm(objective, require_psd=True)


def exact_bound(scenario: Scenario, combination: Sequence[str], tol: float = 1e-6,
                testers: Sequence[Tester] | None = None) -> ChannelOptResult:
    """Certified maximum of the weighted combination probability over channels."""
    objective = objective_operator(scenario, combination, testers)
    return maximize_over_channels(objective, tol=tol)


def subset_bound(scenario: Scenario, subsets: Sequence[Sequence[str]], tol: float = 1e-6,
                 testers: Sequence[Tester] | None = None) -> ChannelOptResult:
    """Certified maximum of sum_l r_l sum_{x in X_l} p_l(x), one set per test.

    Singleton subsets reproduce ``exact_bound``; full outcome sets give 1.
    """
    if len(subsets) != len(scenario.tests):
        raise ValidationError("one outcome subset per test required")
    testers = _testers_for(scenario, testers)
    total = np.zeros((scenario.d_in * scenario.d_out,) * 2, dtype=complex)
    for weight, tester, test, subset in zip(scenario.weights, testers, scenario.tests, subsets):
        labels = [str(s) for s in subset]
        if len(set(labels)) != len(labels):
            raise ValidationError("subset labels must be unique")
        for label in labels:
            if label not in test.labels:
                raise ValidationError(f"label {label!r} not an outcome of its test")
            total += weight * tester.element(label).mat
    objective = HermitianOperator(total, (scenario.d_in, scenario.d_out))
    return maximize_over_channels(objective, tol=tol)


@dataclass(frozen=True)
class TightnessResult:
    tight: bool
    degenerate: bool
    marginal_residual: float

    def __bool__(self) -> bool:
        return self.tight


def tightness_check(scenario: Scenario, combination: Sequence[str],
                    testers: Sequence[Tester] | None = None,
                    atol: float = TIGHTNESS_ATOL) -> TightnessResult:
    """Check whether the operator-norm bound is provably attained.

    True when some checked top eigenvector of the objective has a maximally
    mixed marginal on the channel input; with a degenerate top eigenvalue all
    eigenvectors of the top eigenspace basis are checked and the degeneracy is
    reported.
    """
    objective = objective_operator(scenario, combination, testers)
    vals, kets = eig_hermitian(objective)
    top = vals[-1]
    members = [k for v, k in zip(vals, kets) if v >= top - atol]
    d_in = scenario.d_in
    best = np.inf
    for ket in members:
        marginal = partial_trace(ket.projector(), keep=[0])
        resid = operator_norm(HermitianOperator(marginal.mat - np.eye(d_in) / d_in, (d_in,)))
        best = min(best, resid)
    return TightnessResult(tight=best <= atol, degenerate=len(members) > 1,
                           marginal_residual=float(best))


def unitary_from_max_entangled(ket: Ket, atol: float = 1e-9) -> np.ndarray:
    """Recover U with |psi> = (I (x) U)|Psi+> from a maximally entangled ket."""
    if len(ket.dims) != 2 or ket.dims[0] != ket.dims[1]:
        raise DimensionError("ket must live on two factors of equal dimension")
    d = ket.dims[0]
    u = np.sqrt(d) * ket.amps.reshape(d, d).T
    resid = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
    if resid > atol:
        raise ValidationError(f"ket is not maximally entangled (residual {resid:.3e})")
    return u


def qubit_meb_optimizer(psi1: Ket, psi2: Ket) -> tuple[np.ndarray, float]:
    """Optimal unitary channel for a pair of maximally entangled qubit kets.

    Returns (U, value) where the channel rho -> U rho U^dag attains the exact
    bound (1/2)(1 + |<psi1|psi2>|) for the two rank-1 tester elements built
    from the kets.  The construction branches on the Hilbert-Schmidt inner
    product of the generating unitaries and is specific to qubits; for larger
    dimensions the combined operator need not be unitary.
    """
    if psi1.dims != (2, 2) or psi2.dims != (2, 2):
        raise DimensionError("optimizer construction requires two-qubit kets")
    u1 = unitary_from_max_entangled(psi1)
    u2 = unitary_from_max_entangled(psi2)
    s = complex(np.trace(u1.conj().T @ u2))
    if abs(s) < 1e-12:
        u = u1
    else:
        u = (u1 + (s.conjugate() / abs(s)) * u2) / np.sqrt(2 + abs(s))
    uni_resid = float(np.max(np.abs(u.conj().T @ u - np.eye(2))))
    if uni_resid > 1e-9:
        raise ValidationError(f"combined operator not unitary (residual {uni_resid:.3e})")

    overlap = abs(psi1.overlap(psi2))
    expected = 0.5 * (1.0 + overlap)
    psi_plus = np.eye(2, dtype=complex).reshape(-1) / np.sqrt(2)
    w = np.kron(np.eye(2), u) @ psi_plus
    p1 = abs(np.vdot(psi1.amps, w)) ** 2
    p2 = abs(np.vdot(psi2.amps, w)) ** 2
    value = 0.5 * (p1 + p2)
    if abs(value - expected) > 1e-9:
        raise ValidationError(f"optimizer misses the closed form by {abs(value - expected):.3e}")
    if abs(s) >= 1e-12:
        phase = psi2.overlap(psi1) / overlap
        target = psi1.amps + phase * psi2.amps
        target = target / np.linalg.norm(target)
    else:
        target = psi1.amps
    if float(np.max(np.abs(w - target))) > 1e-9:
        raise ValidationError("channel ket does not match the top eigenvector form")
    return u, float(value)


def closed_form_state_bound(basis1: Sequence[Ket], basis2: Sequence[Ket],
                            weights: tuple[float, float] = (0.5, 0.5)) -> np.ndarray:
    """Table b[i, j] = (1/2)(1 + |<e_i|f_j>|) for two orthonormal bases."""
    if abs(weights[0] - 0.5) > 1e-12 or abs(weights[1] - 0.5) > 1e-12:
        raise ValidationError("closed form is stated for equal weights (1/2, 1/2)")
    for basis in (basis1, basis2):
        mats = np.stack([k.amps for k in basis])
        gram = mats @ mats.conj().T
        if float(np.max(np.abs(gram - np.eye(len(basis))))) > 1e-9:
            raise ValidationError("basis is not orthonormal")
    table = np.empty((len(basis1), len(basis2)))
    for i, e in enumerate(basis1):
        for j, f in enumerate(basis2):
            table[i, j] = 0.5 * (1.0 + abs(e.overlap(f)))
    return table


def mub_state_bound(d: int) -> float:
    """Equal-weight two-measurement bound for mutually unbiased bases."""
    return 0.5 * (1.0 + 1.0 / np.sqrt(d))


@dataclass(frozen=True)
class BoundReport:
    """All bounds for one outcome combination, with certification metadata."""

    combination: tuple[str, ...]
    trivial: float
    upper: float
    exact: float
    gap: float
    tradeoff: bool
    tight: bool
    tight_degenerate: bool
    optimizer: Channel
    tol: float = 1e-6

    def __post_init__(self):
        if self.exact > self.upper + 1e-8:
            raise ValidationError(f"exact {self.exact!r} exceeds upper {self.upper!r}")
        if self.exact > self.trivial + 1e-8:
            raise ValidationError(f"exact {self.exact!r} exceeds trivial {self.trivial!r}")
        # certified trivial bounds may exceed their true value by up to tol
        hi = max(1.0, self.upper) + max(self.tol, 1e-9)
        for name in ("trivial", "upper", "exact"):
            v = getattr(self, name)
            if not -1e-9 <= v <= hi:
                raise ValidationError(f"{name} bound {v!r} outside [0, {hi!r}]")


def bound_report(scenario: Scenario, combination: Sequence[str], tol: float = 1e-6,
                 testers: Sequence[Tester] | None = None,
                 trivial: float | None = None) -> BoundReport:
    """Compute every bound for one combination; the three are computed
    independently so their mutual inequalities are genuine cross-checks."""
    combination = _check_combination(scenario, combination)
    testers = _testers_for(scenario, testers)
    if trivial is None:
        trivial = trivial_bound(scenario, combination, tol=tol, testers=testers)
    upper = upper_bound(scenario, combination, testers=testers)
    exact = exact_bound(scenario, combination, tol=tol, testers=testers)
    tight = tightness_check(scenario, combination, testers=testers)
    if tight.tight and abs(exact.value - upper) > max(1e-6, 10 * exact.gap):
        raise ValidationError(
            f"tightness certified but exact {exact.value!r} != upper {upper!r}")
    tradeoff = exact.dual_value < trivial - max(tol, TRADEOFF_MARGIN)
    return BoundReport(
        combination=combination,
        trivial=float(trivial),
        upper=float(upper),
        exact=float(exact.value),
        gap=float(exact.gap),
        tradeoff=bool(tradeoff),
        tight=tight.tight,
        tight_degenerate=tight.degenerate,
        optimizer=exact.optimizer,
        tol=float(tol),
    )


def all_combinations(scenario: Scenario) -> list[tuple[str, ...]]:
    """Every outcome combination, ordered lexicographically by label tuple."""
    return sorted(itertools.product(*scenario.outcome_sets()))


def scenario_report(scenario: Scenario, tol: float = 1e-6, cap: int | None = 4096,
                    ) -> list[BoundReport]:
    """Bound reports for every combination (lexicographic order).

    ``cap`` guards against combinatorial blowup; pass None to disable.  The
    per-test maxima feeding the trivial bound are solved once per outcome.
    """
    combos = all_combinations(scenario)
    if cap is not None and len(combos) > cap:
        raise ValidationError(f"{len(combos)} combinations exceed the cap {cap}")
    testers = scenario.testers()
    maxima: dict[str, float] = {}
    for tester in testers:
        for label, element in tester.elements:
            maxima[label] = maximize_over_channels(element, tol=tol).dual_value
    reports = []
    for combo in combos:
        trivial = sum(w * maxima[label] for w, label in zip(scenario.weights, combo))
        reports.append(bound_report(scenario, combo, tol=tol, testers=testers,
                                    trivial=trivial))
    return reports


def report_to_json(report: BoundReport) -> dict:
    return {
        "combination": list(report.combination),
        "trivial": report.trivial,
        "upper": report.upper,
        "exact": report.exact,
        "gap": report.gap,
        "tradeoff": report.tradeoff,
        "tight": report.tight,
        "tight_degenerate": report.tight_degenerate,
        "optimizer": channel_to_json(report.optimizer),
    }
