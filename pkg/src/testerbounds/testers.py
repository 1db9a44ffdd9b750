"""Tests of quantum channels, the testers they induce, and channel representations.

A physical test is a pair (input state on anc(x)in, POVM on anc(x)out).  Its
tester is the family T(x) on in(x)out obtained by pushing each POVM effect
through the dual of the input state's ancilla map; probabilities then follow
from the generalized Born rule tr[T(x) J] against the channel's Choi matrix J.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .linalg import (
    EQUALITY_ATOL,
    PSD_ATOL,
    DimensionError,
    HermitianOperator,
    ValidationError,
    _entries_from_json,
    _entries_to_json,
    basis_transpose,
    operator_from_json,
    operator_to_json,
    partial_trace,
    validate_povm,
    validate_state,
)

PROB_CLAMP_ATOL = 1e-9


@dataclass(frozen=True)
class Test:
    """One test of a channel: an input state on anc(x)in and a POVM on anc(x)out."""

    __test__ = False  # not a pytest case, despite the name

    input_state: HermitianOperator
    povm: tuple[tuple[str, HermitianOperator], ...]
    d_anc: int
    d_in: int
    d_out: int

    def __init__(self, input_state: HermitianOperator,
                 povm: Sequence[tuple[str, HermitianOperator]],
                 d_anc: int, d_in: int, d_out: int):
        d_anc, d_in, d_out = int(d_anc), int(d_in), int(d_out)
        if input_state.dims != (d_anc, d_in):
            raise DimensionError(
                f"input state dims {input_state.dims} != (d_anc, d_in) = {(d_anc, d_in)}")
        povm = tuple((str(label), eff) for label, eff in povm)
        labels = [label for label, _ in povm]
        if len(set(labels)) != len(labels):
            raise ValidationError("outcome labels within a test must be unique")
        for label, eff in povm:
            if eff.dims != (d_anc, d_out):
                raise DimensionError(
                    f"effect {label!r} dims {eff.dims} != (d_anc, d_out) = {(d_anc, d_out)}")
        report = validate_state(input_state)
        if not report:
            raise ValidationError(f"input state invalid: {report.summary()}")
        report = validate_povm([eff for _, eff in povm])
        if not report:
            raise ValidationError(f"POVM invalid: {report.summary()}")
        object.__setattr__(self, "input_state", input_state)
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "d_anc", d_anc)
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.povm)


@dataclass(frozen=True)
class Tester:
    """Positive operators T(x) on in(x)out summing to marginal (x) identity."""

    __test__ = False  # not a pytest case, despite the name

    elements: tuple[tuple[str, HermitianOperator], ...]
    marginal: HermitianOperator

    def __init__(self, elements: Sequence[tuple[str, HermitianOperator]],
                 marginal: HermitianOperator):
        elements = tuple((str(label), op) for label, op in elements)
        if not elements:
            raise ValidationError("tester needs at least one element")
        if len(marginal.dims) != 1:
            raise DimensionError("marginal must carry a single subsystem dimension")
        d_in = marginal.dims[0]
        for label, op in elements:
            if len(op.dims) != 2 or op.dims[0] != d_in:
                raise DimensionError(f"element {label!r} dims {op.dims} incompatible "
                                     f"with input dimension {d_in}")
            if op.min_eigenvalue() < -PSD_ATOL:
                raise ValidationError(f"element {label!r} is not positive semidefinite")
        d_out = elements[0][1].dims[1]
        total = sum(op.mat for _, op in elements)
        expected = np.kron(marginal.mat, np.eye(d_out))
        resid = float(np.max(np.abs(total - expected)))
        if resid > EQUALITY_ATOL:
            raise ValidationError(f"elements do not sum to marginal (x) identity "
                                  f"(residual {resid:.3e})")
        report = validate_state(basis_transpose(marginal))
        if not report:
            raise ValidationError(f"marginal is not the transpose of a state: {report.summary()}")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "marginal", marginal)

    @property
    def d_in(self) -> int:
        return self.marginal.dims[0]

    @property
    def d_out(self) -> int:
        return self.elements[0][1].dims[1]

    def element(self, label: str) -> HermitianOperator:
        for lab, op in self.elements:
            if lab == label:
                return op
        raise KeyError(label)


@dataclass(frozen=True)
class Channel:
    """A channel identified with its Choi matrix on in(x)out.

    ``kind`` records provenance ("unitary", "kraus", "constant" or "choi") and
    ``data`` the generating object (unitary matrix, Kraus list, output state,
    or None for a raw Choi matrix).
    """

    choi: HermitianOperator
    kind: str = "choi"
    data: Any = field(default=None, compare=False)

    def __init__(self, choi: HermitianOperator, kind: str = "choi", data: Any = None):
        if len(choi.dims) != 2:
            raise DimensionError("Choi matrix must carry dims (d_in, d_out)")
        if choi.min_eigenvalue() < -PSD_ATOL:
            raise ValidationError("Choi matrix is not positive semidefinite")
        marg = partial_trace(choi, keep=[0])
        resid = float(np.max(np.abs(marg.mat - np.eye(choi.dims[0]))))
        if resid > EQUALITY_ATOL:
            raise ValidationError(f"channel is not trace preserving (residual {resid:.3e})")
        object.__setattr__(self, "choi", choi)
        object.__setattr__(self, "kind", str(kind))
        object.__setattr__(self, "data", data)

    @property
    def d_in(self) -> int:
        return self.choi.dims[0]

    @property
    def d_out(self) -> int:
        return self.choi.dims[1]

    def apply(self, rho: HermitianOperator) -> HermitianOperator:
        """Apply the channel to a state on the input space via its Choi matrix."""
        if rho.dims != (self.d_in,):
            raise DimensionError(f"state dims {rho.dims} != ({self.d_in},)")
        j = self.choi.mat.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        out = np.einsum("ij,ikjl->kl", rho.mat, j)
        return HermitianOperator(out, (self.d_out,))


@dataclass(frozen=True)
class Scenario:
    """A family of tests applied with given mixing weights to one channel."""

    tests: tuple[Test, ...]
    weights: tuple[float, ...]

    def __init__(self, tests: Sequence[Test], weights: Sequence[float]):
        tests = tuple(tests)
        weights = tuple(float(w) for w in weights)
        if not tests:
            raise ValidationError("scenario needs at least one test")
        if len(tests) != len(weights):
            raise ValidationError("one weight per test required")
        if any(w < 0 for w in weights):
            raise ValidationError("weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {sum(weights)!r}, expected 1")
        d_in, d_out = tests[0].d_in, tests[0].d_out
        for t in tests:
            if (t.d_in, t.d_out) != (d_in, d_out):
                raise DimensionError("all tests must probe the same channel dimensions")
        seen: set[str] = set()
        for t in tests:
            for label in t.labels:
                if label in seen:
                    raise ValidationError(f"outcome label {label!r} reused across tests")
                seen.add(label)
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "weights", weights)

    @property
    def d_in(self) -> int:
        return self.tests[0].d_in

    @property
    def d_out(self) -> int:
        return self.tests[0].d_out

    def testers(self) -> list[Tester]:
        return [tester_from_test(t) for t in self.tests]

    def outcome_sets(self) -> list[tuple[str, ...]]:
        return [t.labels for t in self.tests]


def _kraus_from_ket(psi: np.ndarray, d_anc: int, d_in: int) -> np.ndarray:
    """Matrix K with K[a, i] = <a,i|psi>, so |psi><psi| = (K . K^dag-conjugation) of
    the unnormalized maximally entangled state."""
    return psi.reshape(d_anc, d_in)


def state_decomposition(rho: HermitianOperator, cutoff: float = 1e-14) -> list[tuple[float, np.ndarray]]:
    """Eigendecomposition of a state as a list of (weight, vector) pairs."""
    vals, vecs = np.linalg.eigh(rho.mat)
    return [(float(v), vecs[:, i].copy()) for i, v in enumerate(vals) if abs(v) > cutoff]


def upsilon_dual_apply(rho: HermitianOperator, b: HermitianOperator,
                       decomposition: Sequence[tuple[float, np.ndarray]] | None = None,
                       ) -> HermitianOperator:
    """Dual of the ancilla map of ``rho`` applied to an operator on the ancilla.

    For rho = sum_n w_n |Psi_n><Psi_n| on anc(x)in this is
    sum_n w_n K_n^dag b K_n with K_n = reshape(Psi_n, (d_anc, d_in)).  The
    result does not depend on which convex pure-state decomposition is used;
    by default the eigendecomposition is taken.  An explicit ``decomposition``
    of (weight, vector) pairs may be supplied instead.
    """
    if len(rho.dims) != 2:
        raise DimensionError("state must carry dims (d_anc, d_in)")
    d_anc, d_in = rho.dims
    if b.dims != (d_anc,):
        raise DimensionError(f"operator dims {b.dims} != ({d_anc},)")
    if decomposition is None:
        decomposition = state_decomposition(rho)
    out = np.zeros((d_in, d_in), dtype=complex)
    for weight, psi in decomposition:
        k = _kraus_from_ket(np.asarray(psi, dtype=complex).reshape(-1), d_anc, d_in)
        out += weight * (k.conj().T @ b.mat @ k)
    return HermitianOperator(out, (d_in,))


def tester_from_test(test: Test) -> Tester:
    """Build the tester {T(x)} on in(x)out induced by a physical test."""
    decomposition = state_decomposition(test.input_state)
    eye_out = np.eye(test.d_out)
    kraus_ext = [(w, np.kron(_kraus_from_ket(psi, test.d_anc, test.d_in), eye_out))
                 for w, psi in decomposition]
    elements = []
    for label, eff in test.povm:
        t = np.zeros((test.d_in * test.d_out,) * 2, dtype=complex)
        for w, k in kraus_ext:
            t += w * (k.conj().T @ eff.mat @ k)
        elements.append((label, HermitianOperator(t, (test.d_in, test.d_out))))
    marginal = basis_transpose(partial_trace(test.input_state, keep=[1]))
    return Tester(elements, marginal)


def channel_from_unitary(u: np.ndarray) -> Channel:
    """Channel rho -> U rho U^dag from a unitary matrix."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got shape {u.shape}")
    d = u.shape[0]
    resid = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
    if resid > EQUALITY_ATOL:
        raise ValidationError(f"matrix is not unitary (residual {resid:.3e})")
    v = u.T.reshape(-1)  # amplitudes of sum_i |i> (x) U|i>
    choi = HermitianOperator(np.outer(v, v.conj()), (d, d))
    return Channel(choi, kind="unitary", data=u.copy())


def channel_from_kraus(kraus: Sequence[np.ndarray]) -> Channel:
    """Channel from Kraus operators K_k (each d_out x d_in) with sum K^dag K = I."""
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise ValidationError("at least one Kraus operator required")
    d_out, d_in = ks[0].shape
    if any(k.shape != (d_out, d_in) for k in ks):
        raise DimensionError("all Kraus operators must share one shape")
    total = sum(k.conj().T @ k for k in ks)
    resid = float(np.max(np.abs(total - np.eye(d_in))))
    if resid > EQUALITY_ATOL:
        raise ValidationError(f"Kraus operators are not trace preserving (residual {resid:.3e})")
    choi = np.zeros((d_in * d_out,) * 2, dtype=complex)
    for k in ks:
        v = k.T.reshape(-1)
        choi += np.outer(v, v.conj())
    return Channel(HermitianOperator(choi, (d_in, d_out)), kind="kraus",
                   data=tuple(k.copy() for k in ks))


def channel_constant(sigma: HermitianOperator, d_in: int) -> Channel:
    """Channel mapping every input state to the fixed output state sigma."""
    report = validate_state(sigma)
    if not report:
        raise ValidationError(f"target state invalid: {report.summary()}")
    if len(sigma.dims) != 1:
        raise DimensionError("target state must carry a single subsystem dimension")
    choi = HermitianOperator(np.kron(np.eye(int(d_in)), sigma.mat), (int(d_in), sigma.dims[0]))
    return Channel(choi, kind="constant", data=sigma)


def channel_from_choi(choi: HermitianOperator) -> Channel:
    return Channel(choi, kind="choi")


def probability(tester_element: HermitianOperator, ch: Channel) -> float:
    """Generalized Born rule tr[T(x) J]; tiny numerical excursions are clamped."""
    if tester_element.dims != ch.choi.dims:
        raise DimensionError(f"tester element dims {tester_element.dims} != "
                             f"channel dims {ch.choi.dims}")
    p = float(np.trace(tester_element.mat @ ch.choi.mat).real)
    if p < -PROB_CLAMP_ATOL or p > 1.0 + PROB_CLAMP_ATOL:
        raise ValidationError(f"probability {p!r} outside the clamping window")
    return min(max(p, 0.0), 1.0)


def direct_probability(test: Test, outcome: str, ch: Channel) -> float:
    """Probability via the three-step simulation: prepare, apply channel, measure.

    Uses the Choi reconstruction of the channel on the physical input state,
    independently of any tester, so it can serve as an oracle for
    ``probability``.
    """
    if (test.d_in, test.d_out) != (ch.d_in, ch.d_out):
        raise DimensionError("test and channel dimensions differ")
    effect = dict(test.povm).get(str(outcome))
    if effect is None:
        raise KeyError(outcome)
    rho4 = test.input_state.mat.reshape(test.d_anc, test.d_in, test.d_anc, test.d_in)
    j4 = ch.choi.mat.reshape(ch.d_in, ch.d_out, ch.d_in, ch.d_out)
    output = np.einsum("aibj,ikjl->akbl", rho4, j4)
    output = output.reshape(test.d_anc * test.d_out, test.d_anc * test.d_out)
    p = float(np.trace(effect.mat @ output).real)
    if p < -PROB_CLAMP_ATOL or p > 1.0 + PROB_CLAMP_ATOL:
        raise ValidationError(f"probability {p!r} outside the clamping window")
    return min(max(p, 0.0), 1.0)


def outcome_distribution(scenario: Scenario, ch: Channel) -> dict[str, float]:
    """Joint distribution over all outcome labels including the test mixing."""
    probs: dict[str, float] = {}
    for weight, tester in zip(scenario.weights, scenario.testers()):
        for label, op in tester.elements:
            probs[label] = weight * probability(op, ch)
    return probs


def sample_run(scenario: Scenario, ch: Channel, n: int, seed: int) -> dict[str, int]:
    """Draw ``n`` outcomes: test index by the mixing weights, then an outcome.

    Deterministic for a fixed 64-bit seed; the histogram covers every label of
    the scenario (zero counts included) and sums to ``n``.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("sample count must be >= 1")
    rng = np.random.default_rng(seed)
    dist = outcome_distribution(scenario, ch)
    labels = list(dist)
    p = np.asarray([dist[label] for label in labels], dtype=float)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    counts = rng.multinomial(n, p)
    return {label: int(c) for label, c in zip(labels, counts)}


# --- JSON interfaces -------------------------------------------------------
#
# Scenario files:
#   {"weights": [...], "tests": [{"d_anc":., "d_in":., "d_out":.,
#       "input_state": <matrix>, "povm": [{"label": "x1_0", "effect": <matrix>}, ...]}, ...]}
# Channel files:
#   {"kind": "unitary"|"kraus"|"constant"|"choi", "d_in":., "d_out":., "data": ...}
# where "data" holds raw row-major [re, im] nestings: the unitary matrix, the
# list of Kraus matrices, the constant output state, or the Choi matrix.

def test_to_json(test: Test) -> dict:
    return {
        "d_anc": test.d_anc,
        "d_in": test.d_in,
        "d_out": test.d_out,
        "input_state": operator_to_json(test.input_state),
        "povm": [{"label": label, "effect": operator_to_json(eff)}
                 for label, eff in test.povm],
    }


def test_from_json(obj: dict) -> Test:
    return Test(
        input_state=operator_from_json(obj["input_state"]),
        povm=[(entry["label"], operator_from_json(entry["effect"])) for entry in obj["povm"]],
        d_anc=obj["d_anc"], d_in=obj["d_in"], d_out=obj["d_out"],
    )


def scenario_to_json(scenario: Scenario) -> dict:
    return {"weights": [float(w) for w in scenario.weights],
            "tests": [test_to_json(t) for t in scenario.tests]}


def scenario_from_json(obj: dict) -> Scenario:
    return Scenario([test_from_json(t) for t in obj["tests"]], obj["weights"])


def channel_to_json(ch: Channel) -> dict:
    out: dict = {"kind": ch.kind, "d_in": ch.d_in, "d_out": ch.d_out}
    if ch.kind == "unitary":
        out["data"] = _entries_to_json(np.asarray(ch.data))
    elif ch.kind == "kraus":
        out["data"] = [_entries_to_json(np.asarray(k)) for k in ch.data]
    elif ch.kind == "constant":
        out["data"] = _entries_to_json(ch.data.mat)
    elif ch.kind == "choi":
        out["data"] = _entries_to_json(ch.choi.mat)
    else:
        raise ValidationError(f"unknown channel kind {ch.kind!r}")
    return out


def channel_from_json(obj: dict) -> Channel:
    kind = obj["kind"]
    if kind == "unitary":
        return channel_from_unitary(_entries_from_json(obj["data"], 2))
    if kind == "kraus":
        return channel_from_kraus([_entries_from_json(k, 2) for k in obj["data"]])
    if kind == "constant":
        sigma = _entries_from_json(obj["data"], 2)
        return channel_constant(HermitianOperator(sigma, (sigma.shape[0],)), obj["d_in"])
    if kind == "choi":
        mat = _entries_from_json(obj["data"], 2)
        return channel_from_choi(HermitianOperator(mat, (obj["d_in"], obj["d_out"])))
    raise ValidationError(f"unknown channel kind {kind!r}")
