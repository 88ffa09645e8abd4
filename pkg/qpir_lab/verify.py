"""Executable checks for the retrieval scheme.

Each check returns a ``CheckResult`` (or a list of them) instead of raising, so that a suite
can report every failure with its witness. ``run_suite`` groups the checks into named suites
and times them with a ``LoopTimer``.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.stats
from tqdm import tqdm as std_tqdm

from qpir_lab import symplectic
from qpir_lab.codes import (
    CartesianPairCode,
    GrsCode,
    default_locators,
    grs_dual,
    is_self_dual,
    is_weakly_self_dual,
    retrieval_code,
    self_dual_multipliers_char2,
    star_grs,
)
from qpir_lab.errors import (
    CheckFailedError,
    InvalidParamsError,
    NotFoundError,
    QpirError,
    SupportTooLargeError,
)
from qpir_lab.fields import FieldSpec, field_for_order
from qpir_lab.linalg import (
    MatrixGF,
    block_diag,
    enumerate_vectors,
    in_row_space,
    kernel,
    rank,
    row_space_equal,
    vstack,
)
from qpir_lab.oracle import (
    QuditSpace,
    StateVector,
    WeylLabel,
    reduced_state_distance,
    run_dense_protocol,
    stabilizer_initial_state,
    weyl_apply,
)
from qpir_lab.protocol import (
    QpirScheme,
    StorageSystem,
    Transcript,
    build_scheme,
    derive_params,
    encode_storage,
    random_batch,
    random_files,
    rate_formula,
    run_protocol,
    selector_matrix,
)
from qpir_lab.timers import LoopTimer

tqdm = partial(std_tqdm, dynamic_ncols=True)

SIGNIFICANCE = 0.01
MAX_VIEW_SUPPORT = 10**4
MIN_SUPPORTED_SHARE = 0.5
EXHAUSTIVE_SUBSET_LIMIT = 8
NUM_SAMPLED_SUBSETS = 1000
MAX_CODEWORD_ENUMERATION = 10**5
STATE_TOLERANCE = 1e-9

SUITE_NAMES = ("codes", "symplectic", "protocol", "privacy", "oracle")


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.view(np.ndarray).tolist()
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {key: _jsonable(v) for key, v in value.items()}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: str = ""
    witness: Any = None
    """Smallest piece of evidence for a failure (a subset, a round index, a vector)."""
    elapsed_ms: Optional[float] = None
    suite: Optional[str] = None

    def raise_if_failed(self) -> CheckResult:
        if not self.passed:
            raise CheckFailedError(self.name, self.details, self.witness)
        return self

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["witness"] = _jsonable(self.witness)
        return d


@dataclass
class VerificationReport:
    suites: Tuple[str, ...]
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def as_dict(self) -> dict:
        return {
            "suites": list(self.suites),
            "passed": self.passed,
            "num_checks": len(self.checks),
            "num_failed": len(self.failures),
            "checks": [check.as_dict() for check in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


# Measurement matrices.
def _column_pairs(S: Sequence[int], n: int) -> List[int]:
    return [s - 1 for s in S] + [n + s - 1 for s in S]


def _subsets(
    n: int, size: int, rng: np.random.Generator, exhaustive_limit: int, num_samples: int
):
    if n <= exhaustive_limit:
        yield from itertools.combinations(range(1, n + 1), size)
        return
    for _ in range(num_samples):
        yield tuple(sorted(int(s) + 1 for s in rng.choice(n, size=size, replace=False)))


def measurement_matrix_checks(
    G_S: MatrixGF,
    H_S: MatrixGF,
    n: int,
    k: int,
    t: int,
    rng: Optional[np.random.Generator] = None,
    exhaustive_limit: int = EXHAUSTIVE_SUBSET_LIMIT,
    num_samples: int = NUM_SAMPLED_SUBSETS,
) -> Tuple[CheckResult, CheckResult]:
    """Column independence of G_S on every (k+t-1)-set of servers, and H_S J^T G_S^T = 0."""
    rng = np.random.default_rng(0) if rng is None else rng
    size = k + t - 1

    independence = CheckResult(
        name="measurement-column-independence",
        passed=True,
        details=f"all {size}-subsets" if n <= exhaustive_limit else f"{num_samples} sampled {size}-subsets",
    )
    for S in _subsets(n, size, rng, exhaustive_limit, num_samples):
        if rank(G_S[:, _column_pairs(S, n)]) < 2 * size:
            independence.passed = False
            independence.details = f"columns of G_S on servers {S} are dependent"
            independence.witness = S
            break

    J = symplectic.symplectic_matrix(type(G_S), n)
    product = H_S @ J.T @ G_S.T
    nonzero = np.argwhere(product.view(np.ndarray) != 0)
    orthogonality = CheckResult(
        name="measurement-orthogonality",
        passed=nonzero.shape[0] == 0,
        details="H_S J^T G_S^T = 0" if nonzero.shape[0] == 0 else "H_S J^T G_S^T has nonzero entries",
        witness=None if nonzero.shape[0] == 0 else tuple(int(i) for i in nonzero[0]),
    )
    return independence, orthogonality


# User privacy.
def user_privacy_rank(D: CartesianPairCode, T: Sequence[int]) -> bool:
    """True iff G_D restricted to the column pairs of T has independent columns."""
    if len(T) == 0:
        return True
    cols = _column_pairs(T, D.base.length)
    return rank(D.generator[:, cols]) == len(cols)


def collusion_rank_check(scheme: QpirScheme) -> CheckResult:
    """user_privacy_rank over every t_eff-subset of the queried servers."""
    params = scheme.params
    subsets = list(itertools.combinations(range(1, params.n_eff + 1), params.t_eff))
    for T in subsets:
        if not user_privacy_rank(scheme.query_code, T):
            return CheckResult("collusion-rank", False, f"G_D is singular on {T}", witness=T)
    return CheckResult("collusion-rank", True, f"{len(subsets)} collusion sets")


@dataclass(frozen=True)
class PrivacyReport:
    collusion_set: Tuple[int, ...]
    K_pair: Tuple[int, int]
    algebraic_private: bool
    """Exact verdict of user_privacy_rank."""
    statistic: float
    dof: int
    p_value: float
    samples: int
    support: int
    """Number of possible joint views of the collusion set."""
    significance: float = SIGNIFICANCE
    zero_randomness: bool = False

    @property
    def distinguishable(self) -> bool:
        return self.p_value < self.significance

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["distinguishable"] = self.distinguishable
        return d


def view_support(scheme: QpirScheme, T: Sequence[int]) -> int:
    p = scheme.params
    return p.q ** (p.rho * p.m * p.beta * 2 * len(T))


def _sample_views(
    scheme: QpirScheme,
    T: Sequence[int],
    K: int,
    samples: int,
    rng: np.random.Generator,
    zero_randomness: bool,
) -> np.ndarray:
    """Integer codes of the colluders' joint view over all rounds, one per sample."""
    p = scheme.params
    cols = _column_pairs(T, p.n_eff)
    rows = p.m * p.beta
    G_D_T = scheme.G_D[:, cols]
    E = selector_matrix(p, scheme.field, K)

    codes = np.zeros(samples, dtype=np.int64)
    place = 1
    for round_schedule in scheme.schedules:
        if zero_randomness:
            Z = scheme.field.zeros((samples * rows, 2 * p.t_eff))
        else:
            Z = scheme.field.random((samples * rows, 2 * p.t_eff), rng)
        shift = (E @ round_schedule.M)[:, cols]
        view = (Z @ G_D_T).reshape(samples, rows, len(cols)) + shift
        for digit in view.view(np.ndarray).reshape(samples, -1).T:
            codes += digit.astype(np.int64) * place
            place *= p.q
    return codes


def user_privacy_empirical(
    scheme: QpirScheme,
    T: Sequence[int],
    K1: int,
    K2: int,
    samples: int = 100_000,
    seed: int = 0,
    zero_randomness: bool = False,
) -> PrivacyReport:
    """Chi-square two-sample test of the colluders' views for K1 against K2."""
    support = view_support(scheme, T)
    if support > MAX_VIEW_SUPPORT:
        raise SupportTooLargeError(
            f"The view of {tuple(T)} has {support} outcomes, more than {MAX_VIEW_SUPPORT}"
        )
    rng_1, rng_2 = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)]
    table = np.vstack(
        [
            np.bincount(_sample_views(scheme, T, K1, samples, rng_1, zero_randomness), minlength=support),
            np.bincount(_sample_views(scheme, T, K2, samples, rng_2, zero_randomness), minlength=support),
        ]
    )
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        statistic, p_value, dof = 0.0, 1.0, 0
    else:
        statistic, p_value, dof, _ = scipy.stats.chi2_contingency(table, correction=False)

    return PrivacyReport(
        collusion_set=tuple(T),
        K_pair=(K1, K2),
        algebraic_private=user_privacy_rank(scheme.query_code, T),
        statistic=float(statistic),
        dof=int(dof),
        p_value=float(p_value),
        samples=samples,
        support=support,
        zero_randomness=zero_randomness,
    )


# Server privacy.
def perturb_file(storage: StorageSystem, i: int, rng: np.random.Generator) -> StorageSystem:
    """The same storage with file i replaced by a different random file."""
    X_i = storage.file(i)
    GF = type(X_i)
    delta = GF.Random(X_i.shape, seed=rng)
    delta[0, 0] = int(rng.integers(1, GF.order))
    return storage.with_file(i, X_i + delta)


def server_privacy_check(
    scheme: QpirScheme,
    storage_a: StorageSystem,
    storage_b: StorageSystem,
    K: int,
    seed: int,
) -> CheckResult:
    """Identical seeds must give identical outcomes when only files other than K differ."""
    transcript_a = run_protocol(scheme, storage_a, K, seed)
    transcript_b = run_protocol(scheme, storage_b, K, seed)
    for round_a, round_b in zip(transcript_a.rounds, transcript_b.rounds):
        if not np.array_equal(round_a.o, round_b.o):
            return CheckResult(
                "server-privacy", False, f"outcomes differ in round {round_a.r}", witness=round_a.r
            )
    return CheckResult("server-privacy", True, f"{len(transcript_a.rounds)} rounds identical")


def state_privacy_check(
    scheme: QpirScheme,
    storage_a: StorageSystem,
    storage_b: StorageSystem,
    K: int,
    seed: int,
    tolerance: float = STATE_TOLERANCE,
) -> CheckResult:
    """Trace distance of the received system states for two storages, per round."""
    space = QuditSpace(field=scheme.field, n=scheme.params.n_eff)
    initial = stabilizer_initial_state(scheme.V_basis, space, np.random.default_rng(seed))
    transcript_a = run_protocol(scheme, storage_a, K, seed)
    transcript_b = run_protocol(scheme, storage_b, K, seed)
    worst = 0.0
    for round_a, round_b in zip(transcript_a.rounds, transcript_b.rounds):
        distance = reduced_state_distance(
            weyl_apply(initial, WeylLabel.from_vector(round_a.A)),
            weyl_apply(initial, WeylLabel.from_vector(round_b.A)),
        )
        worst = max(worst, distance)
        if distance > tolerance:
            return CheckResult(
                "state-privacy", False, f"trace distance {distance:.3e} in round {round_a.r}", witness=round_a.r
            )
    return CheckResult("state-privacy", True, f"max trace distance {worst:.3e}")


# Code algebra oracles.
def _pairwise_stars(A: MatrixGF, B: MatrixGF) -> MatrixGF:
    return vstack(*[(a * b).reshape(1, -1) for a, b in itertools.product(A, B)])


def star_span_bruteforce(Cp: GrsCode, Dp: GrsCode) -> bool:
    """Span of all generator-row stars equals the closed-form star code, also for pair codes."""
    n = Cp.length
    if Cp.dim + Dp.dim - 1 >= n:
        expected = Cp.field.identity(n)
    else:
        expected = star_grs(Cp, Dp).generator
    single = row_space_equal(_pairwise_stars(Cp.generator, Dp.generator), expected)
    pair = row_space_equal(
        _pairwise_stars(CartesianPairCode(Cp).generator, CartesianPairCode(Dp).generator),
        block_diag(expected, expected),
    )
    return single and pair


def minimum_distance_bruteforce(code: GrsCode, limit: int = MAX_CODEWORD_ENUMERATION) -> int:
    if code.field.q**code.dim > limit:
        raise SupportTooLargeError(f"q^k = {code.field.q ** code.dim} codewords exceed {limit}")
    words = enumerate_vectors(code.field.GF, code.dim)[1:] @ code.generator
    return int(np.count_nonzero(words.view(np.ndarray), axis=1).min())


def dual_matches_kernel(code: GrsCode) -> bool:
    return row_space_equal(grs_dual(code).generator, kernel(code.generator))


def coset_decomposition_check(scheme: QpirScheme, transcript: Transcript) -> CheckResult:
    """A - o M lies in span(G_S) in every round."""
    for state in transcript.rounds:
        if not in_row_space(state.A - state.o @ state.schedule.M, scheme.G_S):
            return CheckResult(
                "coset-decomposition", False, f"residual outside span(G_S) in round {state.r}", witness=state.r
            )
    return CheckResult("coset-decomposition", True, f"{len(transcript.rounds)} rounds")


def stacked_basis_check(scheme: QpirScheme) -> CheckResult:
    """(G_S; M^(r)) is a basis of F_q^{2 n_eff} in every round."""
    size = 2 * scheme.params.n_eff
    for round_schedule in scheme.schedules:
        if rank(vstack(scheme.G_S, round_schedule.M)) != size:
            return CheckResult(
                "stacked-basis", False, f"(G_S; M) singular in round {round_schedule.r}", witness=round_schedule.r
            )
    return CheckResult("stacked-basis", True, f"{len(scheme.schedules)} rounds")


def symplectic_form_checks(
    spec: FieldSpec,
    n: int,
    rng: Optional[np.random.Generator] = None,
    num_samples: int = 64,
    max_dense_dim: int = 4096,
) -> List[CheckResult]:
    """Alternating and antisymmetric trace form; Weyl commutation phases in odd characteristic."""
    rng = np.random.default_rng(0) if rng is None else rng
    X = spec.random((num_samples, 2 * n), rng)
    Y = spec.random((num_samples, 2 * n), rng)
    results = []

    diagonal = np.diagonal(symplectic.symp_form(X, X).view(np.ndarray))
    bad = np.flatnonzero(diagonal)
    results.append(
        CheckResult(
            f"symplectic-alternating[{spec},n={n}]",
            bad.size == 0,
            "<x, x> = 0" if bad.size == 0 else f"<x, x> = {int(diagonal[bad[0]])}",
            witness=None if bad.size == 0 else X[bad[0]],
        )
    )

    forward = symplectic.symp_form(X, Y)
    backward = symplectic.symp_form(Y, X)
    bad_pairs = np.argwhere((forward + backward.T).view(np.ndarray) != 0)
    results.append(
        CheckResult(
            f"symplectic-antisymmetry[{spec},n={n}]",
            bad_pairs.shape[0] == 0,
            "<x, y> = -<y, x>",
            witness=None if bad_pairs.shape[0] == 0 else [X[bad_pairs[0][0]], Y[bad_pairs[0][1]]],
        )
    )

    if spec.is_char2 or spec.q**n > max_dense_dim:
        return results

    space = QuditSpace(field=spec, n=n)
    psi = rng.standard_normal((space.dim, 1)) + 1j * rng.standard_normal((space.dim, 1))
    state = StateVector(space=space, amplitudes=psi / np.linalg.norm(psi), aux_exponent=0)
    commutation = CheckResult(f"weyl-commutation[{spec},n={n}]", True, "W(v)W(w) = w^<v,w> W(w)W(v)")
    for v, w in zip(X[:8], Y[:8]):
        label_v, label_w = WeylLabel.from_vector(v), WeylLabel.from_vector(w)
        lhs = weyl_apply(weyl_apply(state, label_w), label_v).amplitudes
        rhs = weyl_apply(weyl_apply(state, label_v), label_w).amplitudes
        phase = space.phases(symplectic.symp_form(v.reshape(1, -1), w.reshape(1, -1)))[0, 0]
        if not np.allclose(lhs, phase * rhs):
            commutation.passed = False
            commutation.details = "commutation phase disagrees with the symplectic form"
            commutation.witness = [v, w]
            break
    results.append(commutation)
    return results


def oracle_equivalence_check(
    scheme: QpirScheme, storage: StorageSystem, K: int, seed: int
) -> CheckResult:
    """Dense PVM outcomes equal the coset decode in every round."""
    name = f"oracle-equivalence[q={scheme.params.q},n={scheme.params.n},k={scheme.params.k},t={scheme.params.t}]"
    try:
        dense = run_dense_protocol(scheme, storage, K, seed)
    except CheckFailedError as e:
        return CheckResult(name, False, str(e), witness=e.witness)
    coset = run_protocol(scheme, storage, K, seed)
    for dense_round, coset_round in zip(dense.rounds, coset.rounds):
        if not np.array_equal(dense_round.o, coset_round.o):
            return CheckResult(name, False, f"outcomes differ in round {dense_round.r}", witness=dense_round.r)
    if not np.array_equal(dense.decoded, storage.file(K)):
        return CheckResult(name, False, "dense run decoded the wrong file", witness=K)
    return CheckResult(name, True, f"{len(dense.rounds)} rounds, {dense.measurement}")


# Sweeps.
def valid_tuples(q: int, max_n: Optional[int] = None) -> List[Tuple[int, int, int]]:
    """Every (n, k, t) with 2 <= n <= q, k >= 1 and 1 <= t <= n - k."""
    max_n = q if max_n is None else min(q, max_n)
    return [
        (n, k, t)
        for n in range(2, max_n + 1)
        for k in range(1, n)
        for t in range(1, n - k + 1)
    ]


def correctness_sweep(
    qs: Sequence[int],
    seeds: int = 100,
    m_values: Sequence[int] = (1, 2, 3, 4),
    max_n: Optional[int] = None,
    progress: bool = False,
    timer: Optional[LoopTimer] = None,
) -> pd.DataFrame:
    """Decodes ``seeds`` seeded random runs per (q, n, k, t, m); one row per configuration.

    The runs of a configuration are batched and seeded by the configuration itself. Tuples
    that share n_eff and t_eff share one scheme. A tuple with no weakly self-dual code on the
    default locators is reported as unsupported, with no runs.
    """
    cases = [(q, n, k, t) for q in qs for (n, k, t) in valid_tuples(q, max_n)]
    timer = LoopTimer() if timer is None else timer
    schemes: Dict[Tuple[int, ...], Optional[QpirScheme]] = {}
    rows = []
    for q, n, k, t in tqdm(cases, desc="correctness sweep", disable=not progress):
        params = derive_params(q, n, k, t, max(m_values))
        key = (q, n, k, params.t_eff, params.n_eff)
        if key not in schemes:
            with timer.section(f"schemes GF({q})"):
                try:
                    schemes[key] = build_scheme(params)
                except NotFoundError:
                    schemes[key] = None
        base = schemes[key]
        if base is None:
            rows.extend(
                dict(q=q, n=n, k=k, t=t, m=m, runs=0, failures=0, status="unsupported") for m in m_values
            )
            continue
        for m in m_values:
            scheme = base.with_params(derive_params(q, n, k, t, m))
            with timer.section(f"runs GF({q})"):
                failures = random_batch(scheme, seeds, np.random.default_rng((q, n, k, t, m))).num_failures
            rows.append(
                dict(
                    q=q,
                    n=n,
                    k=k,
                    t=t,
                    m=m,
                    runs=seeds,
                    failures=failures,
                    status="ok" if failures == 0 else "fail",
                )
            )
    return pd.DataFrame(rows, columns=["q", "n", "k", "t", "m", "runs", "failures", "status"])


def sweep_summary(df: pd.DataFrame, min_supported_share: float = MIN_SUPPORTED_SHARE) -> pd.DataFrame:
    """Per field order: tuples swept, how many have a scheme, runs and failures.

    ``below_floor`` flags field orders where fewer than ``min_supported_share`` of the tuples
    could be built, i.e. where the sweep says little about the protocol itself.
    """
    columns = ["q", "tuples", "supported", "unsupported", "supported_share", "runs", "failures", "below_floor"]
    if df.empty:
        return pd.DataFrame(columns=columns)
    tuples = df.drop_duplicates(["q", "n", "k", "t"])
    summary = tuples.groupby("q").agg(
        tuples=("status", "size"),
        unsupported=("status", lambda status: int((status == "unsupported").sum())),
    )
    summary["supported"] = summary["tuples"] - summary["unsupported"]
    summary = summary.join(df.groupby("q").agg(runs=("runs", "sum"), failures=("failures", "sum")))
    summary = summary.reset_index()
    summary["supported_share"] = summary["supported"] / summary["tuples"]
    summary["below_floor"] = summary["supported_share"] < min_supported_share
    return summary[columns]


def default_rate_grid(max_n: int = 8) -> List[Tuple[int, int, int]]:
    return valid_tuples(2 ** math.ceil(math.log2(max(max_n, 2))), max_n)


def rate_table(grid: Sequence[Tuple[int, int, int]]) -> pd.DataFrame:
    """Closed-form rate of each (n, k, t) next to min(1, 2(n-k-t+1)/n)."""
    rows = []
    for n, k, t in grid:
        q = 2 ** math.ceil(math.log2(max(n, 2)))
        params = derive_params(q, n, k, t)
        rate = Fraction(2 * params.c, params.n_eff)
        formula = rate_formula(n, k, t)
        rows.append(
            dict(
                n=n,
                k=k,
                t=t,
                t_eff=params.t_eff,
                n_eff=params.n_eff,
                normalized=params.normalized,
                rate=str(rate),
                formula=str(formula),
                agrees=rate == formula,
            )
        )
    return pd.DataFrame(
        rows, columns=["n", "k", "t", "t_eff", "n_eff", "normalized", "rate", "formula", "agrees"]
    )


def rate_consistency_check(cases: Sequence[Tuple[int, int, int, int]], seed: int = 0) -> CheckResult:
    """Transcript-measured rates equal min(1, 2(n-k-t+1)/n) exactly."""
    checked, unsupported = 0, 0
    for q, n, k, t in cases:
        try:
            scheme = build_scheme(derive_params(q, n, k, t))
        except NotFoundError:
            unsupported += 1
            continue
        rng = np.random.default_rng(seed)
        storage = encode_storage(random_files(scheme, rng), scheme.storage_code, scheme.params.beta)
        transcript = run_protocol(scheme, storage, 1, seed)
        if transcript.rate != rate_formula(n, k, t):
            return CheckResult(
                "rate-consistency",
                False,
                f"measured {transcript.rate} != {rate_formula(n, k, t)} for (q, n, k, t) = {(q, n, k, t)}",
                witness=(q, n, k, t),
            )
        checked += 1
    return CheckResult("rate-consistency", True, f"{checked} tuples, {unsupported} unsupported")


# Suites.
CheckThunk = Callable[[], Union[CheckResult, List[CheckResult]]]


def worked_example_scheme(m: int = 2) -> QpirScheme:
    """[6, 3] storage over GF(7), t = 2, on the powers of 3."""
    return build_scheme(derive_params(7, 6, 3, 2, m), locators=(1, 3, 2, 6, 4, 5))


def _random_storage(scheme: QpirScheme, seed: int) -> StorageSystem:
    rng = np.random.default_rng(seed)
    return encode_storage(random_files(scheme, rng), scheme.storage_code, scheme.params.beta)


def _check(name: str, passed: bool, details: str = "", witness: Any = None) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), details=details, witness=witness)


def _random_grs_pairs(spec: FieldSpec, rng: np.random.Generator, count: int) -> List[Tuple[GrsCode, GrsCode]]:
    pairs = []
    for _ in range(count):
        n = int(rng.integers(4, min(spec.q, 8) + 1))
        k = int(rng.integers(1, n))
        t = int(rng.integers(1, n - k + 1))
        locators = default_locators(spec, n)
        multipliers = [spec.random(n, rng) for _ in range(2)]
        for v in multipliers:
            v[v == 0] = 1
        pairs.append(
            (
                GrsCode(field=spec, locators=locators, multipliers=multipliers[0], dim=k),
                GrsCode(field=spec, locators=locators, multipliers=multipliers[1], dim=t),
            )
        )
    return pairs


def _codes_suite() -> List[Tuple[str, CheckThunk]]:
    scheme = worked_example_scheme()
    gf8, gf16 = field_for_order(8), field_for_order(16)

    def star_sweep() -> CheckResult:
        for Cp, Dp in _random_grs_pairs(gf8, np.random.default_rng(0), 20):
            if not star_span_bruteforce(Cp, Dp):
                return _check("star-span-gf8", False, f"{Cp} * {Dp}", witness=[Cp.dim, Dp.dim])
        return _check("star-span-gf8", True, "20 random pairs")

    def distance_sweep() -> CheckResult:
        checked = 0
        for n, k, t in valid_tuples(8):
            s_code = build_scheme(derive_params(8, n, k, t)).s_code
            if 8**s_code.dim > MAX_CODEWORD_ENUMERATION:
                continue
            d = minimum_distance_bruteforce(s_code)
            if d != s_code.length - s_code.dim + 1:
                return _check("star-code-distance", False, f"d = {d} for {s_code}", witness=(8, n, k, t))
            checked += 1
        return _check("star-code-distance", True, f"{checked} star codes are MDS")

    def dual_sweep() -> CheckResult:
        codes = [scheme.c_code, scheme.d_code, scheme.s_code]
        codes += [Cp for Cp, _ in _random_grs_pairs(gf8, np.random.default_rng(1), 10)]
        for code in codes:
            if code.dim < code.length and not dual_matches_kernel(code):
                return _check("dual-vs-kernel", False, f"{code}", witness=code.as_dict())
        return _check("dual-vs-kernel", True, f"{len(codes)} codes")

    return [
        ("worked-example-star-span", lambda: _check(
            "worked-example-star-span", star_span_bruteforce(scheme.c_code, scheme.d_code), "C' * D' = S'"
        )),
        ("worked-example-weakly-self-dual", lambda: _check(
            "worked-example-weakly-self-dual", is_weakly_self_dual(scheme.s_code), f"{scheme.s_code}"
        )),
        ("worked-example-distance", lambda: _check(
            "worked-example-distance", minimum_distance_bruteforce(scheme.s_code) == 3, "d(S') = n - k - t + 2 = 3"
        )),
        ("self-dual-gf8", lambda: _check(
            "self-dual-gf8", is_self_dual(self_dual_multipliers_char2(gf8, default_locators(gf8, 4))), "[4, 2]"
        )),
        ("self-dual-gf16", lambda: _check(
            "self-dual-gf16", is_self_dual(self_dual_multipliers_char2(gf16, default_locators(gf16, 8))), "[8, 4]"
        )),
        ("parity-check-orthogonality", lambda: _check(
            "parity-check-orthogonality",
            not np.any(scheme.bundle.H @ scheme.s_code.generator.T),
            "H G_S'^T = 0",
        )),
        ("star-span-gf8", star_sweep),
        ("star-code-distance", distance_sweep),
        ("dual-vs-kernel", dual_sweep),
    ]


def _symplectic_suite() -> List[Tuple[str, CheckThunk]]:
    return [
        (f"symplectic[q={q},n={n}]", partial(symplectic_form_checks, field_for_order(q), n))
        for q, n in ((7, 3), (5, 2), (9, 2), (8, 3))
    ]


def _protocol_suite() -> List[Tuple[str, CheckThunk]]:
    scheme = worked_example_scheme()

    def worked_example_runs() -> CheckResult:
        for seed in range(10):
            storage = _random_storage(scheme, seed)
            K = seed % 2 + 1
            transcript = run_protocol(scheme, storage, K, seed)
            summary = (len(transcript.rounds), transcript.q_out, transcript.retrieved_symbols, transcript.rate)
            if summary != (3, 18, 12, Fraction(2, 3)):
                return _check("worked-example-runs", False, f"rounds/qudits/symbols/rate = {summary}", witness=seed)
            if not np.array_equal(transcript.decoded, storage.file(K)):
                return _check("worked-example-runs", False, "wrong file decoded", witness=seed)
        return _check("worked-example-runs", True, "10 seeds: 3 rounds, 18 qudits, 12 symbols, rate 2/3")

    def measurement_matrices() -> List[CheckResult]:
        results = []
        for q, n, k, t in ((7, 6, 3, 2), (8, 6, 2, 2), (8, 8, 3, 3), (7, 7, 4, 1)):
            instance = scheme if (q, n, k, t) == (7, 6, 3, 2) else build_scheme(derive_params(q, n, k, t))
            p = instance.params
            for check in measurement_matrix_checks(instance.G_S, instance.V_basis, p.n_eff, p.k, p.t_eff):
                check.name = f"{check.name}[q={q},n={n},k={k},t={t}]"
                results.append(check)
        return results

    def decomposition() -> CheckResult:
        return coset_decomposition_check(scheme, run_protocol(scheme, _random_storage(scheme, 0), 1, 0))

    def rates() -> CheckResult:
        cases = [(8, n, k, t) for n, k, t in valid_tuples(8)] + [(7, 6, 3, 2), (7, 7, 3, 2)]
        return rate_consistency_check(cases)

    def correctness() -> CheckResult:
        df = correctness_sweep([8], seeds=3, m_values=(1, 3), max_n=6)
        failed = df[df["status"] == "fail"]
        return _check(
            "correctness-sample",
            failed.empty,
            f"{int((df['status'] == 'ok').sum())} configurations decoded",
            witness=None if failed.empty else failed.iloc[0][["q", "n", "k", "t", "m"]].tolist(),
        )

    return [
        ("worked-example-runs", worked_example_runs),
        ("measurement-matrices", measurement_matrices),
        ("coset-decomposition", decomposition),
        ("stacked-basis", partial(stacked_basis_check, scheme)),
        ("rate-consistency", rates),
        ("correctness-sample", correctness),
    ]


def small_privacy_scheme() -> QpirScheme:
    """q = 3, n = 3, k = 1, t = 2 with two files, small enough for exact view histograms."""
    return build_scheme(derive_params(3, 3, 1, 2, m=2))


def _privacy_suite(samples: int = 100_000) -> List[Tuple[str, CheckThunk]]:
    scheme = worked_example_scheme()
    small = small_privacy_scheme()

    def empirical() -> CheckResult:
        report = user_privacy_empirical(small, (1, 2), 1, 2, samples=samples, seed=0)
        return _check(
            "user-privacy-empirical",
            report.algebraic_private and not report.distinguishable,
            f"chi2 = {report.statistic:.1f}, dof = {report.dof}, p = {report.p_value:.3f}",
            witness=report.as_dict(),
        )

    def zero_randomness_control() -> CheckResult:
        report = user_privacy_empirical(small, (1, 2), 1, 2, samples=samples, seed=0, zero_randomness=True)
        return _check(
            "user-privacy-zero-randomness-control",
            report.distinguishable,
            f"p = {report.p_value:.3g} without query randomness",
            witness=report.as_dict(),
        )

    def server_privacy() -> CheckResult:
        storage = _random_storage(scheme, 0)
        return server_privacy_check(scheme, storage, perturb_file(storage, 1, np.random.default_rng(1)), 2, 0)

    def target_control() -> CheckResult:
        storage = _random_storage(scheme, 0)
        check = server_privacy_check(scheme, storage, perturb_file(storage, 2, np.random.default_rng(1)), 2, 0)
        return _check("server-privacy-target-control", not check.passed, "perturbing file K changes an outcome")

    return [
        ("collusion-rank", partial(collusion_rank_check, scheme)),
        ("collusion-rank-small", partial(collusion_rank_check, small)),
        ("user-privacy-empirical", empirical),
        ("user-privacy-zero-randomness-control", zero_randomness_control),
        ("server-privacy", server_privacy),
        ("server-privacy-target-control", target_control),
    ]


ORACLE_CASES = ((5, 4, 2, 2), (7, 4, 1, 2), (7, 4, 2, 1))


def _oracle_suite() -> List[Tuple[str, CheckThunk]]:
    def equivalence(q: int, n: int, k: int, t: int) -> CheckResult:
        scheme = build_scheme(derive_params(q, n, k, t, m=2))
        return oracle_equivalence_check(scheme, _random_storage(scheme, 0), 2, 0)

    def gf5_short_codes_absent() -> CheckResult:
        try:
            retrieval_code(GrsCode.from_locators(field_for_order(5), (1, 2, 4, 3), 1), 2)
        except NotFoundError:
            return _check("gf5-length4-dim2-absent", True, "no weakly self-dual [4, 2] GRS code over GF(5)")
        return _check("gf5-length4-dim2-absent", False, "search found a [4, 2] code over GF(5)")

    def state_privacy() -> CheckResult:
        scheme = build_scheme(derive_params(5, 4, 2, 2, m=2))
        storage = _random_storage(scheme, 0)
        return state_privacy_check(scheme, storage, perturb_file(storage, 1, np.random.default_rng(1)), 2, 0)

    return [
        (f"oracle-equivalence[q={q},n={n},k={k},t={t}]", partial(equivalence, q, n, k, t))
        for q, n, k, t in ORACLE_CASES
    ] + [
        ("gf5-length4-dim2-absent", gf5_short_codes_absent),
        ("state-privacy", state_privacy),
    ]


SUITE_BUILDERS: Dict[str, Callable[[], List[Tuple[str, CheckThunk]]]] = {
    "codes": _codes_suite,
    "symplectic": _symplectic_suite,
    "protocol": _protocol_suite,
    "privacy": _privacy_suite,
    "oracle": _oracle_suite,
}


def run_suite(
    name: str,
    timer: Optional[LoopTimer] = None,
    on_check: Optional[Callable[[CheckResult], None]] = None,
) -> VerificationReport:
    """Runs one suite (or "all"); errors raised inside a check are recorded as its failure."""
    if name != "all" and name not in SUITE_BUILDERS:
        raise InvalidParamsError(f"Unknown suite {name!r}, expected one of {SUITE_NAMES + ('all',)}")
    suites = SUITE_NAMES if name == "all" else (name,)
    timer = LoopTimer() if timer is None else timer
    report = VerificationReport(suites=suites)

    for suite in suites:
        for check_name, thunk in SUITE_BUILDERS[suite]():
            with timer.section(check_name) as section:
                try:
                    outcome = thunk()
                except CheckFailedError as e:
                    outcome = CheckResult(check_name, False, str(e), witness=e.witness)
                except QpirError as e:
                    outcome = CheckResult(check_name, False, f"{type(e).__name__}: {e}")
            results = outcome if isinstance(outcome, list) else [outcome]
            for result in results:
                result.suite = suite
                result.elapsed_ms = section.elapsed_time_ms / len(results)
                report.checks.append(result)
                if on_check is not None:
                    on_check(result)
    return report
