"""The coded QPIR scheme over GRS-coded storage with t-collusion.

Storage: m files of 2*beta*k symbols are stacked into an (m*beta) x 2k matrix X, row (i, b)
holding block b of file i, and encoded as Y = X diag(G_C', G_C'). Server s keeps columns s and
n + s of Y.

Each of the rho rounds runs four steps: queries Q = Z G_D + E_(K) M^(r), server responses
A_{p,s} = Y_{p,s} . Q_{p,s}, the stabilizer measurement (simulated by reading the coset of A
modulo span(G_S)), and bookkeeping of the 2c decoded symbols. After the last round every block
of the wanted file is decoded from k symbols by inverting a k x k submatrix of G_C'.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import galois
import numpy as np

from qpir_lab.codes import (
    CartesianPairCode,
    GrsCode,
    StarGeneratorBundle,
    default_locators,
    retrieval_code,
    split_wsd_generator,
    star_grs,
)
from qpir_lab.config.scheme_config import SchemeConfig, SearchConfig
from qpir_lab.errors import (
    DimensionMismatchError,
    IncompleteRoundsError,
    InvalidParamsError,
    NonPrimeError,
    SingularSubmatrixError,
)
from qpir_lab.fields import FieldSpec, field_for_order
from qpir_lab.linalg import (
    MatrixGF,
    block_diag,
    matrix_to_dict,
    pair_index,
    rank,
    vstack,
)
from qpir_lab.symplectic import CosetDecoder


@dataclass(frozen=True)
class SchemeParams:
    """Derived parameters of an instance, after normalization."""

    q: int
    n: int
    k: int
    t: int
    m: int
    t_eff: int
    """Collusion parameter the scheme actually runs with."""
    n_eff: int
    """Number of servers the scheme actually queries (the first n_eff)."""
    c: int
    """n_eff - k - t_eff + 1, symbols per half downloaded per round."""
    beta: int
    """lcm(c, k) / k, rows per file."""
    rho: int
    """lcm(c, k) / c, rounds."""
    g: int
    """c / beta, targeted servers per block per round."""

    @property
    def normalized(self) -> bool:
        return self.t_eff != self.t or self.n_eff != self.n

    @property
    def s_dim(self) -> int:
        """Dimension k + t_eff - 1 of the star-product code S'."""
        return self.k + self.t_eff - 1

    @property
    def targets(self) -> Tuple[int, ...]:
        return tuple(range(1, max(self.c, self.k) + 1))

    @property
    def file_length(self) -> int:
        return 2 * self.beta * self.k

    @property
    def aux_exponent(self) -> int:
        """log_q of the dimension of the maximally mixed factor, 2(k + t_eff - 1) - n_eff."""
        return 2 * self.s_dim - self.n_eff

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def derive_params(q: int, n: int, k: int, t: int, m: int = 1) -> SchemeParams:
    try:
        field_for_order(q)
    except NonPrimeError as e:
        raise InvalidParamsError(str(e)) from e
    if k < 1 or t < 1 or m < 1:
        raise InvalidParamsError(f"Need k, t, m >= 1, got k={k}, t={t}, m={m}")
    if n > q:
        raise InvalidParamsError(f"At most q={q} servers are supported, got n={n}")
    if t > n - k:
        raise InvalidParamsError(f"Need t <= n - k = {n - k}, got t={t}")
    if k + t - 1 >= n:
        raise InvalidParamsError(f"Need k + t - 1 < n, got {k + t - 1} >= {n}")

    n_eff, t_eff = n, t
    if 2 * (k + t - 1) < n:
        if n % 2 == 0:
            t_eff = n // 2 - k + 1
        else:
            n_eff = n - 1
            t_eff = (n + 1) // 2 - k

    c = n_eff - k - t_eff + 1
    lcm = math.lcm(c, k)
    beta = lcm // k
    rho = lcm // c
    params = SchemeParams(
        q=q, n=n, k=k, t=t, m=m, t_eff=t_eff, n_eff=n_eff, c=c, beta=beta, rho=rho, g=c // beta
    )
    assert params.rho * params.c == params.beta * params.k, f"{params}"
    assert n_eff <= 2 * params.s_dim < 2 * n_eff, f"{params}"
    return params


def qpir_rate(params: SchemeParams, transcript: Optional[Transcript] = None) -> Fraction:
    """2 (n_eff - k - t_eff + 1) / n_eff, cross-checked against a transcript's accounting."""
    rate = Fraction(2 * params.c, params.n_eff)
    if transcript is not None:
        measured = transcript.rate
        assert measured == rate, f"Transcript rate {measured} != closed form {rate}"
    return rate


def rate_formula(n: int, k: int, t: int) -> Fraction:
    """min(1, 2 (n - k - t + 1) / n) on the requested (not normalized) parameters."""
    return min(Fraction(1), Fraction(2 * (n - k - t + 1), n))


@dataclass(frozen=True, eq=False)
class RoundSchedule:
    r: int
    blocks: Tuple[Tuple[int, ...], ...]
    """J_r^b for b = 1..beta, 1-based server indices."""
    N: MatrixGF
    """c x n_eff selector, rows e_a for a in J_r ordered by block then position."""

    @functools.cached_property
    def M(self) -> MatrixGF:
        return block_diag(self.N, self.N)

    @property
    def targets(self) -> Tuple[int, ...]:
        return tuple(a for block in self.blocks for a in block)

    @property
    def row_blocks(self) -> Tuple[int, ...]:
        """1-based block owning each row of N."""
        return tuple(b + 1 for b, block in enumerate(self.blocks) for _ in block)


def target_blocks(params: SchemeParams, r: int) -> Tuple[Tuple[int, ...], ...]:
    """Cyclic schedule J_r^b = {((r + b - 2) g + j - 1 mod max(c, k)) + 1 : j in [g]}."""
    if not 1 <= r <= params.rho:
        raise InvalidParamsError(f"Round {r} outside [1, {params.rho}]")
    span = max(params.c, params.k)
    return tuple(
        tuple(((r + b - 2) * params.g + j - 1) % span + 1 for j in range(1, params.g + 1))
        for b in range(1, params.beta + 1)
    )


def schedule(params: SchemeParams, r: int, field: Optional[FieldSpec] = None) -> RoundSchedule:
    field = field_for_order(params.q) if field is None else field
    blocks = target_blocks(params, r)
    N = field.zeros((params.c, params.n_eff))
    for row, a in enumerate(a for block in blocks for a in block):
        N[row, a - 1] = 1
    return RoundSchedule(r=r, blocks=blocks, N=N)


@dataclass(frozen=True, eq=False)
class QpirScheme:
    """Codes and per-round matrices of one instance."""

    params: SchemeParams
    field: FieldSpec
    storage_code: GrsCode
    """C' on all n servers."""
    c_code: GrsCode
    """C' on the n_eff queried servers."""
    d_code: GrsCode
    s_code: GrsCode
    bundle: StarGeneratorBundle

    @functools.cached_property
    def G_C(self) -> MatrixGF:
        return CartesianPairCode(self.c_code).generator

    @functools.cached_property
    def query_code(self) -> CartesianPairCode:
        return CartesianPairCode(self.d_code)

    @functools.cached_property
    def storage_pair(self) -> CartesianPairCode:
        return CartesianPairCode(self.storage_code)

    @property
    def G_D(self) -> MatrixGF:
        return self.query_code.generator

    @property
    def G_S(self) -> MatrixGF:
        return self.bundle.G_S

    @property
    def V_basis(self) -> MatrixGF:
        return self.bundle.H_S

    @functools.cached_property
    def schedules(self) -> Tuple[RoundSchedule, ...]:
        return tuple(schedule(self.params, r, self.field) for r in range(1, self.params.rho + 1))

    @functools.cached_property
    def decoders(self) -> Tuple[CosetDecoder, ...]:
        return tuple(CosetDecoder.from_matrices(self.G_S, s.M) for s in self.schedules)

    @functools.cached_property
    def retrieval_plan(self) -> Tuple[BlockPlan, ...]:
        return block_plans(self.params, self.schedules, self.c_code.generator)

    def with_params(self, params: SchemeParams) -> QpirScheme:
        """The same codes and rounds under params that differ only in t (same t_eff) or m."""
        p = self.params
        if (params.q, params.n, params.k, params.t_eff, params.n_eff) != (p.q, p.n, p.k, p.t_eff, p.n_eff):
            raise InvalidParamsError(f"{params} does not share the codes of {p}")
        scheme = dataclasses.replace(self, params=params)
        # Codes, rounds and decoders do not depend on m or t; share the cached copies.
        for name in ("G_C", "query_code", "storage_pair", "schedules", "decoders", "retrieval_plan"):
            scheme.__dict__[name] = getattr(self, name)
        return scheme

    @classmethod
    def from_config(cls, cfg: SchemeConfig) -> QpirScheme:
        params = derive_params(cfg.q, cfg.n, cfg.k, cfg.t, cfg.m)
        return build_scheme(params, locators=cfg.locators, search=cfg.search)


def build_scheme(
    params: SchemeParams,
    locators: Optional[Sequence[int]] = None,
    search: Optional[SearchConfig] = None,
) -> QpirScheme:
    field = field_for_order(params.q)
    if locators is None:
        locator_array = default_locators(field, params.n)
    else:
        if len(locators) != params.n:
            raise InvalidParamsError(f"Expected {params.n} locators, got {len(locators)}")
        locator_array = field(list(locators))
    storage_code = GrsCode(
        field=field, locators=locator_array, multipliers=field.ones(params.n), dim=params.k
    )
    c_code = storage_code.puncture(params.n_eff)
    d_code = retrieval_code(c_code, params.t_eff, search)
    s_code = star_grs(c_code, d_code)
    return QpirScheme(
        params=params,
        field=field,
        storage_code=storage_code,
        c_code=c_code,
        d_code=d_code,
        s_code=s_code,
        bundle=split_wsd_generator(s_code),
    )


@dataclass(frozen=True, eq=False)
class ServerShare:
    """What server s stores: Y_{1,s} and Y_{2,s}."""

    s: int
    y1: MatrixGF
    y2: MatrixGF

    def respond(self, q1: MatrixGF, q2: MatrixGF) -> Tuple[galois.FieldArray, galois.FieldArray]:
        return self.y1 @ q1, self.y2 @ q2


@dataclass(frozen=True, eq=False)
class StorageSystem:
    code: GrsCode
    X: MatrixGF
    """(m beta) x 2k file matrix."""
    Y: MatrixGF
    """(m beta) x 2n encoded matrix."""
    beta: int

    @property
    def n(self) -> int:
        return self.code.length

    @property
    def m(self) -> int:
        return self.X.shape[0] // self.beta

    def server_share(self, s: int) -> ServerShare:
        if not 1 <= s <= self.n:
            raise IndexError(f"Server {s} outside [1, {self.n}]")
        return ServerShare(s=s, y1=self.Y[:, s - 1], y2=self.Y[:, self.n + s - 1])

    def restrict(self, n_eff: int) -> MatrixGF:
        """Columns held by the first n_eff servers, as an (m beta) x 2 n_eff matrix."""
        return type(self.Y)(
            np.concatenate(
                [self.Y[:, :n_eff].view(np.ndarray), self.Y[:, self.n : self.n + n_eff].view(np.ndarray)],
                axis=1,
            )
        )

    def file(self, i: int) -> MatrixGF:
        if not 1 <= i <= self.m:
            raise InvalidParamsError(f"File index {i} outside [1, {self.m}]")
        start = pair_index(i, 1, self.beta)
        return self.X[start : start + self.beta]

    def with_file(self, i: int, X_i: MatrixGF) -> StorageSystem:
        X = self.X.copy()
        start = pair_index(i, 1, self.beta)
        X[start : start + self.beta] = X_i
        return encode_storage(X, self.code, self.beta)


def encode_storage(X: MatrixGF, code: GrsCode, beta: int = 1) -> StorageSystem:
    if X.ndim != 2 or X.shape[1] != 2 * code.dim:
        raise DimensionMismatchError(f"X must have 2k={2 * code.dim} columns, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[0] % beta != 0:
        raise DimensionMismatchError(f"X must have m*beta rows with beta={beta}, got {X.shape[0]}")
    if type(X) is not code.field.GF:
        raise DimensionMismatchError(f"X must live in {code.field}")
    Y = X @ CartesianPairCode(code).generator
    return StorageSystem(code=code, X=X, Y=Y, beta=beta)


def files_to_matrix(field: FieldSpec, files: Sequence[Sequence[int]], params: SchemeParams) -> MatrixGF:
    """Stacks m files of 2 beta k symbols into X, block b of file i in row (i, b)."""
    if len(files) != params.m:
        raise DimensionMismatchError(f"Expected {params.m} files, got {len(files)}")
    for i, symbols in enumerate(files, start=1):
        if len(symbols) != params.file_length:
            raise DimensionMismatchError(
                f"File {i} has {len(symbols)} symbols, expected 2*beta*k = {params.file_length}"
            )
    X = np.asarray(files, dtype=np.int64).reshape(params.m * params.beta, 2 * params.k)
    return field(X)


def split_segments(
    field: FieldSpec, files: Sequence[Sequence[int]], params: SchemeParams
) -> List[MatrixGF]:
    """Cuts files of L * 2 beta k symbols into L file matrices."""
    lengths = {len(symbols) for symbols in files}
    if len(lengths) != 1 or next(iter(lengths)) % params.file_length != 0 or 0 in lengths:
        raise DimensionMismatchError(
            f"All files must have the same positive multiple of 2*beta*k = {params.file_length} symbols, got lengths {sorted(lengths)}"
        )
    num_segments = next(iter(lengths)) // params.file_length
    return [
        files_to_matrix(
            field,
            [symbols[j * params.file_length : (j + 1) * params.file_length] for symbols in files],
            params,
        )
        for j in range(num_segments)
    ]


def random_files(scheme: QpirScheme, rng: np.random.Generator) -> MatrixGF:
    p = scheme.params
    return scheme.field.random((p.m * p.beta, 2 * p.k), rng)


def selector_matrix(params: SchemeParams, field: FieldSpec, K: int) -> MatrixGF:
    """E_(K): column (p, a) is the basis vector of row (K, ceil(a / g))."""
    E = field.zeros((params.m * params.beta, 2 * params.c))
    for a in range(1, params.c + 1):
        row = pair_index(K, (a - 1) // params.g + 1, params.beta)
        E[row, a - 1] = 1
        E[row, params.c + a - 1] = 1
    return E


@dataclass(frozen=True, eq=False)
class RoundState:
    r: int
    schedule: RoundSchedule
    Z: MatrixGF
    E: MatrixGF
    Q: MatrixGF
    A: Optional[MatrixGF] = None
    o: Optional[MatrixGF] = None

    def as_dict(self, include_queries: bool = False) -> dict:
        d = {
            "r": self.r,
            "blocks": [list(block) for block in self.schedule.blocks],
            "A": None if self.A is None else self.A.view(np.ndarray).tolist(),
            "o": None if self.o is None else self.o.view(np.ndarray).tolist(),
        }
        if include_queries:
            d["Q"] = matrix_to_dict(self.Q)
        return d


def build_queries(scheme: QpirScheme, K: int, r: int, rng: np.random.Generator) -> RoundState:
    params = scheme.params
    if not 1 <= K <= params.m:
        raise InvalidParamsError(f"Desired index K={K} outside [1, {params.m}]")
    round_schedule = scheme.schedules[r - 1] if 1 <= r <= params.rho else schedule(params, r)
    Z = scheme.field.random((params.m * params.beta, 2 * params.t_eff), rng)
    E = selector_matrix(params, scheme.field, K)
    Q = Z @ scheme.G_D + E @ round_schedule.M
    return RoundState(r=r, schedule=round_schedule, Z=Z, E=E, Q=Q)


def server_response(
    storage: StorageSystem, s: int, Q: MatrixGF
) -> Tuple[galois.FieldArray, galois.FieldArray]:
    """(A_{1,s}, A_{2,s}); the server only sees its own share and its two query columns."""
    n_eff = Q.shape[1] // 2
    share = storage.server_share(s)
    return share.respond(Q[:, s - 1], Q[:, n_eff + s - 1])


def collect_responses(storage: StorageSystem, Q: MatrixGF) -> MatrixGF:
    """A = (A_1 | A_2) over the n_eff queried servers."""
    n_eff = Q.shape[1] // 2
    GF = type(Q)
    A = GF.Zeros(2 * n_eff)
    for s in range(1, n_eff + 1):
        A[s - 1], A[n_eff + s - 1] = server_response(storage, s, Q)
    return A


def simulate_measurement(A: MatrixGF, G_S: MatrixGF, M: MatrixGF) -> MatrixGF:
    return CosetDecoder.from_matrices(G_S, M).decode(A)


class Measurement:
    """Turns the response vector of a round into the 2c-symbol outcome."""

    name: str = "abstract"

    def __call__(self, scheme: QpirScheme, state: RoundState) -> MatrixGF:
        raise NotImplementedError()


class CosetMeasurement(Measurement):
    name = "coset"

    def __call__(self, scheme: QpirScheme, state: RoundState) -> MatrixGF:
        return scheme.decoders[state.r - 1].decode(state.A)


@dataclass(frozen=True, eq=False)
class BlockPlan:
    """Where the k symbols of block b are decoded, and the inverse that recovers the block."""

    b: int
    positions: Tuple[int, ...]
    """Sorted 1-based code positions."""
    sources: Tuple[Tuple[int, int], ...]
    """(0-based round, row of N) holding each position."""
    inverse: MatrixGF
    """Inverse of G_C' restricted to the positions."""


def block_plans(
    params: SchemeParams, schedules: Sequence[RoundSchedule], G: MatrixGF
) -> Tuple[BlockPlan, ...]:
    plans = []
    for b in range(1, params.beta + 1):
        sources: Dict[int, Tuple[int, int]] = {}
        for r, round_schedule in enumerate(schedules):
            for row, (a, block) in enumerate(zip(round_schedule.targets, round_schedule.row_blocks)):
                if block == b:
                    sources[a] = (r, row)
        positions = tuple(sorted(sources))
        assert len(positions) == params.k, f"Block {b} collected positions {positions}, expected {params.k}"

        sub = G[:, [a - 1 for a in positions]]
        if rank(sub) < params.k:
            raise SingularSubmatrixError(f"G_C' restricted to {list(positions)} is singular")
        plans.append(
            BlockPlan(
                b=b,
                positions=positions,
                sources=tuple(sources[a] for a in positions),
                inverse=np.linalg.inv(sub),
            )
        )
    return tuple(plans)


def retrieve(scheme: QpirScheme, rounds: Sequence[RoundState]) -> MatrixGF:
    """Decodes X^K (beta x 2k) from the outcomes of all rho rounds, in round order."""
    params = scheme.params
    if len(rounds) != params.rho or any(state.o is None for state in rounds):
        raise IncompleteRoundsError(
            f"Need outcomes of all {params.rho} rounds, got {sum(s.o is not None for s in rounds)}"
        )
    GF = scheme.field.GF
    XK = GF.Zeros((params.beta, 2 * params.k))
    for plan in scheme.retrieval_plan:
        y1 = GF([int(rounds[r].o[row]) for r, row in plan.sources])
        y2 = GF([int(rounds[r].o[params.c + row]) for r, row in plan.sources])
        XK[plan.b - 1, : params.k] = y1 @ plan.inverse
        XK[plan.b - 1, params.k :] = y2 @ plan.inverse
    return XK


@dataclass(frozen=True, eq=False)
class Transcript:
    params: SchemeParams
    field: FieldSpec
    K: int
    seed: int
    rounds: Tuple[RoundState, ...]
    decoded: MatrixGF
    """X^K as a beta x 2k matrix."""
    measurement: str

    @property
    def q_in(self) -> int:
        """Qudits sent to the servers."""
        return len(self.rounds) * self.params.n_eff

    @property
    def q_out(self) -> int:
        """Qudits downloaded from the servers."""
        return len(self.rounds) * self.params.n_eff

    @property
    def retrieved_symbols(self) -> int:
        """File symbols decoded, 2 beta k."""
        return int(self.decoded.size)

    @property
    def rate(self) -> Fraction:
        # log2(q) cancels between file size and downloaded dimension.
        return Fraction(self.retrieved_symbols, self.q_out)

    @property
    def decoded_symbols(self) -> List[int]:
        return self.decoded.view(np.ndarray).reshape(-1).tolist()

    def as_dict(self, include_queries: bool = False) -> dict:
        return {
            "params": self.params.as_dict(),
            "field": self.field.as_dict(),
            "K": self.K,
            "seed": self.seed,
            "measurement": self.measurement,
            "rounds": [state.as_dict(include_queries) for state in self.rounds],
            "decoded": self.decoded_symbols,
            "q_in": self.q_in,
            "q_out": self.q_out,
            "retrieved_symbols": self.retrieved_symbols,
            "rate": {"numerator": self.rate.numerator, "denominator": self.rate.denominator},
        }

    def to_json(self, include_queries: bool = False) -> str:
        return json.dumps(self.as_dict(include_queries), indent=2) + "\n"


def _check_storage(scheme: QpirScheme, storage: StorageSystem) -> None:
    p = scheme.params
    if storage.n != p.n or storage.code.dim != p.k or storage.beta != p.beta or storage.m != p.m:
        raise DimensionMismatchError(
            f"Storage (n={storage.n}, k={storage.code.dim}, beta={storage.beta}, m={storage.m}) "
            f"does not match the scheme (n={p.n}, k={p.k}, beta={p.beta}, m={p.m})"
        )


def run_protocol(
    scheme: QpirScheme,
    storage: StorageSystem,
    K: int,
    seed: int,
    measurement: Optional[Measurement] = None,
) -> Transcript:
    """Runs all rho rounds and decodes X^K."""
    _check_storage(scheme, storage)
    measurement = CosetMeasurement() if measurement is None else measurement
    rng = np.random.default_rng(seed)
    rounds = []
    for r in range(1, scheme.params.rho + 1):
        state = build_queries(scheme, K, r, rng)
        state = dataclasses.replace(state, A=collect_responses(storage, state.Q))
        state = dataclasses.replace(state, o=measurement(scheme, state))
        rounds.append(state)

    transcript = Transcript(
        params=scheme.params,
        field=scheme.field,
        K=K,
        seed=seed,
        rounds=tuple(rounds),
        decoded=retrieve(scheme, rounds),
        measurement=measurement.name,
    )
    qpir_rate(scheme.params, transcript)
    return transcript


@dataclass(frozen=True, eq=False)
class BatchOutcome:
    Ks: np.ndarray
    outcomes: MatrixGF
    """rho x S x 2c coset labels."""
    decoded: MatrixGF
    """S x beta x 2k."""
    correct: np.ndarray
    """Whether run s decoded X^(K_s) exactly."""

    @property
    def num_runs(self) -> int:
        return int(self.Ks.shape[0])

    @property
    def num_failures(self) -> int:
        return int(np.count_nonzero(~self.correct))


def run_protocol_batch(
    scheme: QpirScheme, X: MatrixGF, Ks: np.ndarray, Z: MatrixGF
) -> BatchOutcome:
    """S independent retrievals with the coset measurement, stacked along a leading axis.

    Run s stores X[s], wants file Ks[s] and draws Z[r, s] in round r; it goes through the same
    queries, responses, coset labels and block decoding as ``run_protocol``.
    """
    p = scheme.params
    GF = scheme.field.GF
    S = X.shape[0]
    rows = p.m * p.beta
    Ks = np.asarray(Ks, dtype=np.int64)
    if X.shape != (S, rows, 2 * p.k) or Z.shape != (p.rho, S, rows, 2 * p.t_eff) or Ks.shape != (S,):
        raise DimensionMismatchError(
            f"Expected X {(S, rows, 2 * p.k)}, Z {(p.rho, S, rows, 2 * p.t_eff)} and {S} indices, "
            f"got {X.shape}, {Z.shape} and {Ks.shape}"
        )
    if np.any((Ks < 1) | (Ks > p.m)):
        raise InvalidParamsError(f"Desired indices must lie in [1, {p.m}], got {sorted(set(Ks.tolist()))}")

    Y = (X.reshape(S * rows, 2 * p.k) @ scheme.storage_pair.generator).reshape(
        S, rows, 2 * p.n
    )
    Y = Y[:, :, np.concatenate([np.arange(p.n_eff), p.n + np.arange(p.n_eff)])]
    E = GF(np.stack([selector_matrix(p, scheme.field, K).view(np.ndarray) for K in range(1, p.m + 1)]))

    labels = []
    for r, (round_schedule, decoder) in enumerate(zip(scheme.schedules, scheme.decoders)):
        EM = (E.reshape(p.m * rows, 2 * p.c) @ round_schedule.M).reshape(p.m, rows, 2 * p.n_eff)
        Q = (Z[r].reshape(S * rows, 2 * p.t_eff) @ scheme.G_D).reshape(S, rows, 2 * p.n_eff) + EM[Ks - 1]
        A = np.add.reduce(Y * Q, axis=1)
        labels.append(decoder.decode(A).view(np.ndarray))
    outcomes = GF(np.stack(labels))

    by_run = outcomes.transpose(1, 0, 2)
    decoded = GF.Zeros((S, p.beta, 2 * p.k))
    for plan in scheme.retrieval_plan:
        r_index = [r for r, _ in plan.sources]
        y1 = by_run[:, r_index, [row for _, row in plan.sources]]
        y2 = by_run[:, r_index, [p.c + row for _, row in plan.sources]]
        decoded[:, plan.b - 1, : p.k] = y1 @ plan.inverse
        decoded[:, plan.b - 1, p.k :] = y2 @ plan.inverse

    wanted = X[np.arange(S)[:, np.newaxis], (Ks - 1)[:, np.newaxis] * p.beta + np.arange(p.beta)]
    correct = np.all(decoded == wanted, axis=(1, 2))
    return BatchOutcome(Ks=Ks, outcomes=outcomes, decoded=decoded, correct=correct)


def random_batch(scheme: QpirScheme, num_runs: int, rng: np.random.Generator) -> BatchOutcome:
    """num_runs seeded runs on fresh random files, run s wanting file s mod m + 1."""
    p = scheme.params
    rows = p.m * p.beta
    X = scheme.field.random((num_runs, rows, 2 * p.k), rng)
    Z = scheme.field.random((p.rho, num_runs, rows, 2 * p.t_eff), rng)
    return run_protocol_batch(scheme, X, np.arange(num_runs) % p.m + 1, Z)


@dataclass(frozen=True, eq=False)
class SegmentedTranscript:
    """One transcript per segment; all segments reuse the same seed and hence queries."""

    transcripts: Tuple[Transcript, ...]

    @property
    def decoded_symbols(self) -> List[int]:
        return [x for transcript in self.transcripts for x in transcript.decoded_symbols]

    @property
    def rate(self) -> Fraction:
        return Fraction(
            sum(t.retrieved_symbols for t in self.transcripts),
            sum(t.q_out for t in self.transcripts),
        )

    def as_dict(self, include_queries: bool = False) -> dict:
        return {
            "segments": [t.as_dict(include_queries) for t in self.transcripts],
            "decoded": self.decoded_symbols,
            "rate": {"numerator": self.rate.numerator, "denominator": self.rate.denominator},
        }

    def to_json(self, include_queries: bool = False) -> str:
        return json.dumps(self.as_dict(include_queries), indent=2) + "\n"


def run_segmented_protocol(
    scheme: QpirScheme,
    segments: Sequence[MatrixGF],
    K: int,
    seed: int,
    measurement: Optional[Measurement] = None,
) -> SegmentedTranscript:
    transcripts = tuple(
        run_protocol(
            scheme,
            encode_storage(X, scheme.storage_code, scheme.params.beta),
            K,
            seed,
            measurement,
        )
        for X in segments
    )
    return SegmentedTranscript(transcripts=transcripts)
