import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from qpir_lab.config.scheme_config import SchemeConfig
from qpir_lab.errors import (
    DimensionMismatchError,
    IncompleteRoundsError,
    InvalidParamsError,
)
from qpir_lab.protocol import (
    Measurement,
    QpirScheme,
    build_queries,
    build_scheme,
    collect_responses,
    derive_params,
    encode_storage,
    files_to_matrix,
    qpir_rate,
    random_batch,
    random_files,
    rate_formula,
    retrieve,
    run_protocol,
    run_protocol_batch,
    run_segmented_protocol,
    schedule,
    selector_matrix,
    server_response,
    split_segments,
    target_blocks,
)


def test_derive_params_worked_instance(worked_scheme):
    p = worked_scheme.params
    assert (p.c, p.beta, p.rho, p.g) == (2, 2, 3, 1)
    assert (p.t_eff, p.n_eff) == (2, 6)
    assert not p.normalized
    assert p.file_length == 12
    assert p.aux_exponent == 2


def test_derive_params_normalization():
    p = derive_params(8, 8, 2, 1)
    assert (p.t_eff, p.n_eff, p.c) == (3, 8, 4)
    assert qpir_rate(p) == 1

    p = derive_params(8, 7, 1, 1)
    assert p.normalized
    assert (p.n_eff, p.t_eff, p.c) == (6, 3, 3)

    p = derive_params(8, 6, 2, 2)
    assert not p.normalized
    assert (p.c, p.beta, p.rho, p.file_length) == (3, 3, 2, 12)


@pytest.mark.parametrize(
    "q,n,k,t,m",
    [
        (6, 4, 1, 1, 1),  # q not a prime power
        (7, 6, 3, 4, 1),  # t > n - k
        (7, 8, 2, 2, 1),  # n > q
        (7, 6, 0, 2, 1),
        (7, 6, 3, 2, 0),
    ],
)
def test_derive_params_invalid(q, n, k, t, m):
    with pytest.raises(InvalidParamsError):
        derive_params(q, n, k, t, m)


def test_rate_formula():
    assert rate_formula(6, 3, 2) == Fraction(2, 3)
    assert rate_formula(8, 2, 1) == 1
    assert rate_formula(6, 1, 1) == 1
    assert rate_formula(5, 2, 2) == Fraction(4, 5)


def test_schedule_blocks(worked_scheme):
    p = worked_scheme.params
    assert target_blocks(p, 1) == ((1,), (2,))
    assert target_blocks(p, 2) == ((2,), (3,))
    assert target_blocks(p, 3) == ((3,), (1,))
    with pytest.raises(InvalidParamsError):
        target_blocks(p, 4)

    s = schedule(p, 2)
    assert s.targets == (2, 3)
    assert s.row_blocks == (1, 2)
    assert s.N.tolist() == [[0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0]]
    assert s.M.shape == (4, 12)


@pytest.mark.parametrize("q,n,k,t", [(7, 6, 3, 2), (8, 6, 2, 2), (16, 9, 3, 3), (8, 7, 1, 1)])
def test_every_block_sees_k_distinct_positions(q, n, k, t):
    p = derive_params(q, n, k, t)
    for b in range(p.beta):
        flat = [a for r in range(1, p.rho + 1) for a in target_blocks(p, r)[b]]
        assert len(flat) == len(set(flat)) == p.k


def test_selector_matrix(worked_scheme):
    E = selector_matrix(worked_scheme.params, worked_scheme.field, 2)
    assert E.shape == (4, 4)
    expected = np.zeros((4, 4), dtype=int)
    expected[2, 0] = expected[2, 2] = 1
    expected[3, 1] = expected[3, 3] = 1
    assert E.tolist() == expected.tolist()


def test_worked_run(worked_scheme, worked_storage):
    transcript = run_protocol(worked_scheme, worked_storage, K=2, seed=0)
    assert len(transcript.rounds) == 3
    assert transcript.q_in == transcript.q_out == 18
    assert transcript.retrieved_symbols == 12
    assert transcript.rate == Fraction(2, 3)
    assert np.array_equal(transcript.decoded, worked_storage.file(2))
    assert transcript.measurement == "coset"


def test_query_structure(worked_scheme):
    rng = np.random.default_rng(3)
    state = build_queries(worked_scheme, 1, 1, rng)
    assert state.Q.shape == (4, 12)
    assert np.array_equal(state.Q - state.E @ state.schedule.M, state.Z @ worked_scheme.G_D)


def test_server_response_uses_own_columns(worked_scheme, worked_storage):
    state = build_queries(worked_scheme, 1, 1, np.random.default_rng(0))
    A = collect_responses(worked_storage, state.Q)
    Y = worked_storage.Y
    a1, a2 = server_response(worked_storage, 4, state.Q)
    assert a1 == Y[:, 3] @ state.Q[:, 3]
    assert a2 == Y[:, 9] @ state.Q[:, 9]
    assert (A[3], A[9]) == (a1, a2)


def test_runs_are_deterministic(worked_scheme, worked_storage):
    first = run_protocol(worked_scheme, worked_storage, K=1, seed=11)
    second = run_protocol(worked_scheme, worked_storage, K=1, seed=11)
    assert first.to_json(include_queries=True) == second.to_json(include_queries=True)
    other = run_protocol(worked_scheme, worked_storage, K=1, seed=12)
    assert first.decoded_symbols == other.decoded_symbols


def test_transcript_json(worked_scheme, worked_storage):
    d = run_protocol(worked_scheme, worked_storage, K=1, seed=0).as_dict()
    assert d["rate"] == {"numerator": 2, "denominator": 3}
    assert d["rounds"][2]["blocks"] == [[3], [1]]
    assert "Q" not in d["rounds"][0]
    assert len(d["decoded"]) == 12


def test_run_errors(worked_scheme, worked_storage):
    with pytest.raises(InvalidParamsError):
        run_protocol(worked_scheme, worked_storage, K=3, seed=0)
    with pytest.raises(InvalidParamsError):
        build_queries(worked_scheme, 0, 1, np.random.default_rng(0))

    single = encode_storage(worked_storage.file(1), worked_scheme.storage_code, beta=2)
    with pytest.raises(DimensionMismatchError):
        run_protocol(worked_scheme, single, K=1, seed=0)

    transcript = run_protocol(worked_scheme, worked_storage, K=1, seed=0)
    with pytest.raises(IncompleteRoundsError):
        retrieve(worked_scheme, transcript.rounds[:2])


def test_rate_counts_decoded_symbols(worked_scheme, worked_storage):
    transcript = run_protocol(worked_scheme, worked_storage, K=1, seed=0)
    assert transcript.retrieved_symbols == worked_scheme.params.file_length
    assert qpir_rate(worked_scheme.params, transcript) == Fraction(2, 3)
    # 12 symbols over the 12 qudits of two rounds no longer matches 2/3.
    short = dataclasses.replace(transcript, rounds=transcript.rounds[:2])
    assert short.rate == 1
    with pytest.raises(AssertionError):
        qpir_rate(worked_scheme.params, short)


def _stacked_inputs(scheme, seeds):
    p = scheme.params
    storages, Z = [], []
    for seed in seeds:
        files = random_files(scheme, np.random.default_rng(100 + seed))
        storages.append(encode_storage(files, scheme.storage_code, p.beta))
        rng = np.random.default_rng(seed)
        Z.append([scheme.field.random((p.m * p.beta, 2 * p.t_eff), rng).view(np.ndarray) for _ in range(p.rho)])
    X = scheme.field(np.stack([storage.X.view(np.ndarray) for storage in storages]))
    Z = scheme.field(np.stack(Z, axis=1))
    return storages, X, Z


@pytest.mark.parametrize("q,n,k,t", [(7, 6, 3, 2), (8, 6, 2, 2), (8, 7, 1, 1)])
def test_batch_matches_single_runs(q, n, k, t):
    scheme = build_scheme(derive_params(q, n, k, t, m=3))
    seeds = [0, 1, 2, 3, 4]
    storages, X, Z = _stacked_inputs(scheme, seeds)
    Ks = np.array([seed % 3 + 1 for seed in seeds])
    batch = run_protocol_batch(scheme, X, Ks, Z)
    assert batch.num_runs == 5 and batch.num_failures == 0
    for s, seed in enumerate(seeds):
        transcript = run_protocol(scheme, storages[s], int(Ks[s]), seed)
        assert np.array_equal(batch.decoded[s], transcript.decoded)
        for r, state in enumerate(transcript.rounds):
            assert np.array_equal(batch.outcomes[r, s], state.o)


def test_batch_flags_wrong_decoding(worked_scheme):
    _, X, Z = _stacked_inputs(worked_scheme, range(10))
    Ks = np.arange(10) % 2 + 1
    assert run_protocol_batch(worked_scheme, X, Ks, Z).correct.all()
    # Rounds 1 and 3 read with each other's coset basis.
    tampered = worked_scheme.with_params(worked_scheme.params)
    tampered.__dict__["decoders"] = worked_scheme.decoders[::-1]
    assert run_protocol_batch(tampered, X, Ks, Z).num_failures > 0


def test_batch_errors(worked_scheme):
    _, X, Z = _stacked_inputs(worked_scheme, [0, 1])
    with pytest.raises(InvalidParamsError):
        run_protocol_batch(worked_scheme, X, np.array([1, 3]), Z)
    with pytest.raises(DimensionMismatchError):
        run_protocol_batch(worked_scheme, X, np.array([1]), Z)
    with pytest.raises(DimensionMismatchError):
        run_protocol_batch(worked_scheme, X, np.array([1, 2]), Z[:2])


def test_random_batch_is_seeded(worked_scheme):
    first = random_batch(worked_scheme, 20, np.random.default_rng(5))
    second = random_batch(worked_scheme, 20, np.random.default_rng(5))
    assert first.num_failures == 0
    assert first.Ks.tolist() == [s % 2 + 1 for s in range(20)]
    assert np.array_equal(first.decoded, second.decoded)


def test_with_params_shares_codes():
    base = build_scheme(derive_params(8, 8, 2, 1, m=4))
    other = base.with_params(derive_params(8, 8, 2, 2, m=1))
    assert other.params.t == 2 and other.params.m == 1
    assert other.decoders is base.decoders
    assert other.retrieval_plan is base.retrieval_plan
    assert other.d_code is base.d_code
    with pytest.raises(InvalidParamsError):
        base.with_params(derive_params(8, 8, 3, 1))


def test_encode_storage_errors(worked_scheme, gf7):
    code = worked_scheme.storage_code
    with pytest.raises(DimensionMismatchError):
        encode_storage(gf7.zeros((4, 5)), code, beta=2)
    with pytest.raises(DimensionMismatchError):
        encode_storage(gf7.zeros((3, 6)), code, beta=2)


def test_base_measurement_is_abstract(worked_scheme):
    state = build_queries(worked_scheme, 1, 1, np.random.default_rng(0))
    with pytest.raises(NotImplementedError):
        Measurement()(worked_scheme, state)


def test_files_round_trip_through_run(worked_scheme, gf7):
    files = [[i % 7 for i in range(12)], [(3 * i + 1) % 7 for i in range(12)]]
    X = files_to_matrix(gf7, files, worked_scheme.params)
    assert X.shape == (4, 6)
    storage = encode_storage(X, worked_scheme.storage_code, worked_scheme.params.beta)
    for K in (1, 2):
        assert run_protocol(worked_scheme, storage, K, seed=5).decoded_symbols == files[K - 1]


def test_segmented_run(worked_scheme, gf7):
    rng = np.random.default_rng(1)
    files = [rng.integers(0, 7, size=36).tolist() for _ in range(2)]
    segments = split_segments(gf7, files, worked_scheme.params)
    assert len(segments) == 3
    result = run_segmented_protocol(worked_scheme, segments, K=2, seed=0)
    assert result.decoded_symbols == files[1]
    assert result.rate == Fraction(2, 3)
    assert len(result.as_dict()["segments"]) == 3

    with pytest.raises(DimensionMismatchError):
        split_segments(gf7, [files[0], files[1][:30]], worked_scheme.params)
    with pytest.raises(DimensionMismatchError):
        split_segments(gf7, [files[0][:13], files[1][:13]], worked_scheme.params)


def test_normalized_run_uses_first_servers():
    scheme = build_scheme(derive_params(8, 7, 1, 1, m=2))
    assert scheme.c_code.length == 6
    storage = encode_storage(
        random_files(scheme, np.random.default_rng(0)), scheme.storage_code, scheme.params.beta
    )
    assert storage.n == 7
    assert storage.restrict(6).shape == (scheme.params.m * scheme.params.beta, 12)
    transcript = run_protocol(scheme, storage, K=2, seed=0)
    assert transcript.q_out == 6
    assert transcript.rate == 1
    assert np.array_equal(transcript.decoded, storage.file(2))


def test_scheme_from_config():
    scheme = QpirScheme.from_config(SchemeConfig(q=7, n=6, k=3, t=2, m=2, locators=(1, 3, 2, 6, 4, 5)))
    assert scheme.params.rho == 3
    with pytest.raises(InvalidParamsError):
        QpirScheme.from_config(SchemeConfig(q=7, n=6, k=3, t=2, m=2, locators=(1, 3, 2)))


@pytest.mark.slow
@pytest.mark.parametrize(
    "q,n,k,t",
    [(7, 6, 3, 2), (7, 4, 1, 2), (7, 4, 2, 1), (8, 6, 2, 2), (8, 8, 2, 1), (8, 7, 1, 1), (16, 9, 3, 3)],
)
@pytest.mark.parametrize("m", [1, 3])
def test_correctness_over_seeds(q, n, k, t, m):
    scheme = build_scheme(derive_params(q, n, k, t, m))
    for seed in range(10):
        rng = np.random.default_rng(seed)
        storage = encode_storage(random_files(scheme, rng), scheme.storage_code, scheme.params.beta)
        for K in range(1, m + 1):
            transcript = run_protocol(scheme, storage, K, seed)
            assert np.array_equal(transcript.decoded, storage.file(K))
            assert transcript.rate == qpir_rate(scheme.params)
