import numpy as np
import pytest

from fisher_quant_bench.errors import ConfigurationError, InvalidSampleError, ParseError, ProtocolInvalidError
from fisher_quant_bench.models import GaussianLocation, ProductBernoulli, finite_view
from fisher_quant_bench.quantizers import (
    CellPartition,
    ConstBit,
    CoordinateSign,
    DiscreteTable,
    ExplicitTree,
    SequentialStrategy,
    SignBit,
    TableBit,
    decode_transcript,
    enumerate_transcripts,
    from_messages,
    identity_quantizer,
    induced_tree,
    message_likelihood,
    message_moments,
    parse_bit,
    quantizer_from_json,
    random_valid_tree,
    run_sequential,
    run_tree,
    sign_quantizer,
    table_from_csv,
    transcript_probability,
    tree_from_json,
    tree_to_json,
    uniform_quantizer,
    validate_tree,
)


def test_identity_quantizer_uses_enough_bits(discrete2):
    q = identity_quantizer(discrete2)
    assert q.k == 2
    assert q.num_messages == 4
    assert [q.quantize(x) for x in (1, 2, 3)] == [1, 2, 3]


def test_table_rows_must_be_distributions():
    with pytest.raises(ConfigurationError):
        DiscreteTable(1, (1, 2), np.array([[0.5, 0.4], [1.0, 0.0]]))


def test_cell_partition_messages():
    q = CellPartition(2, (-1.0, 0.0, 1.0))
    assert [q.quantize(x) for x in (-2.0, -0.5, 0.5, 2.0)] == [1, 2, 3, 4]
    assert list(q.encode_batch([-2.0, 0.5])) == [1, 3]
    with pytest.raises(ConfigurationError):
        CellPartition(2, (1.0, 0.0))
    with pytest.raises(ConfigurationError):
        CellPartition(1, (-1.0, 0.0, 1.0))


def test_sign_quantizer():
    q = sign_quantizer(0.0)
    assert q.quantize(-0.3) == 1
    assert q.quantize(0.3) == 2


def test_coordinate_sign_message_layout():
    q = CoordinateSign(2, (0, 2), (0.0, 0.0))
    assert q.quantize(np.array([1.0, -5.0, -1.0])) == 2
    assert q.quantize(np.array([-1.0, 5.0, 1.0])) == 3
    assert list(q.encode_batch(np.array([[1.0, 0.0, 1.0], [-1.0, 0.0, -1.0]]))) == [4, 1]


def test_message_probabilities_sum_to_one(discrete2, rng):
    table = DiscreteTable(2, (1, 2, 3), rng.dirichlet(np.ones(4), size=3))
    probs, moments = message_moments(table, discrete2, [0.2, 0.3])
    assert probs.sum() == pytest.approx(1.0)
    assert np.allclose(moments.sum(axis=0), 0.0, atol=1e-12)
    assert message_likelihood(table, discrete2, [0.2, 0.3], 1) == pytest.approx(probs[0])


def test_coordinate_sign_likelihood_on_gaussian():
    model = GaussianLocation(2, 1.0)
    probs, _ = message_moments(CoordinateSign(2, (0, 1), (0.0, 0.0)), model, [0.0, 0.0])
    assert np.allclose(probs, 0.25)


def test_random_valid_tree_passes_validation(rng):
    tree = random_valid_tree(3, 2, rng)
    report = validate_tree(tree, 3, 2)
    assert report['passed']
    assert report['violations'] == []


def test_invalid_labels_are_reported_not_raised():
    tree = ExplicitTree(2, 1, [1, 1, 1], [ConstBit(0.5)] * 3)
    report = tree.validity()
    assert not report['passed']
    assert len(report['violations']) == 4
    failed = {c['name'] for c in report['checks'] if not c['passed']}
    assert failed == {'Labels Per Path'}
    with pytest.raises(ProtocolInvalidError):
        run_tree(tree, [1, 2], np.random.default_rng(0))


def test_out_of_range_bits_are_reported():
    tree = ExplicitTree(2, 1, [1, 2, 2], [ConstBit(1.5), ConstBit(0.5), ConstBit(0.5)])
    failed = {c['name'] for c in tree.validity()['checks'] if not c['passed']}
    assert failed == {'Bit Ranges'}


def test_tree_needs_full_binary_shape():
    with pytest.raises(ParseError):
        ExplicitTree(1, 1, [1, 1], [ConstBit(0.5)] * 2)


def test_decode_transcript_of_induced_tree(discrete2):
    q = identity_quantizer(discrete2)
    tree = induced_tree([q, q])
    assert decode_transcript(tree, (1, 0, 0, 1)) == [3, 2]


def test_induced_tree_matches_direct_quantization(discrete2, rng):
    q = identity_quantizer(discrete2)
    tree = induced_tree([q, q, q])
    samples = [3, 1, 2]
    y = run_tree(tree, samples, rng)
    assert decode_transcript(tree, y) == [q.quantize(x) for x in samples]


def test_transcript_probabilities_sum_to_one(bernoulli_dense, rng):
    tree = random_valid_tree(2, 2, rng, lambda r: TableBit(tuple(r.random(4))))
    theta = [0.4, 0.6]
    view = finite_view(bernoulli_dense, theta)
    total = sum(transcript_probability(tree, bernoulli_dense, theta, y) for y, _ in enumerate_transcripts(tree, view))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_parse_bit_catalog():
    assert parse_bit('sign@0.5') == SignBit(0.5)
    assert parse_bit('const@0.25') == ConstBit(0.25)
    assert parse_bit('table@[0.1, 0.9]') == TableBit((0.1, 0.9))
    with pytest.raises(ParseError):
        parse_bit('wiggle@3')
    with pytest.raises(ParseError):
        parse_bit('sign')


def test_tree_json_keeps_labels_and_bits(rng):
    tree = random_valid_tree(2, 1, rng, lambda r: SignBit(float(r.normal())))
    again = tree_from_json(tree_to_json(tree))
    assert again.labels == tree.labels
    assert again.bits == tree.bits


def test_tree_from_json_missing_field():
    with pytest.raises(ParseError):
        tree_from_json('{"n": 1, "k": 1}')


def test_run_sequential_with_fixed_quantizer(rng):
    q = sign_quantizer(0.0)
    messages = run_sequential(SequentialStrategy(1, q), [-1.0, 2.0, 0.5], rng)
    assert messages == [1, 2, 2]


def test_sequential_strategy_checks_bit_count():
    strategy = SequentialStrategy(1, lambda history: CellPartition(2, (0.0,)))
    with pytest.raises(ProtocolInvalidError):
        strategy.quantizer_for(())


def test_sequential_strategy_table_overrides_default():
    special = sign_quantizer(1.0)
    strategy = SequentialStrategy(1, sign_quantizer(0.0), {(2,): special})
    assert strategy.quantizer_for([2]) is special


def test_quantizer_from_json():
    model = ProductBernoulli(2, 'dense', 0.25)
    q = quantizer_from_json('{"type": "table", "k": 1, "rows": [[1, 0], [1, 0], [0, 1], [0, 1]]}', model)
    assert q.quantize((1, 0)) == 2
    with pytest.raises(ConfigurationError):
        quantizer_from_json({"type": "lloyd"}, model)
    with pytest.raises(ParseError):
        quantizer_from_json("{", model)


def test_uniform_and_assigned_tables(discrete2):
    theta = [0.125, 0.125]
    uniform = uniform_quantizer(discrete2.support(), 2)
    assert message_likelihood(uniform, discrete2, theta, 3) == pytest.approx(0.25)
    assigned = from_messages(discrete2.support(), [2, 1, 2], 1)
    assert assigned.matrix.tolist() == [[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
    assert message_likelihood(assigned, discrete2, theta, 1) == pytest.approx(0.125)


def test_table_from_csv(tmp_path, discrete2):
    path = tmp_path / "table.csv"
    path.write_text("1,0\n0,1\n0.5,0.5\n", encoding="utf-8")
    table = table_from_csv(str(path), discrete2.support(), 1)
    assert message_likelihood(table, discrete2, [0.125, 0.125], 2) == pytest.approx(0.125 + 0.375)


def test_table_from_csv_errors(tmp_path, discrete2):
    path = tmp_path / "table.csv"
    path.write_text("a,b\n", encoding="utf-8")
    with pytest.raises(ParseError):
        table_from_csv(str(path), discrete2.support(), 1)
    with pytest.raises(ParseError):
        table_from_csv(str(tmp_path / "missing.csv"), discrete2.support(), 1)


def test_cell_partition_rejects_vector_samples():
    q = CellPartition(1, (0.0,))
    assert list(q.encode_batch(np.array([[-1.0], [1.0]]))) == [1, 2]
    with pytest.raises(InvalidSampleError) as info:
        q.encode_batch(np.zeros((5, 2)))
    assert info.value.kind == "sample"


def test_table_batch_rejects_unknown_categories(discrete2):
    q = identity_quantizer(discrete2)
    assert list(q.encode_batch([1, 2, 3, 3])) == [1, 2, 3, 3]
    for batch in ([1, 5], [0], [-1, 2], [1.5]):
        with pytest.raises(InvalidSampleError):
            q.encode_batch(batch)


def test_sign_likelihood_at_one():
    model = GaussianLocation(1, 1.0)
    q = sign_quantizer(0.0)
    assert message_likelihood(q, model, [1.0], 2) == pytest.approx(0.841345, abs=1e-6)
    assert message_likelihood(q, model, [1.0], 1) == pytest.approx(1.0 - 0.841345, abs=1e-6)


def test_single_node_transcript_is_the_message_likelihood(discrete2, gaussian1):
    theta = [0.2, 0.3]
    q = identity_quantizer(discrete2)
    tree = induced_tree([q])
    for m in (1, 2, 3):
        y = ((m - 1) >> 1 & 1, (m - 1) & 1)
        assert transcript_probability(tree, discrete2, theta, y) == pytest.approx(
            message_likelihood(q, discrete2, theta, m), abs=1e-12)
    sign_tree = induced_tree([sign_quantizer(0.0)])
    assert transcript_probability(sign_tree, gaussian1, [1.0], (1,)) == pytest.approx(
        message_likelihood(sign_quantizer(0.0), gaussian1, [1.0], 2), abs=1e-10)


@pytest.mark.parametrize("p, expected", [(1.0, (1, 1)), (0.0, (0, 0))])
def test_run_tree_with_constant_bits(p, expected, rng):
    tree = ExplicitTree(2, 1, [1, 2, 2], [ConstBit(p)] * 3)
    assert run_tree(tree, [1, 2], rng) == expected
    assert decode_transcript(tree, expected) == [expected[0] + 1, expected[1] + 1]
