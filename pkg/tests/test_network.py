import numpy as np
import pytest

from minwidth import mono1d, uoe1d
from minwidth.errors import ParseError, StructuralError
from minwidth.network import (
    ABS,
    FLOOR,
    IDENTITY,
    RELU,
    UOE,
    ActivationKind,
    Affine,
    Layer,
    Network,
    compose,
    deserialize,
    eval_batch,
    eval_network,
    leaky,
    serialize,
    uniform_layer,
)


def width1(w, b, act, fw=1.0, fb=0.0):
    return Network(
        (uniform_layer(np.array([[w]]), np.array([b]), act),),
        Affine(np.array([[fw]]), np.array([fb])),
        1,
    )


class TestEval:
    def test_identity_layer(self):
        net = Network(
            (uniform_layer(np.eye(2), np.zeros(2), IDENTITY),),
            Affine(np.eye(2), np.zeros(2)),
            2,
        )
        assert np.array_equal(net([3.0, -1.0]), [3.0, -1.0])

    def test_leaky_relu_neuron(self):
        net = width1(1.0, 0.0, leaky(0.5))
        assert net([-2.0])[0] == -1.0

    def test_floor_neuron(self):
        net = width1(2.0, 0.5, FLOOR)
        assert net([0.3])[0] == 1.0  # floor(1.1)

    def test_dimension_mismatch(self):
        net = width1(1.0, 0.0, RELU)
        with pytest.raises(StructuralError):
            eval_network(net, [1.0, 2.0])

    def test_batch_matches_pointwise(self):
        rng = np.random.default_rng(0)
        net = Network(
            (
                Layer(rng.normal(size=(3, 2)), rng.normal(size=3), (RELU, ABS, leaky(0.25))),
                Layer(rng.normal(size=(2, 3)), rng.normal(size=2), (IDENTITY, RELU)),
            ),
            Affine(rng.normal(size=(2, 2)), rng.normal(size=2)),
            3,
        )
        xs = rng.normal(size=(50, 2))
        batch = eval_batch(net, xs)
        for i, x in enumerate(xs):
            # BLAS may sum differently for different batch shapes; only
            # bit-exactness within one call is guaranteed
            assert np.allclose(batch[i], net(x), rtol=0.0, atol=1e-12)


class TestActivationTable:
    def test_closed_forms_on_grid(self):
        z = np.linspace(-10.0, 10.0, 10001)
        assert np.array_equal(RELU.scalar(z), np.maximum(z, 0.0))
        assert np.array_equal(ABS.scalar(z), np.abs(z))
        assert np.array_equal(FLOOR.scalar(z), np.floor(z))
        assert np.array_equal(ActivationKind("Step").scalar(z), (z > 0).astype(float))
        a = leaky(0.25).scalar(z)
        assert np.array_equal(a, np.where(z >= 0, z, 0.25 * z))
        assert np.array_equal(UOE.scalar(z), uoe1d.uoe_eval(z))
        assert np.array_equal(IDENTITY.scalar(z), z)

    def test_leaky_needs_alpha_in_unit_interval(self):
        with pytest.raises(StructuralError):
            ActivationKind("LeakyReLU", 1.0)
        with pytest.raises(StructuralError):
            ActivationKind("LeakyReLU")
        with pytest.raises(StructuralError):
            ActivationKind("ReLU", 0.5)


class TestCompose:
    def test_identity_left_unit(self):
        f = width1(2.0, 0.3, leaky(0.5), fw=1.5, fb=-0.2)
        ident = Network((), Affine(np.eye(1), np.zeros(1)), 1)
        comp = compose(ident, f)
        xs = np.linspace(-3, 3, 100)[:, None]
        assert np.array_equal(eval_batch(comp, xs), eval_batch(f, xs))

    def test_sequential_eval(self):
        f = width1(1.0, -0.5, leaky(0.25))
        g = width1(2.0, 0.25, leaky(0.5))
        comp = compose(g, f)
        xs = np.linspace(-2, 2, 101)
        for x in xs:
            assert np.allclose(comp([x]), g(f([x])), atol=1e-14)

    def test_width_mismatch(self):
        f = Network((), Affine(np.ones((2, 1)), np.zeros(2)), 2)
        g = width1(1.0, 0.0, RELU)
        with pytest.raises(StructuralError):
            compose(g, f)

    def test_associativity_exact(self):
        rng = np.random.default_rng(3)

        def rando():
            return Network(
                (Layer(rng.normal(size=(2, 2)), rng.normal(size=2), (leaky(0.5), ABS)),),
                Affine(rng.normal(size=(2, 2)), rng.normal(size=2)),
                2,
            )

        a, b, c = rando(), rando(), rando()
        left = compose(a, compose(b, c))
        right = compose(compose(a, b), c)
        xs = rng.normal(size=(200, 2))
        assert np.array_equal(eval_batch(left, xs), eval_batch(right, xs))

    def test_interface_width_never_materializes(self):
        # composing width-1 chains through a width-1 interface stays width 1
        f = mono1d.compile_monotone(mono1d.pl_line(2.0), 0.5, (0.0, 1.0), 1e-6)
        g = width1(1.0, -0.3, leaky(0.5))
        comp = compose(g, f)
        assert all(w == 1 for w in comp.hidden_widths())


class TestSerialization:
    def test_round_trip_bit_exact(self):
        net = width1(2.0, 0.5, FLOOR)
        back = deserialize(serialize(net))
        assert back([0.3])[0] == net([0.3])[0]
        assert back.declared_width == net.declared_width

    def test_round_trip_random_net(self):
        rng = np.random.default_rng(9)
        net = Network(
            (
                Layer(rng.normal(size=(3, 2)), rng.normal(size=3), (UOE, FLOOR, leaky(0.75))),
            ),
            Affine(rng.normal(size=(1, 3)), rng.normal(size=1)),
            3,
        )
        back = deserialize(serialize(net))
        xs = rng.normal(size=(20, 2))
        assert np.array_equal(eval_batch(back, xs), eval_batch(net, xs))

    def test_declared_width_recorded(self):
        net = Network(
            (uniform_layer(np.eye(3), np.zeros(3), RELU),),
            Affine(np.eye(3), np.zeros(3)),
            3,
        )
        assert b'"declared_width": 3' in serialize(net)

    def test_mismatched_bias_is_parse_error(self):
        doc = (
            b'{"declared_width": 1, "layers": [{"weight": [[1.0]], "bias": [0.0, 1.0],'
            b' "activations": [{"tag": "ReLU"}]}],'
            b' "final_affine": {"weight": [[1.0]], "bias": [0.0]}}'
        )
        with pytest.raises(ParseError) as err:
            deserialize(doc)
        assert "bias" in str(err.value)

    def test_unknown_tag_is_parse_error(self):
        doc = (
            b'{"declared_width": 1, "layers": [{"weight": [[1.0]], "bias": [0.0],'
            b' "activations": [{"tag": "Sigmoid"}]}],'
            b' "final_affine": {"weight": [[1.0]], "bias": [0.0]}}'
        )
        with pytest.raises(ParseError):
            deserialize(doc)


class TestInvariants:
    def test_hidden_width_capped_by_declared(self):
        with pytest.raises(StructuralError):
            Network(
                (uniform_layer(np.ones((3, 1)), np.zeros(3), RELU),),
                Affine(np.ones((1, 3)), np.zeros(1)),
                2,
            )

    def test_layer_chaining_checked(self):
        with pytest.raises(StructuralError):
            Network(
                (
                    uniform_layer(np.ones((2, 1)), np.zeros(2), RELU),
                    uniform_layer(np.ones((1, 3)), np.zeros(1), RELU),
                ),
                Affine(np.eye(1), np.zeros(1)),
                3,
            )
