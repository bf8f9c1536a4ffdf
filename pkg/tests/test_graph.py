import numpy as np
import pytest

from fusiscan.graph import (
    GraphBuilder,
    LayerNode,
    ModelSpec,
    count_parameters,
    count_weighted_layers,
    estimate_memory_bytes,
    forward,
    inspect_dump,
    propagate_shapes,
    set_all_weights,
)
from fusiscan.tensor import Rng, ShapeError, Tensor


def small_model(seed=0):
    """conv(3->4) -> bn -> relu -> gap -> dense(4->3) -> softmax on 8x8 input."""
    g = GraphBuilder(Rng(seed))
    x = g.conv("c1", "input", 3, 4, 3, padding=1)
    x = g.batchnorm("b1", x, 4)
    x = g.relu("r1", x)
    x = g.global_avgpool("gap", x)
    x = g.dense("fc", x, 4, 3)
    g.softmax("sm", x)
    return ModelSpec(g.nodes, (3, 8, 8), ["a", "b", "c"], "small")


class TestModelSpecValidation:
    def test_empty_graph_rejected(self):
        with pytest.raises(ShapeError):
            ModelSpec([], (3, 8, 8), ["a", "b"], "x")

    def test_two_outputs_rejected(self):
        g = GraphBuilder(Rng(0))
        g.relu("r1", "input")
        g.relu("r2", "input")
        with pytest.raises(ShapeError):
            ModelSpec(g.nodes, (3, 8, 8), ["a"], "x")

    def test_forward_reference_rejected(self):
        nodes = [LayerNode("r1", "relu", None, ["missing"])]
        with pytest.raises(ShapeError):
            ModelSpec(nodes, (3, 8, 8), ["a"], "x")

    def test_output_must_match_labels(self):
        g = GraphBuilder(Rng(0))
        x = g.global_avgpool("gap", "input")
        x = g.dense("fc", x, 3, 4)
        g.softmax("sm", x)
        with pytest.raises(ShapeError):
            ModelSpec(g.nodes, (3, 8, 8), ["a", "b", "c"], "x")

    def test_output_must_be_softmax(self):
        g = GraphBuilder(Rng(0))
        x = g.global_avgpool("gap", "input")
        g.dense("fc", x, 3, 3)
        with pytest.raises(ShapeError):
            ModelSpec(g.nodes, (3, 8, 8), ["a", "b", "c"], "x")


class TestShapePropagation:
    def test_matches_execution(self):
        m = small_model()
        shapes = propagate_shapes(m, batch=2)
        x = Tensor(Rng(1).normal_array((2, 3, 8, 8)))
        values = {}
        out = forward(m, x)
        assert out.dims == shapes["sm"]
        assert shapes["c1"] == (2, 4, 8, 8)
        assert shapes["gap"] == (2, 4)

    def test_concat_channels_sum(self):
        g = GraphBuilder(Rng(0))
        a = g.conv("a", "input", 3, 4, 1)
        b = g.conv("b", "input", 3, 5, 1)
        cat = g.concat("cat", [a, b])
        x = g.global_avgpool("gap", cat)
        x = g.dense("fc", x, 9, 2)
        g.softmax("sm", x)
        m = ModelSpec(g.nodes, (3, 6, 6), ["a", "b"], "x")
        assert propagate_shapes(m)["cat"] == (1, 9, 6, 6)

    def test_concat_spatial_mismatch_rejected(self):
        g = GraphBuilder(Rng(0))
        a = g.conv("a", "input", 3, 4, 1)
        b = g.conv("b", "input", 3, 4, 3)  # shrinks spatially
        cat = g.concat("cat", [a, b])
        x = g.global_avgpool("gap", cat)
        x = g.dense("fc", x, 8, 2)
        g.softmax("sm", x)
        with pytest.raises(ShapeError):
            ModelSpec(g.nodes, (3, 6, 6), ["a", "b"], "x")

    def test_add_requires_equal_shapes(self):
        g = GraphBuilder(Rng(0))
        a = g.conv("a", "input", 3, 4, 1)
        b = g.conv("b", "input", 3, 5, 1)
        s = g.add("s", [a, b])
        x = g.global_avgpool("gap", s)
        x = g.dense("fc", x, 4, 2)
        g.softmax("sm", x)
        with pytest.raises(ShapeError):
            ModelSpec(g.nodes, (3, 6, 6), ["a", "b"], "x")


class TestForward:
    def test_rows_sum_to_one(self):
        m = small_model()
        x = Tensor(Rng(2).normal_array((4, 3, 8, 8)))
        out = forward(m, x).array
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-6)

    def test_batch_independence(self):
        m = small_model()
        row = Rng(3).normal_array((1, 3, 8, 8))
        x = Tensor(np.concatenate([row, row], axis=0))
        out = forward(m, x).array
        assert np.array_equal(out[0], out[1])

    def test_input_shape_checked(self):
        m = small_model()
        with pytest.raises(ShapeError):
            forward(m, Tensor(np.zeros((1, 3, 9, 9), dtype=np.float32)))

    def test_zero_weights_give_uniform(self):
        m = small_model()
        set_all_weights(m, 0.0)
        out = forward(m, Tensor(Rng(4).normal_array((2, 3, 8, 8)))).array
        assert np.allclose(out, 1.0 / 3.0, atol=1e-7)


class TestCounting:
    def test_dense_parameter_count(self):
        g = GraphBuilder(Rng(0))
        x = g.global_avgpool("gap", "input")
        x = g.dense("fc", x, 10, 3)
        g.softmax("sm", x)
        m = ModelSpec(g.nodes, (10, 4, 4), ["a", "b", "c"], "x")
        assert count_parameters(m) == 10 * 3 + 3

    def test_conv_and_bn_counts(self):
        m = small_model()
        # conv 4*3*3*3, bn gamma+beta 2*4, dense 4*3+3
        assert count_parameters(m) == 108 + 8 + 15

    def test_weighted_layers_skip_projections(self):
        g = GraphBuilder(Rng(0))
        a = g.conv("main.conv", "input", 3, 4, 3, padding=1)
        b = g.conv("short.proj_conv", "input", 3, 4, 1)
        s = g.add("s", [a, b])
        x = g.global_avgpool("gap", s)
        x = g.dense("fc", x, 4, 2)
        g.softmax("sm", x)
        m = ModelSpec(g.nodes, (3, 6, 6), ["a", "b"], "x")
        assert count_weighted_layers(m) == 2
        assert count_weighted_layers(m, include_projections=True) == 3


class TestMemoryEstimate:
    def test_linear_chain_peak(self):
        g = GraphBuilder(Rng(0))
        x = g.conv("c1", "input", 3, 8, 3, padding=1)  # 8*8*8 = 512 elems
        x = g.relu("r1", x)
        x = g.global_avgpool("gap", x)
        x = g.dense("fc", x, 8, 2)
        g.softmax("sm", x)
        m = ModelSpec(g.nodes, (3, 8, 8), ["a", "b"], "x")
        params = count_parameters(m)
        # peak is input (192) + conv output (512) live at the conv step,
        # then conv output + relu output (512 + 512) at the relu step
        assert estimate_memory_bytes(m) == 4 * (params + 1024)

    def test_residual_keeps_shortcut_alive(self):
        g = GraphBuilder(Rng(0))
        a = g.relu("r1", "input")
        b = g.relu("r2", a)
        s = g.add("s", [a, b])  # r1 output must stay live across r2
        x = g.global_avgpool("gap", s)
        x = g.dense("fc", x, 3, 2)
        g.softmax("sm", x)
        m = ModelSpec(g.nodes, (3, 4, 4), ["a", "b"], "x")
        elems = 3 * 4 * 4
        # at the add step: r1, r2 and the add output are all live, and the
        # input has already been released
        assert estimate_memory_bytes(m) == 4 * (count_parameters(m) + 3 * elems)


class TestInspectDump:
    def test_one_line_per_node(self):
        m = small_model()
        lines = inspect_dump(m).splitlines()
        assert len(lines) == len(m.nodes)
        first = lines[0].split()
        assert first[0] == "c1" and first[1] == "conv"
        assert first[2] == "4x8x8"
        assert int(first[3]) == 4 * 3 * 3 * 3
