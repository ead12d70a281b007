# memlab/tests/test_ntm.py
import numpy as np
import pytest

from core.autodiff import Tensor, backward, finite_diff_check, tape_scope
from core.exceptions import ArgumentError, ShapeError
from ntm.memory import (NtmHeadEmission, address_head, content_weights, emission_size, parse_head_emission,
                        read_slot, write_slot)
from ntm.model import NtmModel
from tasks.generator import generate_batch, task_dims
from tasks.specs import TaskSpec


def _emission(key, beta, gate, shift, gamma):
    return NtmHeadEmission(key=Tensor(np.atleast_2d(key)), beta=Tensor([[beta]]), gate=Tensor([[gate]]),
                           shift=Tensor(np.atleast_2d(shift)), gamma=Tensor([[gamma]]))


def _orthogonal_memory(rng, slots, width):
    q = np.linalg.qr(rng.normal(size=(width, width)))[0]
    return q[:slots]


class TestAddressing:
    def test_identical_rows_give_uniform_content_weights(self, rng):
        mem = Tensor(np.tile(rng.normal(size=4), (1, 5, 1)))
        w, _ = content_weights(mem, Tensor(rng.normal(size=(1, 4))), Tensor([[3.0]]))
        np.testing.assert_allclose(w.data, np.full((1, 5), 0.2))

    def test_saturated_key_focuses_slot(self, rng):
        rows = _orthogonal_memory(rng, 6, 6)
        mem = Tensor(rows[None])
        emit = _emission(rows[3], beta=100.0, gate=1.0, shift=[0, 1, 0], gamma=1.0)
        w = address_head(mem, emit, Tensor(np.full((1, 6), 1 / 6)))
        assert w.data[0, 3] > 0.999

    def test_pure_rotation(self, rng):
        w_prev = np.zeros((1, 5))
        w_prev[0, 2] = 1.0
        emit = _emission(rng.normal(size=4), beta=1.0, gate=0.0, shift=[0, 0, 1], gamma=1.0)
        w = address_head(Tensor(rng.normal(size=(1, 5, 4))), emit, Tensor(w_prev))
        np.testing.assert_allclose(w.data, np.eye(5)[[3]], atol=1e-12)

    def test_result_is_distribution(self, rng):
        emit = _emission(rng.normal(size=4), beta=2.0, gate=0.4, shift=[0.2, 0.5, 0.3], gamma=2.5)
        w_prev = rng.dirichlet(np.ones(7))[None]
        w = address_head(Tensor(rng.normal(size=(1, 7, 4))), emit, Tensor(w_prev))
        assert abs(w.data.sum() - 1.0) < 1e-9
        assert np.all(w.data >= 0)

    def test_gamma_below_one(self, rng):
        emit = _emission(rng.normal(size=4), beta=1.0, gate=0.5, shift=[0, 1, 0], gamma=0.5)
        with pytest.raises(ArgumentError):
            address_head(Tensor(rng.normal(size=(1, 5, 4))), emit, Tensor(np.full((1, 5), 0.2)))

    def test_parsed_emission_ranges(self, rng):
        raw = Tensor(rng.normal(0, 3, size=(2, emission_size(4, write=True))))
        emit = parse_head_emission(raw, 4, write=True)
        assert emit.is_write
        assert np.all(emit.gamma.data >= 1)
        assert np.all(emit.beta.data >= 0)
        np.testing.assert_allclose(emit.shift.data.sum(axis=-1), [1.0, 1.0])
        assert np.all((emit.erase.data > 0) & (emit.erase.data < 1))

    def test_emission_width_checked(self):
        with pytest.raises(ShapeError):
            parse_head_emission(Tensor(np.zeros((1, 3))), 4, write=False)


class TestWriteRead:
    def test_hard_write_replaces_row(self, rng):
        mem = rng.normal(size=(1, 4, 3))
        v = rng.normal(size=(1, 3))
        out = write_slot(Tensor(mem), Tensor(np.eye(4)[[1]]), Tensor(np.ones((1, 3))), Tensor(v))
        np.testing.assert_allclose(out.data[0, 1], v[0])
        np.testing.assert_array_equal(np.delete(out.data[0], 1, axis=0), np.delete(mem[0], 1, axis=0))

    def test_zero_weights_leave_memory(self, rng):
        mem = rng.normal(size=(1, 4, 3))
        out = write_slot(Tensor(mem), Tensor(np.zeros((1, 4))), Tensor(np.ones((1, 3))), Tensor(np.ones((1, 3))))
        np.testing.assert_array_equal(out.data, mem)

    def test_half_erase(self):
        mem = np.zeros((1, 3, 2))
        mem[0, 0] = 2.0
        out = write_slot(Tensor(mem), Tensor(np.eye(3)[[0]]), Tensor(np.full((1, 2), 0.5)), Tensor(np.zeros((1, 2))))
        np.testing.assert_allclose(out.data[0, 0], [1.0, 1.0])

    def test_erase_outside_unit_interval(self, rng):
        with pytest.raises(ArgumentError):
            write_slot(Tensor(np.zeros((1, 3, 2))), Tensor(np.eye(3)[[0]]), Tensor([[1.5, 0.0]]),
                       Tensor(np.zeros((1, 2))))

    def test_reads(self, rng):
        mem = rng.normal(size=(1, 4, 3))
        np.testing.assert_allclose(read_slot(Tensor(mem), Tensor(np.eye(4)[[2]])).data[0], mem[0, 2])
        np.testing.assert_allclose(read_slot(Tensor(mem), Tensor(np.full((1, 4), 0.25))).data[0], mem[0].mean(axis=0))

    def test_write_then_read_round_trip(self, rng):
        w = Tensor(np.eye(5)[[4]])
        v = rng.normal(size=(1, 3))
        mem = write_slot(Tensor(rng.normal(size=(1, 5, 3))), w, Tensor(np.ones((1, 3))), Tensor(v))
        np.testing.assert_allclose(read_slot(mem, w).data, v)

    def test_write_gradient(self, rng):
        mem = Tensor(rng.normal(size=(1, 4, 3)))
        w = Tensor(rng.dirichlet(np.ones(4))[None])
        e = Tensor(rng.uniform(0.1, 0.9, size=(1, 3)))

        def f(v):
            return (read_slot(write_slot(mem, w, e, v), w) ** 2).sum()

        assert finite_diff_check(f, Tensor(rng.normal(size=(1, 3)))).max_rel_error < 1e-6


class TestNtmModel:
    def _spec(self):
        return TaskSpec(kind='copy', family='ntm', min_length=1, max_length=3, bits=3, downscaled=True)

    def test_forward_shape(self, rng):
        spec = self._spec()
        dims = task_dims(spec)
        model = NtmModel(dims.input_size, dims.output_size, rng, hidden_size=8, memory_slots=6, word_size=4)
        batch = generate_batch(spec, 2)
        out = model.forward(Tensor(batch.inputs))
        assert out.shape == batch.targets.shape

    def test_initial_weights_focus_first_slot(self, rng):
        model = NtmModel(3, 2, rng, hidden_size=4, memory_slots=5, word_size=2, read_heads=2)
        state = model.initial_state(3)
        assert len(state.read_weights) == 2
        np.testing.assert_array_equal(state.write_weights[0].data, np.tile(np.eye(5)[0], (3, 1)))

    def test_needs_heads(self, rng):
        with pytest.raises(ArgumentError):
            NtmModel(3, 2, rng, read_heads=0)

    def test_loss_reaches_every_parameter(self, rng):
        spec = self._spec()
        dims = task_dims(spec)
        model = NtmModel(dims.input_size, dims.output_size, rng, hidden_size=8, memory_slots=6, word_size=4)
        batch = generate_batch(spec, 2)
        model.zero_grad()
        with tape_scope():
            result = model.loss_on_batch(batch)
            backward(result.loss)
        assert np.isfinite(result.loss.item())
        for name, param in model.parameters().items():
            assert param.grad is not None and np.isfinite(param.grad).all(), name
        assert len(result.predictions) == 2
        assert result.predictions[0].shape[-1] == dims.output_size

    def test_input_gradient(self, rng):
        model = NtmModel(3, 2, rng, hidden_size=4, memory_slots=4, word_size=3)
        report = finite_diff_check(lambda x: (model.forward(x) ** 2).sum(), Tensor(rng.normal(size=(1, 3, 3))))
        assert report.max_rel_error < 1e-4
