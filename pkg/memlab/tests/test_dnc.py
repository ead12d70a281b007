# memlab/tests/test_dnc.py
import numpy as np
import pytest

from core.autodiff import Tensor, backward, finite_diff_check, no_grad, tape_scope
from core.exceptions import ArgumentError
from dnc.memory import (DncAccess, DncEmission, allocation_step, apply_write, initial_dnc_state, interface_size,
                        parse_dnc_emission, read_weighting, write_step)
from dnc.model import DncModel


def _emission(slots_width=3, read_heads=1, batch=1, **overrides):
    W, R, B = slots_width, read_heads, batch
    fields = dict(
        read_keys=np.zeros((B, R, W)), read_strengths=np.ones((B, R, 1)),
        write_key=np.zeros((B, W)), write_strength=np.ones((B, 1)),
        erase=np.ones((B, W)), write_vector=np.zeros((B, W)),
        free_gates=np.zeros((B, R)), allocation_gate=np.ones((B, 1)), write_gate=np.ones((B, 1)),
        read_modes=np.tile([0.0, 1.0, 0.0], (B, R, 1)),
    )
    fields.update(overrides)
    return DncEmission(**{k: Tensor(v) for k, v in fields.items()})


def _state_with_usage(usage):
    state = initial_dnc_state(1, len(usage), 3, 1)
    state.usage = Tensor(np.asarray(usage, dtype=np.float64)[None])
    return state


def _hard_writes(slots, a, b, width=3):
    """one-hot write at slot a, then at slot b, starting from p=0 and L=0"""
    state = initial_dnc_state(1, slots, width, 1)
    for i in (a, b):
        state = apply_write(state, Tensor(np.eye(slots)[[i]]), Tensor(np.ones((1, width))),
                            Tensor(np.eye(width)[[i % width]]))
    return state


class TestAllocation:
    def test_empty_usage_picks_one_slot(self):
        _, alloc = allocation_step(_state_with_usage([0.0, 0.0, 0.0, 0.0]), _emission())
        np.testing.assert_allclose(alloc.data, [[1.0, 0.0, 0.0, 0.0]])

    def test_full_usage_allocates_nothing(self):
        _, alloc = allocation_step(_state_with_usage([1.0, 1.0, 1.0]), _emission())
        np.testing.assert_array_equal(alloc.data, np.zeros((1, 3)))

    def test_hand_example(self):
        usage, alloc = allocation_step(_state_with_usage([0.5, 0.1, 0.9]), _emission())
        np.testing.assert_allclose(usage.data, [[0.5, 0.1, 0.9]])
        # free list is (1, 0, 2): a = [0.5 * 0.1, 0.9, 0.1 * 0.1 * 0.5]
        np.testing.assert_allclose(alloc.data, [[0.05, 0.9, 0.005]])

    def test_allocation_sums_to_at_most_one(self, rng):
        for _ in range(20):
            _, alloc = allocation_step(_state_with_usage(rng.uniform(size=6)), _emission())
            assert alloc.data.sum() <= 1.0 + 1e-12
            assert np.all(alloc.data >= 0)

    def test_free_gate_releases_read_slots(self):
        state = _state_with_usage([0.8, 0.8])
        state.read_weights = Tensor([[[1.0, 0.0]]])
        usage, _ = allocation_step(state, _emission(free_gates=np.ones((1, 1))))
        np.testing.assert_allclose(usage.data, [[0.0, 0.8]])

    def test_allocation_gradient(self, rng):
        emission = _emission()

        def f(u):
            state = initial_dnc_state(1, 4, 3, 1)
            state.usage = u
            _, alloc = allocation_step(state, emission)
            return (alloc * np.arange(1, 5)).sum()

        report = finite_diff_check(f, Tensor(np.array([[0.3, 0.7, 0.1, 0.5]])))
        assert report.max_rel_error < 1e-6


class TestWrite:
    def test_closed_write_gate_changes_nothing(self, rng):
        state = _hard_writes(4, 0, 2)
        emission = _emission(write_gate=np.zeros((1, 1)), write_vector=rng.normal(size=(1, 3)))
        after = write_step(state, emission)
        np.testing.assert_array_equal(after.memory.data, state.memory.data)
        np.testing.assert_array_equal(after.precedence.data, state.precedence.data)
        np.testing.assert_array_equal(after.link.data, state.link.data)

    def test_two_hard_writes_link(self):
        state = _hard_writes(4, a=1, b=3)
        assert state.link.data[0, 3, 1] == 1.0
        assert state.link.data.sum() == 1.0
        np.testing.assert_array_equal(state.precedence.data, np.eye(4)[[3]])

    def test_hard_write_sets_row(self):
        state = _hard_writes(4, a=1, b=3)
        np.testing.assert_array_equal(state.memory.data[0, 3], [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(state.memory.data[0, 1], [0.0, 1.0, 0.0])

    def test_link_diagonal_stays_zero(self, rng):
        state = initial_dnc_state(1, 5, 3, 1)
        for _ in range(4):
            state = apply_write(state, Tensor(rng.dirichlet(np.ones(5))[None] * 0.9),
                                Tensor(rng.uniform(size=(1, 3))), Tensor(rng.normal(size=(1, 3))))
        np.testing.assert_array_equal(np.diag(state.link.data[0]), np.zeros(5))
        assert np.all((state.link.data >= 0) & (state.link.data <= 1))

    def test_link_disabled(self):
        state = initial_dnc_state(1, 3, 2, 1)
        for i in (0, 1):
            state = apply_write(state, Tensor(np.eye(3)[[i]]), Tensor(np.ones((1, 2))), Tensor(np.ones((1, 2))),
                                link_enabled=False)
        np.testing.assert_array_equal(state.link.data, np.zeros((1, 3, 3)))

    def test_erase_checked(self):
        state = initial_dnc_state(1, 3, 2, 1)
        with pytest.raises(ArgumentError):
            apply_write(state, Tensor(np.eye(3)[[0]]), Tensor([[2.0, 0.0]]), Tensor(np.ones((1, 2))))


class TestRead:
    def test_content_mode_equals_content_weight(self, rng):
        state = _hard_writes(4, 1, 3)
        key = np.array([2.0, 0.1, -0.3])
        emission = _emission(read_keys=key[None, None], read_strengths=np.full((1, 1, 1), 5.0))
        w = read_weighting(state.memory, state.link, state.read_weights, emission)

        M = state.memory.data[0]
        cos = M @ key / (np.linalg.norm(M, axis=1) * np.linalg.norm(key))
        expected = np.exp(5.0 * cos) / np.exp(5.0 * cos).sum()
        np.testing.assert_allclose(w.data[0, 0], expected, rtol=1e-10)
        assert np.argmax(w.data[0, 0]) == 3

    def test_forward_traversal(self):
        state = _hard_writes(4, a=1, b=3)
        prev = Tensor(np.eye(4)[[1]][None])
        emission = _emission(read_modes=np.array([[[0.0, 0.0, 1.0]]]))
        w = read_weighting(state.memory, state.link, prev, emission)
        np.testing.assert_allclose(w.data[0, 0], np.eye(4)[3])

    def test_backward_traversal(self):
        state = _hard_writes(4, a=1, b=3)
        prev = Tensor(np.eye(4)[[3]][None])
        emission = _emission(read_modes=np.array([[[1.0, 0.0, 0.0]]]))
        w = read_weighting(state.memory, state.link, prev, emission)
        np.testing.assert_allclose(w.data[0, 0], np.eye(4)[1])


class TestDncModel:
    def test_parse_emission_ranges(self, rng):
        raw = Tensor(rng.normal(0, 2, size=(2, interface_size(4, 2))))
        emission = parse_dnc_emission(raw, 4, 2)
        assert emission.read_keys.shape == (2, 2, 4)
        np.testing.assert_allclose(emission.read_modes.data.sum(axis=-1), np.ones((2, 2)))
        assert np.all((emission.write_gate.data > 0) & (emission.write_gate.data < 1))

    def test_forward_and_trace(self, rng):
        model = DncModel(5, 3, rng, hidden_size=8, memory_slots=6, word_size=4, read_heads=2)
        out = model.forward(Tensor(rng.normal(size=(2, 4, 5))))
        assert out.shape == (2, 4, 3)
        assert len(model.write_gate_trace) == 4
        assert model.write_gate_trace[0].shape == (2, 1)

    def test_gradient_through_memory(self, rng):
        model = DncModel(3, 2, rng, hidden_size=4, memory_slots=4, word_size=3)
        report = finite_diff_check(lambda x: (model.forward(x) ** 2).sum(), Tensor(rng.normal(size=(1, 3, 3))))
        assert report.max_rel_error < 1e-4

    def test_parameters_get_gradients(self, rng):
        model = DncModel(3, 2, rng, hidden_size=4, memory_slots=4, word_size=3)
        model.zero_grad()
        with tape_scope():
            backward((model.forward(Tensor(rng.normal(size=(2, 3, 3)))) ** 2).sum())
        assert np.abs(model.access.interface.W.grad).sum() > 0


class TestRolloutInvariants:
    def test_random_rollouts(self, rng):
        """1000 rollouts at once: the batch axis holds independent trajectories"""
        access = DncAccess(6, rng, memory_slots=5, word_size=3, read_heads=2)
        batch, tol = 1000, 1e-12
        state = access.initial_state(batch)
        with no_grad():
            for _ in range(8):
                _, state, _ = access.step(state, Tensor(rng.normal(scale=3.0, size=(batch, 6))))
                w, r = state.write_weight.data, state.read_weights.data
                assert np.all(w >= 0) and np.all(w.sum(axis=-1) <= 1 + tol)
                assert np.all(r >= 0) and np.all(r.sum(axis=-1) <= 1 + tol)
                assert np.all((state.usage.data >= 0) & (state.usage.data <= 1 + tol))
                p = state.precedence.data
                assert np.all(p >= 0) and np.all(p.sum(axis=-1) <= 1 + tol)
                link = state.link.data
                assert np.all((link >= 0) & (link <= 1 + tol))
                np.testing.assert_array_equal(np.diagonal(link, axis1=1, axis2=2), np.zeros((batch, 5)))
                assert np.all(link.sum(axis=1) <= 1 + 1e-9) and np.all(link.sum(axis=2) <= 1 + 1e-9)
