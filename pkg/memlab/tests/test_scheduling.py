# memlab/tests/test_scheduling.py
import numpy as np
import pytest

from core.autodiff import Tensor
from core.exceptions import ArgumentError
from dnc.model import DncModel
from ntm.memory import SlotWrite
from scheduling.cache import Cache, cuw_step
from scheduling.protection import write_protected_update
from scheduling.schedules import WritePolicy, WriteSchedule, make_schedule


class RecordingHooks:
    """controller returns its h argument; writes and reads are counted"""

    def __init__(self, read_value):
        self.writes = 0
        self.controller_inputs = []
        self.read_value = read_value

    def controller_step(self, x, h_prev, r_prev):
        self.controller_inputs.append(h_prev)
        return h_prev + x

    def memory_write(self, h):
        self.writes += 1

    def memory_read(self, h):
        return self.read_value


class TestMakeSchedule:
    def test_uniform_every_tenth(self):
        assert make_schedule('uniform', 50, 4).sorted_steps() == [10, 20, 30, 40, 50]

    def test_uniform_every_second(self):
        assert make_schedule('uniform', 30, 14).sorted_steps() == list(range(2, 31, 2))

    def test_uniform_without_final_write(self):
        sched = make_schedule('uniform', 9, 2, final_write=False)
        assert sched.sorted_steps() == [3, 6]

    def test_regular(self):
        assert make_schedule('regular', 5, 0).sorted_steps() == [1, 2, 3, 4, 5]

    def test_too_many_writes(self):
        with pytest.raises(ArgumentError):
            make_schedule('uniform', 5, 5)

    def test_random_is_seeded(self):
        a = make_schedule('random', 200, 19, seed=3)
        b = make_schedule('random', 200, 19, seed=3)
        assert a.steps == b.steps
        assert 5 <= len(a.steps) <= 40
        assert a.meta['p'] == pytest.approx(0.1)

    def test_cached_uniform_interval(self):
        sched = make_schedule('cached_uniform', 20, 3, L=2)
        assert sched.interval == 2
        assert sched.sorted_steps() == list(range(2, 21, 2))
        with pytest.raises(ArgumentError):
            make_schedule('cached_uniform', 20, 3, L=6)

    def test_write_protected(self):
        sched = make_schedule('write_protected', 12, 0, input_length=5)
        assert sched.sorted_steps() == [1, 2, 3, 4, 5]
        with pytest.raises(ArgumentError):
            make_schedule('write_protected', 12, 0)

    def test_steps_must_be_in_range(self):
        with pytest.raises(ArgumentError):
            WriteSchedule.from_steps(4, [0, 2])

    def test_json(self):
        sched = WriteSchedule.from_steps(6, [3], WritePolicy.UNIFORM)
        assert sched.to_json() == '{"policy": "uniform", "T": 6, "steps": [3]}'


class TestCachedUniformWriting:
    def test_single_slot_cache_writes_every_step(self, rng):
        cache = Cache(1, 3, 2, rng)
        hooks = RecordingHooks(Tensor(np.ones((1, 2))))
        h = Tensor(rng.normal(size=(1, 3)))
        r = Tensor(np.zeros((1, 2)))
        for t in range(1, 5):
            h_prev = h
            h, r, wrote = cuw_step(cache, h, r, Tensor(np.zeros((1, 3))), t, hooks)
            assert wrote
            # attention over one stored state returns that state
            np.testing.assert_allclose(hooks.controller_inputs[-1].data, h_prev.data)
        assert hooks.writes == 4

    def test_identical_states_attend_to_that_state(self, rng):
        cache = Cache(3, 4, 2, rng)
        state = Tensor(rng.normal(size=(1, 4)))
        for _ in range(3):
            cache.append(state)
        out = cache.attend(state, Tensor(rng.normal(size=(1, 2))))
        np.testing.assert_allclose(out.data, state.data)

    def test_reads_frozen_between_writes(self, rng):
        cache = Cache(3, 3, 2, rng)
        hooks = RecordingHooks(Tensor(np.full((1, 2), 7.0)))
        r0 = Tensor(np.zeros((1, 2)))
        h = Tensor(np.zeros((1, 3)))
        h, r, wrote = cuw_step(cache, h, r0, Tensor(np.ones((1, 3))), 1, hooks)
        assert not wrote and r is r0 and hooks.writes == 0
        h, r, wrote = cuw_step(cache, h, r, Tensor(np.ones((1, 3))), 2, hooks)
        assert not wrote and r is r0
        h, r, wrote = cuw_step(cache, h, r, Tensor(np.ones((1, 3))), 3, hooks)
        assert wrote and hooks.writes == 1
        np.testing.assert_array_equal(r.data, [[7.0, 7.0]])
        assert len(cache) == 0

    def test_cache_is_bounded(self, rng):
        cache = Cache(2, 3, 2, rng)
        for i in range(5):
            cache.append(Tensor(np.full((1, 3), float(i))))
        assert len(cache) == 2
        assert cache.buffer[0].data[0, 0] == 3.0

    def test_capacity_checked(self, rng):
        with pytest.raises(ArgumentError):
            Cache(0, 3, 2, rng)

    def test_schedule_decides_the_flush(self, rng):
        cache = Cache(2, 3, 2, rng)
        hooks = RecordingHooks(Tensor(np.ones((1, 2))))
        h, r = Tensor(np.zeros((1, 3))), Tensor(np.zeros((1, 2)))
        _, _, wrote = cuw_step(cache, h, r, Tensor(np.ones((1, 3))), 2, hooks, write=False)
        assert not wrote and len(cache) == 1
        _, _, wrote = cuw_step(cache, h, r, Tensor(np.ones((1, 3))), 3, hooks, write=True)
        assert wrote and hooks.writes == 1 and len(cache) == 0

    def test_resize(self, rng):
        cache = Cache(4, 3, 2, rng)
        for i in range(4):
            cache.append(Tensor(np.full((1, 3), float(i))))
        cache.resize(2)
        assert cache.capacity == 2 and [s.data[0, 0] for s in cache.buffer] == [2.0, 3.0]
        with pytest.raises(ArgumentError):
            cache.resize(0)


class TestWriteProtection:
    def test_after_input_memory_is_untouched(self, rng):
        mem = Tensor(rng.normal(size=(1, 4, 3)))
        write = SlotWrite(Tensor(np.eye(4)[[0]]), Tensor(np.ones((1, 3))), Tensor(np.ones((1, 3))))
        assert write_protected_update(mem, write, t=6, input_length=5) is mem

    def test_last_input_step_writes(self, rng):
        mem = Tensor(rng.normal(size=(1, 4, 3)))
        v = rng.normal(size=(1, 3))
        write = SlotWrite(Tensor(np.eye(4)[[2]]), Tensor(np.ones((1, 3))), Tensor(v))
        out = write_protected_update(mem, write, t=5, input_length=5)
        np.testing.assert_allclose(out.data[0, 2], v[0])

    def test_decode_steps_leave_identical_snapshots(self, rng):
        mem = Tensor(rng.normal(size=(1, 4, 3)))
        snapshots = []
        for t in range(6, 16):
            write = SlotWrite(Tensor(rng.dirichlet(np.ones(4))[None]), Tensor(rng.uniform(size=(1, 3))),
                              Tensor(rng.normal(size=(1, 3))))
            mem = write_protected_update(mem, write, t=t, input_length=5)
            snapshots.append(mem.data.copy())
        for snap in snapshots:
            np.testing.assert_array_equal(snap, snapshots[0])


class TestScheduledDnc:
    def test_writes_follow_schedule(self, rng):
        model = DncModel(3, 2, rng, hidden_size=6, memory_slots=5, word_size=3)
        sched = make_schedule('uniform', 6, 1, final_write=False)
        model.forward(Tensor(rng.normal(size=(2, 8, 3))), schedule=sched)
        assert len(model.write_gate_trace) == 1

    def test_non_write_step_keeps_memory(self, rng):
        model = DncModel(3, 2, rng, hidden_size=6, memory_slots=5, word_size=3)
        state = model.initial_state(1)
        _, state = model.step(Tensor(rng.normal(size=(1, 3))), state, write=True)
        before = state.memory.memory.data.copy()
        _, after = model.step(Tensor(rng.normal(size=(1, 3))), state, write=False)
        np.testing.assert_array_equal(after.memory.memory.data, before)

    def _recorded_cached_run(self, model, sched, inputs):
        """(t, wrote, state before, state after) for every cached step of one forward pass"""
        record = []
        cached_step = model.cached_step

        def recording(x, state, t, write=None):
            out, new_state, wrote = cached_step(x, state, t, write=write)
            record.append((t, wrote, state, new_state))
            return out, new_state, wrote

        model.cached_step = recording
        model.forward(inputs, schedule=sched)
        return record

    def test_cached_uniform_writes_at_schedule_steps(self, rng):
        # the cache built with 3 slots is resized to the schedule's interval
        model = DncModel(3, 2, rng, hidden_size=6, memory_slots=5, word_size=3, cache_size=3, attn_size=4)
        sched = make_schedule('cached_uniform', 6, 2, L=2)
        record = self._recorded_cached_run(model, sched, Tensor(rng.normal(size=(1, 8, 3))))
        assert [t for t, _, _, _ in record] == [1, 2, 3, 4, 5, 6]
        assert [t for t, wrote, _, _ in record if wrote] == sched.sorted_steps() == [2, 4, 6]
        assert model.cache.capacity == 2
        assert len(model.write_gate_trace) == 3

    def test_cached_uniform_default_interval_matches_uniform(self, rng):
        model = DncModel(3, 2, rng, hidden_size=6, memory_slots=5, word_size=3, cache_size=10, attn_size=4)
        sched = make_schedule('cached_uniform', 9, 2)
        record = self._recorded_cached_run(model, sched, Tensor(rng.normal(size=(2, 9, 3))))
        assert [t for t, wrote, _, _ in record if wrote] == make_schedule('uniform', 9, 2).sorted_steps()

    def test_cached_uniform_memory_changes_only_on_writes(self, rng):
        model = DncModel(3, 2, rng, hidden_size=6, memory_slots=5, word_size=3, cache_size=2, attn_size=4)
        sched = make_schedule('cached_uniform', 9, 2)
        record = self._recorded_cached_run(model, sched, Tensor(rng.normal(size=(1, 9, 3))))
        for t, wrote, before, after in record:
            if wrote:
                assert not np.array_equal(after.memory.memory.data, before.memory.memory.data), t
            else:
                np.testing.assert_array_equal(after.memory.memory.data, before.memory.memory.data)
                assert after.reads is before.reads

    def test_cached_uniform_needs_a_cache(self, rng):
        model = DncModel(3, 2, rng, hidden_size=6, memory_slots=5, word_size=3)
        with pytest.raises(ArgumentError):
            model.forward(Tensor(rng.normal(size=(1, 6, 3))), schedule=make_schedule('cached_uniform', 6, 2))
