# memlab/tests/test_classic.py
import numpy as np
import pytest

from classic.hopfield import HopfieldNet, hopfield_recall, hopfield_store_recall
from classic.hrr import HrrTrace, complex_cosine, hrr_encode_decode, random_phasors
from classic.memnn import memnn_hop_read
from classic.neural_stack import DiscreteStack, NeuralStackState, neural_stack_step
from classic.sdm import SdmMemory, radius_for_fraction, sdm_write_read
from classic.stores import CmmMatrix, FastWeightMatrix, TprTensor, fast_weight_step
from core.exceptions import ArgumentError, ShapeError


def _bipolar(rng, *shape):
    return rng.choice([-1.0, 1.0], size=shape)


class TestHopfield:
    def test_stored_pattern_is_fixed_point(self, rng):
        pattern = _bipolar(rng, 16)
        result = hopfield_store_recall(pattern[None], pattern)
        np.testing.assert_array_equal(result.state, pattern)
        assert result.converged and result.sweeps == 1

    def test_energy_never_increases(self, rng):
        patterns = _bipolar(rng, 4, 40)
        cue = patterns[1].copy()
        cue[rng.choice(40, size=10, replace=False)] *= -1
        net = HopfieldNet.hebbian(patterns)
        result = hopfield_recall(net, cue, seed=5)
        assert np.all(np.diff(result.energies) <= 1e-12)
        assert result.energies[-1] == pytest.approx(net.energy(result.state))

    def test_capacity_regime(self):
        rng = np.random.default_rng(0)
        correct = total = 0
        for trial in range(50):
            patterns = _bipolar(rng, 10, 100)
            net = HopfieldNet.hebbian(patterns)
            for q in range(10):
                state = hopfield_recall(net, patterns[q], seed=trial).state
                correct += int((state == patterns[q]).sum())
                total += 100
        assert correct / total >= 0.99

    def test_zero_field_keeps_state(self):
        cue = np.array([1.0, -1.0, 1.0])
        result = hopfield_recall(HopfieldNet(np.zeros((3, 3))), cue)
        np.testing.assert_array_equal(result.state, cue)

    def test_weights_checked(self):
        with pytest.raises(ArgumentError):
            HopfieldNet(np.array([[0.0, 1.0], [0.5, 0.0]]))
        with pytest.raises(ArgumentError):
            HopfieldNet(np.eye(2))

    def test_cue_must_be_bipolar(self, rng):
        net = HopfieldNet.hebbian(_bipolar(rng, 2, 4))
        with pytest.raises(ArgumentError):
            hopfield_recall(net, np.array([1.0, 0.0, -1.0, 1.0]))


class TestSdm:
    def test_single_location_round_trip(self, rng):
        cue = rng.integers(0, 2, size=32)
        content = rng.integers(0, 2, size=8)
        mem = SdmMemory(cue[None], content_size=8, radius=0)
        read = sdm_write_read(mem, cue, content, cue)
        np.testing.assert_array_equal(read.bits, content)
        assert read.active == 1 and not read.degenerate

    def test_unwritten_memory_reads_ones(self):
        mem = SdmMemory.random(20, 16, 6, radius=16, seed=1)
        read = mem.read(np.zeros(16, dtype=int))
        np.testing.assert_array_equal(read.bits, np.ones(6))

    def test_no_active_location(self):
        mem = SdmMemory(np.zeros((1, 8), dtype=int), 4, radius=0)
        read = mem.read(np.ones(8, dtype=int))
        assert read.degenerate and read.active == 0

    def test_large_memory_recall(self):
        rng = np.random.default_rng(3)
        D, items = 256, 50
        radius = radius_for_fraction(D, 0.1)
        mem = SdmMemory.random(10_000, D, D, radius, seed=4)
        addresses = rng.integers(0, 2, size=(items, D))
        for address in addresses:
            mem.write(address, address)
        accuracy = np.mean([(mem.read(a).bits == a).mean() for a in addresses])
        assert accuracy >= 0.95

    def test_radius_for_fraction(self):
        assert radius_for_fraction(256, 0.5) == 128
        with pytest.raises(ArgumentError):
            radius_for_fraction(256, 0.0)

    def test_content_must_be_binary(self):
        mem = SdmMemory(np.zeros((1, 4), dtype=int), 2, radius=1)
        with pytest.raises(ArgumentError):
            mem.write(np.zeros(4, dtype=int), np.array([2, 0]))


class TestHrr:
    def test_single_pair_is_exact(self, rng):
        x, y = random_phasors(rng, 64), random_phasors(rng, 64)
        result = hrr_encode_decode([(x, y)], x)
        np.testing.assert_allclose(result.value, y, atol=1e-12)
        assert not result.nonunit

    def _mean_cosine(self, copies, trials=20, Q=20, N=512):
        rng = np.random.default_rng(11)
        cosines = []
        for trial in range(trials):
            keys, values = random_phasors(rng, (Q, N)), random_phasors(rng, (Q, N))
            result = hrr_encode_decode(list(zip(keys, values)), keys[0], copies=copies, seed=trial)
            cosines.append(complex_cosine(result.value, values[0]))
        return float(np.mean(cosines))

    def test_single_copy_noise(self):
        # Q - 1 unit-modulus interference terms per component
        assert self._mean_cosine(1) == pytest.approx(1 / np.sqrt(20), abs=0.03)

    def test_copies_reduce_noise(self):
        one, four, sixteen = self._mean_cosine(1), self._mean_cosine(4), self._mean_cosine(16)
        assert one < four < sixteen
        assert sixteen > 0.5

    def test_nonunit_key_is_flagged(self, rng):
        x, y = random_phasors(rng, 8), random_phasors(rng, 8)
        trace = HrrTrace(8)
        trace.bind(x, y)
        assert trace.unbind(2.0 * x).nonunit

    def test_dimension_checked(self, rng):
        trace = HrrTrace(8)
        with pytest.raises(ArgumentError):
            trace.bind(random_phasors(rng, 4), random_phasors(rng, 4))

    def test_needs_pairs(self, rng):
        with pytest.raises(ArgumentError):
            hrr_encode_decode([], random_phasors(rng, 4))


class TestStores:
    def test_cmm_orthonormal_keys(self, rng):
        keys = np.linalg.qr(rng.normal(size=(5, 5)))[0][:3]
        values = rng.normal(size=(3, 4))
        cmm = CmmMatrix.empty(5, 4)
        for x, y in zip(keys, values):
            cmm = cmm.store(x, y)
        for x, y in zip(keys, values):
            assert np.abs(cmm.retrieve(x) - y).max() <= 1e-10

    def test_cmm_error_grows_with_correlation(self, rng):
        y1, y2 = rng.normal(size=3), rng.normal(size=3)
        errors = []
        for angle in np.linspace(np.pi / 2, 0.1, 6):
            x1 = np.array([1.0, 0.0])
            x2 = np.array([np.cos(angle), np.sin(angle)])
            cmm = CmmMatrix.empty(2, 3).store(x1, y1).store(x2, y2)
            errors.append(np.linalg.norm(cmm.retrieve(x1) - y1))
        assert errors[0] <= 1e-12
        assert np.all(np.diff(errors) > 0)

    def test_cmm_shapes(self):
        with pytest.raises(ShapeError):
            CmmMatrix.empty(3, 2).store(np.ones(2), np.ones(2))

    def test_tpr_tree(self, rng):
        r0, r01, r11 = np.linalg.qr(rng.normal(size=(3, 3)))[0]
        A, B, C = rng.normal(size=(3, 4))
        T = TprTensor.empty(4, 3).bind(A, r0).bind(B, r01).bind(C, r11)
        np.testing.assert_allclose(T.unbind(r01), B, atol=1e-12)
        np.testing.assert_allclose(T.unbind(r11), C, atol=1e-12)

    def test_fast_weight_rank_one(self, rng):
        h = rng.normal(size=5)
        fw = FastWeightMatrix.empty(5, decay=0.0, rate=1.0).update(h)
        np.testing.assert_allclose(fw.apply(h), (h @ h) * h)

    def test_fast_weight_decay(self, rng):
        h = rng.normal(size=3)
        fw = FastWeightMatrix.empty(3, decay=0.5, rate=1.0).update(h).update(np.zeros(3))
        np.testing.assert_allclose(fw.A, 0.5 * np.outer(h, h))
        with pytest.raises(ArgumentError):
            FastWeightMatrix.empty(3, decay=1.5)

    def test_fast_weight_step(self, rng):
        H, D = 4, 2
        W, C = rng.normal(size=(H, H)), rng.normal(size=(H, D))
        h_prev, x = rng.normal(size=H), rng.normal(size=D)
        fw, h = fast_weight_step(FastWeightMatrix.empty(H), h_prev, x, W, C, inner_steps=0)
        np.testing.assert_allclose(h, np.tanh(W @ h_prev + C @ x))
        np.testing.assert_allclose(fw.A, 0.5 * np.outer(h_prev, h_prev))
        _, h2 = fast_weight_step(FastWeightMatrix.empty(H), h_prev, x, W, C, inner_steps=1)
        np.testing.assert_allclose(h2, np.tanh(W @ h_prev + C @ x + fw.A @ h))


class TestMemnn:
    def test_single_row(self, rng):
        m, c, u = rng.normal(size=(1, 3)), rng.normal(size=(1, 3)), rng.normal(size=3)
        read = memnn_hop_read(m, c, u)
        np.testing.assert_array_equal(read.probabilities[0], [1.0])
        np.testing.assert_allclose(read.reads[0], c[0])
        np.testing.assert_allclose(read.answer, u + c[0])

    def test_saturated_query(self, rng):
        m = np.linalg.qr(rng.normal(size=(4, 4)))[0]
        c = rng.normal(size=(4, 4))
        read = memnn_hop_read(m, c, 100 * m[2])
        np.testing.assert_allclose(read.reads[0], c[2], atol=1e-6)

    def test_two_hops(self):
        m = np.eye(2)
        c = np.array([[1.0, 0.0], [0.0, 2.0]])
        read = memnn_hop_read(m, c, np.zeros(2), hops=2)
        u1 = np.array([0.5, 1.0])
        p2 = np.exp(u1) / np.exp(u1).sum()
        np.testing.assert_allclose(read.reads[0], u1)
        np.testing.assert_allclose(read.probabilities[1], p2)
        np.testing.assert_allclose(read.answer, u1 + p2 @ c)

    def test_shapes_checked(self):
        with pytest.raises(ShapeError):
            memnn_hop_read(np.eye(2), np.eye(3), np.zeros(2))
        with pytest.raises(ArgumentError):
            memnn_hop_read(np.eye(2), np.eye(2), np.zeros(2), hops=0)


class TestNeuralStack:
    def test_push_push_pop(self):
        v1, v2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        state = NeuralStackState.empty(2)
        state, r = neural_stack_step(state, 1.0, 0.0, v1)
        state, r = neural_stack_step(state, 1.0, 0.0, v2)
        np.testing.assert_array_equal(r, v2)
        np.testing.assert_array_equal(state.s, [1.0, 1.0])
        state, r = neural_stack_step(state, 0.0, 1.0, np.array([5.0, 5.0]))
        np.testing.assert_array_equal(r, v1)
        np.testing.assert_array_equal(state.s, [1.0, 0.0, 0.0])

    def test_no_op_signals(self, rng):
        state = NeuralStackState.empty(3)
        state, r = neural_stack_step(state, 0.7, 0.0, rng.normal(size=3))
        after, r2 = neural_stack_step(state, 0.0, 0.0, rng.normal(size=3))
        assert after.V.shape == (2, 3)
        np.testing.assert_array_equal(after.s, [0.7, 0.0])
        np.testing.assert_array_equal(r2, r)

    def test_fractional_read(self):
        state = NeuralStackState.empty(1)
        state, _ = neural_stack_step(state, 0.6, 0.0, np.array([1.0]))
        state, r = neural_stack_step(state, 0.6, 0.0, np.array([2.0]))
        # 0.6 of the top value plus the remaining 0.4 of the one below
        np.testing.assert_allclose(r, [0.6 * 2.0 + 0.4 * 1.0])

    def test_binary_signals_match_discrete_stack(self, rng):
        for _ in range(100):
            neural, discrete = NeuralStackState.empty(3), DiscreteStack(3)
            for _ in range(int(rng.integers(1, 21))):
                push, pop = bool(rng.integers(2)), bool(rng.integers(2))
                v = rng.normal(size=3)
                neural, r = neural_stack_step(neural, float(push), float(pop), v)
                np.testing.assert_allclose(r, discrete.step(push, pop, v), atol=1e-12)

    def test_signals_checked(self):
        with pytest.raises(ArgumentError):
            neural_stack_step(NeuralStackState.empty(2), 1.5, 0.0, np.zeros(2))
        with pytest.raises(ArgumentError):
            neural_stack_step(NeuralStackState.empty(2), 1.0, 0.0, np.zeros(3))
