import random

from hypothesis import given, strategies as st
import pytest

from src.devices.rf_link import (
    WORD_BITS,
    Ht12Frame,
    RfLinkUnit,
    SensorBank,
    corrupt,
    decode,
    default_banks,
    encode,
    sense,
    split_words,
)
from src.errors import BitStreamError, SlotIndexError
from src.scenario.stimulus import StimulusDriver
from src.sim.kernel import Simulation
from src.sim.signals import SignalId


def oracle_accepts(stream, local_address, k):
    """Brute force: some k consecutive whole words carry sync, address and equal data"""
    words = split_words(stream)
    for start in range(len(words) - k + 1):
        window = words[start:start + k]
        if all(sync == 1 and address == local_address for sync, address, _ in window):
            if len({data for _, _, data in window}) == 1:
                return window[0][2]
    return None


@pytest.mark.slow
def test_exhaustive_round_trip():
    for address in range(256):
        for data in range(16):
            result = decode(encode(Ht12Frame(address, data), 3), address, k=3)
            assert result.vt
            assert result.data == data


def test_word_layout():
    bits = encode(Ht12Frame(0xA5, 0x3), repetitions=1)
    assert bits == (1, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1)
    assert len(encode(Ht12Frame(0, 0), repetitions=3)) == 3 * WORD_BITS


def test_address_isolation():
    stream = encode(Ht12Frame(0x05, 0x9), 3)
    assert not decode(stream, 0x06, k=3).vt
    assert decode(stream, 0x05, k=3).data == 0x9


def test_single_flip_defeats_k_equal_reps():
    stream = encode(Ht12Frame(0x10, 0x4), 3)
    assert not decode(corrupt(stream, [WORD_BITS]), 0x10, k=3).vt


def test_flip_in_last_word_tolerated_with_lower_k():
    stream = encode(Ht12Frame(0x10, 0x4), 3)
    result = decode(corrupt(stream, [2 * WORD_BITS + 12]), 0x10, k=2)
    assert result.vt and result.data == 0x4


def test_partial_word_ignored():
    stream = encode(Ht12Frame(0x01, 0x1), 3)[:-1]
    assert not decode(stream, 0x01, k=3).vt
    assert decode(stream, 0x01, k=2).vt


def test_frame_validation():
    with pytest.raises(BitStreamError):
        Ht12Frame(256, 0)
    with pytest.raises(BitStreamError):
        Ht12Frame(0, 16)
    with pytest.raises(BitStreamError):
        encode(Ht12Frame(0, 0), 0)
    with pytest.raises(BitStreamError):
        decode((), 0, k=0)


def test_corrupt_out_of_range():
    with pytest.raises(BitStreamError):
        corrupt((0, 1), [2])


@given(
    bits=st.lists(st.integers(0, 1), min_size=1, max_size=80),
    data=st.data(),
)
def test_corrupt_is_an_involution(bits, data):
    positions = data.draw(st.lists(st.integers(0, len(bits) - 1), unique=True))
    assert corrupt(corrupt(bits, positions), positions) == tuple(bits)


def test_decoder_agrees_with_oracle_on_random_corruptions():
    rng = random.Random(2024)
    for _ in range(1000):
        address, data = rng.randrange(256), rng.randrange(16)
        reps = rng.randint(1, 5)
        k = rng.randint(1, reps)
        stream = encode(Ht12Frame(address, data), reps)
        word = rng.randrange(reps)
        flips = rng.sample(range(WORD_BITS), rng.randint(1, 3))
        stream = corrupt(stream, [word * WORD_BITS + flip for flip in flips])
        local = address if rng.random() < 0.9 else rng.randrange(256)
        result = decode(stream, local, k)
        expected = oracle_accepts(stream, local, k)
        assert result.vt == (expected is not None)
        assert result.data == expected


def test_sense_packs_sensor_lines():
    bank = SensorBank(bank_index=0, address=0, occupancy=(True, False, True, False))
    assert sense(bank) == 0b0101
    assert sense(bank.with_sensor(3, True)) == 0b1101


def test_default_banks():
    banks = default_banks(10)
    assert [bank.address for bank in banks] == [0, 1, 2]
    assert banks[2].first_slot == 8
    with pytest.raises(SlotIndexError):
        SensorBank(bank_index=8, address=0)


def _rf_bench(slot_count=4, fnd_at=2):
    rf = RfLinkUnit(slot_count=slot_count)
    stim = StimulusDriver([SignalId('reset'), SignalId('fnd')], rf=rf)
    stim.schedule_set(fnd_at, 'fnd', 1)
    stim.schedule_set(fnd_at + 1, 'fnd', 0)
    sim = Simulation()
    sim.register_component(stim, order=0)
    sim.register_component(rf, order=1)
    return sim, rf, stim


def test_sweep_delivers_bank_after_its_words():
    sim, rf, stim = _rf_bench()
    rf.set_occupancy(2, True)
    trace = sim.run(60)
    # one bank of 3 words, first bit at cycle 2
    assert trace.value_at('rf_vt', 40) == 1
    assert trace.value_at('rf_data', 40) == 0b0100
    assert trace.value_at('rf_vt', 41) == 0
    assert trace.value_at('fnd1', 40) == 1
    assert rf.sweeps_completed == 1
    assert [e.value for e in trace.changes('rf_tx')][:2] == [1, 0]


def test_scheduled_corruption_rejects_bank():
    sim, rf, stim = _rf_bench()
    stim.schedule_corruption(0, 0)
    trace = sim.run(60)
    assert trace.value_at('rf_vt', 40) == 0
    assert any('rejected' in note.message for note in trace.notes)
    assert trace.value_at('fnd1', 40) == 1


def test_rx_mirrors_tx_without_noise():
    sim, rf, stim = _rf_bench(slot_count=8)
    trace = sim.run(90)
    for cycle in range(2, 80):
        assert trace.value_at('rf_rx', cycle) == trace.value_at('rf_tx', cycle)


def test_noise_is_seeded():
    def received(seed):
        rf = RfLinkUnit(slot_count=32, noise_rate=0.05, seed=seed)
        stim = StimulusDriver([SignalId('reset'), SignalId('fnd')], rf=rf)
        stim.schedule_set(0, 'fnd', 1)
        sim = Simulation()
        sim.register_component(stim, order=0)
        sim.register_component(rf, order=1)
        return sim.run(320).changes('rf_rx')

    assert received(7) == received(7)


def test_occupancy_bounds():
    rf = RfLinkUnit(slot_count=8)
    with pytest.raises(SlotIndexError):
        rf.set_occupancy(8, True)
    with pytest.raises(SlotIndexError):
        rf.occupied(8)
    rf.set_occupancy(5, True)
    assert rf.occupied(5)
    assert not rf.occupied(4)
    rf.set_occupancy(5, False)
    assert not rf.occupied(5)


@given(
    address=st.integers(0, 255),
    data=st.integers(0, 15),
    k=st.integers(1, 4),
    extra=st.integers(1, 4),
)
def test_round_trip_with_spare_repetitions(address, data, k, extra):
    result = decode(encode(Ht12Frame(address, data), k + extra), address, k)
    assert result.vt
    assert result.data == data


def test_corrupt_third_of_four_words_rejects():
    stream = encode(Ht12Frame(0x3C, 0x5), 4)
    result = decode(corrupt(stream, [2 * WORD_BITS + 5]), 0x3C, k=3)
    assert not result.vt
    assert result.data is None


def test_corrupt_first_of_four_words_accepts():
    stream = encode(Ht12Frame(0x3C, 0x5), 4)
    result = decode(corrupt(stream, [5]), 0x3C, k=3)
    assert result.vt
    assert result.data == 0x5
