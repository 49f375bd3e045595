import numpy as np
import pytest

from mimosounder import propagation as pr
from mimosounder import rfchain as rf
from mimosounder import waveform as wf


@pytest.fixture(scope="session")
def ofdm():
    return wf.OfdmConfig()


@pytest.fixture(scope="session")
def small_combiner():
    """4 chains on one ADC; cheap enough for per-test loopbacks."""
    return rf.default_combiner(n_antennas=4, n_adc_channels=1)


@pytest.fixture(scope="session")
def room_scenario(ofdm):
    spacing = 0.5 * pr.C_LIGHT / ofdm.carrier_hz
    array = pr.make_rect_array(8, 8, (0.5, 4.0, 1.5), spacing, "yz")
    return pr.Scenario(
        room=pr.RoomBox((0, 0, 0), (12, 8, 3), reflection=0.7),
        array_positions=array,
        paths=[pr.PathSpec("LoS", ((2.0, 1.0), (10.5, 1.0), (10.5, 7.0)))],
        name="test-room")
