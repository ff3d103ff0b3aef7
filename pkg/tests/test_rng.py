import numpy as np
import pytest

from noisymc.rng import make_rng, substream_seed


def test_reproducible():
    assert np.array_equal(make_rng(5, 1, 2).random(8), make_rng(5, 1, 2).random(8))


def test_substreams_differ():
    draws = {tuple(make_rng(5, *s).integers(0, 2**32, 4)) for s in [(), (0,), (1,), (1, 0), (0, 1)]}
    assert len(draws) == 5


def test_order_independent():
    # stream (3, 7) is the same whether or not other streams were used first
    make_rng(9, 3, 6).random(100)
    assert np.array_equal(make_rng(9, 3, 7).random(4), make_rng(9, 3, 7).random(4))


def test_philox():
    assert isinstance(make_rng(0).bit_generator, np.random.Philox)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        make_rng(seed)


def test_substream_seed():
    s = substream_seed(2**64 - 1, 4, 2)
    assert 0 <= s < 2**64
    assert s == substream_seed(2**64 - 1, 4, 2) != substream_seed(2**64 - 1, 4, 3)
