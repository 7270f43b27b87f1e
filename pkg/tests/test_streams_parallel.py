import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shepplab.errors import ConfigurationError, EmbeddingError, FactorizationError, NumericalError
from shepplab.parallel import block_ranges, exact_mean, exact_sum, run_blocks
from shepplab.streams import RngStream, derive_seed, stream_generator


class TestStreams:
    def test_deterministic(self):
        a = RngStream(5, 3).generator().standard_normal(10)
        np.testing.assert_array_equal(a, stream_generator(5, 3).standard_normal(10))

    def test_documented_mapping(self):
        key = np.array([5, 3], dtype=np.uint64)
        ref = np.random.Generator(np.random.Philox(key=key)).random(4)
        np.testing.assert_array_equal(RngStream(5, 3).generator().random(4), ref)

    def test_distinct_streams_uncorrelated(self):
        x = np.array([stream_generator(1, k).standard_normal(2000) for k in range(50)])
        c = np.corrcoef(x)
        off = c[~np.eye(50, dtype=bool)]
        assert np.abs(off).max() < 5 / math.sqrt(2000)

    @pytest.mark.parametrize("bad", [-1, 2**64, 1.5, "3"])
    def test_range(self, bad):
        with pytest.raises(ConfigurationError):
            RngStream(bad)

    def test_child(self):
        assert RngStream(9).child(4) == RngStream(9, 4)

    def test_derive_seed(self):
        assert derive_seed(1, "a") == derive_seed(1, "a") != derive_seed(1, "b")
        assert 0 <= derive_seed(2**64 - 1, "x") < 2**64


def _rows(k0, k1, scale):
    return np.arange(k0, k1, dtype=float)[:, None] * scale


class TestRunBlocks:
    def test_ranges(self):
        assert block_ranges(10, 4) == [(0, 4), (4, 8), (8, 10)]
        with pytest.raises(ConfigurationError):
            block_ranges(0, 4)

    @pytest.mark.parametrize("workers", [1, 2, 3])
    def test_order_preserved(self, workers):
        out = run_blocks(_rows, 23, 4, workers, 2.0)
        np.testing.assert_array_equal(out[:, 0], np.arange(23) * 2.0)


@given(st.lists(st.floats(-1e10, 1e10), min_size=1, max_size=200), st.randoms())
def test_exact_reductions_order_free(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert exact_sum(values) == exact_sum(shuffled)
    assert exact_mean(values) == exact_mean(shuffled)


def test_errors_pickle_and_name_module():
    for err in (EmbeddingError(-1.0, 1e-9), FactorizationError(3, -0.5)):
        err.context = "replications 0..7"
        back = pickle.loads(pickle.dumps(err))
        assert isinstance(back, NumericalError) and back.module == "fbm_sim"
        assert str(back) == str(err) and "replications 0..7" in str(back)
