"""Counter-based random streams: determinism, stream independence, and
distributional sanity of the polar normal generator."""

import numpy as np
import pytest

from blindmm.rng import RngStream, derive_key, normal_block


class TestDeterminism:
    def test_repeat_call_sequence_identical(self):
        a = RngStream(123, 5).normals(40)
        b = RngStream(123, 5).normals(40)
        assert np.array_equal(a, b)

    def test_consumption_pattern_irrelevant(self):
        s = RngStream(9, 1)
        parts = np.concatenate([s.normals(3), s.normals(1), s.normals(13)])
        whole = RngStream(9, 1).normals(17)
        assert np.array_equal(parts, whole)

    def test_streams_differ(self):
        a = RngStream(7, 0).normals(16)
        b = RngStream(7, 1).normals(16)
        assert not np.array_equal(a, b)

    def test_seeds_differ(self):
        a = RngStream(7, 0).normals(16)
        b = RngStream(8, 0).normals(16)
        assert not np.array_equal(a, b)

    def test_block_rows_match_streams(self):
        blk = normal_block(42, np.arange(50), 23)
        for sid in (0, 17, 49):
            assert np.array_equal(blk[sid], RngStream(42, sid).normals(23))

    def test_block_count_odd_even(self):
        # Odd counts drop the second normal of the final accepted pair.
        even = normal_block(3, [4], 8)[0]
        odd = normal_block(3, [4], 7)[0]
        assert np.array_equal(odd, even[:7])

    def test_derive_key_sensitivity(self):
        keys = {derive_key(1), derive_key(2), derive_key(1, 0), derive_key(1, 1), derive_key(1, 0, 0)}
        assert len(keys) == 5

    def test_zero_count(self):
        assert normal_block(1, [0, 1], 0).shape == (2, 0)


class TestDistribution:
    def test_moments(self):
        z = normal_block(2024, np.arange(2000), 100).ravel()
        n = z.size
        assert abs(z.mean()) < 5.0 / np.sqrt(n)
        assert abs(z.var() - 1.0) < 5.0 * np.sqrt(2.0 / n)

    def test_no_correlation_between_consecutive(self):
        z = normal_block(55, np.arange(500), 200)
        x, y = z[:, :-1].ravel(), z[:, 1:].ravel()
        corr = np.corrcoef(x, y)[0, 1]
        assert abs(corr) < 5.0 / np.sqrt(x.size)

    def test_no_correlation_between_streams(self):
        z = normal_block(56, np.arange(400), 250)
        corr = np.corrcoef(z[:-1].ravel(), z[1:].ravel())[0, 1]
        assert abs(corr) < 5.0 / np.sqrt(z[:-1].size)

    def test_tail_mass(self):
        # P(|Z| > 2) = 4.55%; loose band around it.
        z = normal_block(77, np.arange(1000), 200).ravel()
        frac = np.mean(np.abs(z) > 2.0)
        assert 0.040 < frac < 0.051

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            RngStream(0, 0).normals(-1)
