import math

import numpy as np
import pytest

from b92.finite import B92Input, b92_keylen_fn, key_length_b92, leak_ec, skr_map_from_sweep
from conftest import make_stream
from core.params import SecurityParams
from mathkit import binary_entropy
from timetag.sifting import SiftedStats, sweep_filters


def _lgamma_quantile(eps: float, n: int, p: float) -> int:
    log_eps = math.log(eps)
    log_cdf = -math.inf
    for k in range(n + 1):
        log_pmf = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * math.log(p) + (n - k) * math.log1p(-p)
        hi, lo = max(log_cdf, log_pmf), min(log_cdf, log_pmf)
        log_cdf = hi + math.log1p(math.exp(lo - hi)) if lo > -math.inf else hi
        if log_cdf >= log_eps - 1e-12:
            return k
    return n


def test_leak_at_half_error_rate() -> None:
    n = 10_000
    expected = n - 0.5 * math.log2(n) - math.log2(1e10)
    assert leak_ec(n, 0.5, 1e-10) == pytest.approx(expected, rel=1e-12)


def test_leak_matches_independent_evaluation() -> None:
    n, q, eps = 17_500, 0.0649, 1e-10
    quantile = _lgamma_quantile(eps, n, 1 - q)
    expected = (
        n * binary_entropy(q)
        + (n * (1 - q) - quantile) * math.log2((1 - q) / q)
        - 0.5 * math.log2(n)
        - math.log2(1 / eps)
    )
    assert leak_ec(n, q, eps) == pytest.approx(expected, rel=1e-9)


def test_leak_envelope_for_large_blocks() -> None:
    n, q = 1_000_000, 0.02
    ratio = leak_ec(n, q, 1e-10) / n
    assert binary_entropy(q) <= ratio <= 1.2 * binary_entropy(q)


def test_leak_endpoints_and_errors() -> None:
    assert leak_ec(100, 0.0, 1e-10) == 0.0
    assert leak_ec(1e6, 1.0, 1e-10) == 0.0
    with pytest.raises(ValueError):
        leak_ec(0.5, 0.1, 1e-10)
    with pytest.raises(ValueError):
        leak_ec(100, 1.2, 1e-10)


def test_key_length_at_measured_point() -> None:
    result = key_length_b92(B92Input(n_r=17_500, qber=0.0649))
    assert result.skr_bps == pytest.approx(7_000, rel=0.15)
    assert 0 < result.key_len_bits <= 17_500
    assert result.eps_qkd == pytest.approx(SecurityParams().eps_qkd_b92())


def test_key_length_clamps() -> None:
    result = key_length_b92(B92Input(n_r=17_500, qber=0.2))
    assert result.key_len_bits == 0.0
    assert result.clamped
    perfect = key_length_b92(B92Input(n_r=17_500, qber=0.0))
    assert perfect.key_len_bits == pytest.approx(17_500 - 2 * math.log2(1 / 2e-10) - math.log2(2e10))


def test_key_length_monotone() -> None:
    keys = [key_length_b92(B92Input(n_r=17_500, qber=q)).key_len_bits for q in np.linspace(0.001, 0.1, 100)]
    assert all(b <= a for a, b in zip(keys, keys[1:]))
    keys = [key_length_b92(B92Input(n_r=n, qber=0.05)).key_len_bits for n in range(5_000, 55_000, 5_000)]
    assert all(b > a for a, b in zip(keys, keys[1:]))
    for n in (1e4, 1e6, 1e8):
        assert key_length_b92(B92Input(n_r=n, qber=0.05)).key_len_bits / n < 1 - binary_entropy(0.05)


def test_longer_blocks_raise_rate_per_second() -> None:
    stats = SiftedStats.from_counts(17_500, 1_136, 0, 40_000_000, 1.0)
    rates = [b92_keylen_fn(block_s=t)(stats) for t in (1.0, 10.0, 100.0)]
    assert rates[0] < rates[1] < rates[2] < 17_500 * (1 - binary_entropy(stats.qber))


def test_empty_sweep_has_zero_key() -> None:
    stream = make_stream([], n_triggers=100)
    sweep = skr_map_from_sweep(sweep_filters(stream, (0.0, 2.0, 1.0), (3.0, 5.0, 1.0)))
    assert not sweep.skr_map.any()
