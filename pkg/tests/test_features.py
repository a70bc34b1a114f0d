import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from golden import GOLDEN

from fanci_privacy.features import (FEATURE_NAMES, IDX, N_FEATURES, canonical_key, distribution_stats,
                                    entropy_from_counts, extract_matrix, extract_normalized, extract_raw,
                                    ngram_count_distribution, normalize, shannon_entropy)

# counts in "wwwexample" are w:3, e:2 and five singletons
WWWEXAMPLE_ENTROPY = -(0.3 * math.log2(0.3) + 0.2 * math.log2(0.2) + 0.5 * math.log2(0.1))


def test_feature_layout():
    assert N_FEATURES == 45
    assert FEATURE_NAMES[0] == "length"
    assert FEATURE_NAMES[-1] == "shannon_entropy"
    assert FEATURE_NAMES[IDX["1-grams_std"]:IDX["1-grams_std"] + 7] == tuple(
        f"1-grams_{s}" for s in ("std", "median", "mean", "min", "max", "perc_25", "perc_75"))
    assert len(set(FEATURE_NAMES)) == 45


@pytest.mark.parametrize("domain", sorted(GOLDEN))
def test_golden_vectors(domain, small_psl):
    np.testing.assert_allclose(extract_raw(domain, small_psl), GOLDEN[domain], rtol=0, atol=1e-9)


def test_www_example_components(small_psl):
    f = extract_raw("www.example.com", small_psl)
    assert f[IDX["length"]] == 15
    assert list(f[1:5]) == [0, 1, 0, 0]
    assert f[IDX["subdomain_lengths_mean"]] == 5
    assert f[IDX["contains_wwwdot"]] == 1 and f[IDX["has_valid_tld"]] == 1
    assert f[IDX["vowel_ratio"]] == pytest.approx(0.3)
    assert f[IDX["alphabet_size"]] == 7
    assert f[IDX["char_diversity"]] == pytest.approx(0.7)
    assert f[IDX["ratio_of_repeated_chars"]] == pytest.approx(2 / 7)
    assert f[IDX["consecutive_consonant_ratio"]] == pytest.approx(0.6)
    assert f[IDX["shannon_entropy"]] == pytest.approx(2.6464393446710157, abs=1e-12)


def test_digit_only_domain(small_psl):
    f = extract_raw("1234.com", small_psl)
    assert f[IDX["contains_digits"]] == 1
    assert f[IDX["only_digits_subdomains"]] == 1
    assert f[IDX["digit_ratio"]] == 1.0
    assert f[IDX["vowel_ratio"]] == 0.0


def test_one_char_label(small_psl):
    f = extract_raw("a.com", small_psl)
    assert f[IDX["one_char_subdomains"]] == 1
    assert f[IDX["length"]] == 5


def test_suffix_as_infix_and_prefix_repetition(small_psl):
    f = extract_raw("shop.com.evil.net", small_psl)
    assert f[IDX["contains_tld_as_infix"]] == 1
    assert extract_raw("abcabc", small_psl)[IDX["prefix_repetition"]] == 1
    assert extract_raw("abcab", small_psl)[IDX["prefix_repetition"]] == 0


def test_underscore_and_ipv4(small_psl):
    f = extract_raw("_dmarc.x.com", small_psl)
    assert f[IDX["underscore_ratio"]] == pytest.approx(1 / 7)
    assert extract_raw("10.0.0.1.example.com", small_psl)[IDX["contains_ipv4_addr"]] == 1
    assert extract_raw("10.0.0.256.example.com", small_psl)[IDX["contains_ipv4_addr"]] == 0
    assert extract_raw("10.0.1.example.com", small_psl)[IDX["contains_ipv4_addr"]] == 0


def test_subdomain_buckets_clip(small_psl):
    f = extract_raw("a.b.c.d.e.f.com", small_psl)
    assert list(f[1:5]) == [0, 0, 0, 1]


@pytest.mark.parametrize("dsf,n,expected", [
    ("wwwexample", 1, [1, 1, 1, 1, 1, 2, 3]),
    ("ab", 3, []),
    ("aaaa", 2, [3]),
])
def test_ngram_distribution(dsf, n, expected):
    assert ngram_count_distribution(dsf, n) == expected


def test_distribution_stats():
    std, median, mean, lo, hi, p25, p75 = distribution_stats([3, 2, 1, 1, 1, 1, 1])
    assert mean == pytest.approx(10 / 7)
    assert (median, lo, hi, p25, p75) == (1, 1, 3, 1, 1.5)
    assert std == pytest.approx(math.sqrt(26) / 7)
    assert distribution_stats([]) == (0.0,) * 7
    assert distribution_stats([2, 2, 2])[:5] == (0.0, 2, 2, 2, 2)


def test_distribution_stats_of_equal_triples():
    # mean of {3,3,1,1,1,1,1} is 11/7
    assert distribution_stats([3, 3, 1, 1, 1, 1, 1])[2] == pytest.approx(11 / 7)


def test_entropy_examples():
    assert shannon_entropy("aaaa") == 0
    assert shannon_entropy("ab") == 1.0
    assert shannon_entropy("wwwexample") == pytest.approx(WWWEXAMPLE_ENTROPY, abs=1e-12)
    assert entropy_from_counts([1, 3, 2]) == entropy_from_counts([3, 2, 1])


def test_normalize_example(small_psl):
    f = extract_normalized("www.example.com", small_psl)
    assert f[IDX["length"]] == pytest.approx(15 / 253)
    assert f[IDX["subdomain_lengths_mean"]] == pytest.approx(1 / 3)
    assert f[IDX["alphabet_size"]] == pytest.approx(7 / 38)
    assert f[IDX["shannon_entropy"]] == pytest.approx(WWWEXAMPLE_ENTROPY / math.log2(7))
    assert f[IDX["1-grams_mean"]] == pytest.approx((10 / 7) / 3)


def test_normalize_single_symbol_entropy(small_psl):
    raw = extract_raw("aaaa.com", small_psl)
    assert raw[IDX["alphabet_size"]] == 1
    assert normalize(raw)[IDX["shannon_entropy"]] == 0.0


def test_normalize_rejects_wrong_width():
    with pytest.raises(ValueError):
        normalize(np.zeros(44))


def test_collision_example(small_psl):
    assert canonical_key(extract_raw("ab.com", small_psl)) == canonical_key(extract_raw("ba.com", small_psl))
    assert canonical_key(extract_raw("ab.com", small_psl)) != canonical_key(extract_raw("abc.com", small_psl))


def test_canonical_key_rendering():
    assert canonical_key([0.0, 1.0, 1 / 3]) == ("0", "1.00000000000e+00", "3.33333333333e-01")


def test_extract_matrix_shape(small_psl):
    m = extract_matrix(["a.com", "abcd", "1234.com"], small_psl)
    assert m.shape == (3, 45)
    assert extract_matrix([], small_psl).shape == (0, 45)


_domain = st.lists(st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-_", min_size=1, max_size=30),
                   min_size=1, max_size=6).map(".".join).filter(lambda s: 4 <= len(s) <= 253)


@settings(max_examples=500, deadline=None)
@given(_domain)
def test_normalized_in_unit_interval(domain):
    f = extract_normalized(domain)
    assert f.shape == (45,)
    assert np.all((f >= 0) & (f <= 1))


@settings(max_examples=300, deadline=None)
@given(_domain)
def test_one_hot_and_ratios(domain):
    f = extract_raw(domain)
    assert f[1:5].sum() == 1
    for name in ("vowel_ratio", "digit_ratio", "char_diversity", "underscore_ratio",
                 "only_hex_subdomains_ratio", "ratio_of_repeated_chars",
                 "consecutive_consonant_ratio", "consecutive_digits_ratio"):
        assert 0 <= f[IDX[name]] <= 1
