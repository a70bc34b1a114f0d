"""Hand-derived raw feature vectors, computed against the ``small_psl`` fixture list."""

from math import log2, sqrt

ONES7 = [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]  # n-gram stats of an all-ones distribution
ZEROS7 = [0.0] * 7

GOLDEN = {
    # dsf "wwwexample": w3 e2 x a m p l; bigram ww twice; eight distinct trigrams
    "www.example.com": [
        15, 0, 1, 0, 0, 5,
        1, 1, 0, 0, 0, 0, 0, 0, 0,
        0, 3 / 10, 0, 7 / 10, 7, 2 / 7, 6 / 10, 0,
        sqrt(26) / 7, 1, 10 / 7, 1, 3, 1, 1.5,
        sqrt(7) / 8, 1, 9 / 8, 1, 2, 1, 1,
        *ONES7,
        -(0.3 * log2(0.3) + 0.2 * log2(0.2) + 5 * 0.1 * log2(0.1)),
    ],
    # suffix in-addr.arpa, four one-digit labels forming an address
    "4.3.2.1.in-addr.arpa": [
        20, 0, 0, 0, 1, 1,
        0, 1, 1, 0, 0, 1, 1, 0, 1,
        1, 0, 1, 1, 4, 0, 0, 1,
        *ONES7, *ONES7, *ONES7,
        2,
    ],
    "1234.com": [
        8, 1, 0, 0, 0, 4,
        0, 1, 0, 0, 0, 1, 1, 0, 0,
        1, 0, 1, 1, 4, 0, 0, 1,
        *ONES7, *ONES7, *ONES7,
        2,
    ],
    "a.com": [
        5, 1, 0, 0, 0, 1,
        0, 1, 1, 0, 0, 0, 1, 0, 0,
        0, 1, 0, 1, 1, 0, 0, 0,
        *ONES7, *ZEROS7, *ZEROS7,
        0,
    ],
    # no suffix: the whole name is the dsf; consonant run "bcd"
    "abcd": [
        4, 1, 0, 0, 0, 4,
        0, 0, 0, 0, 0, 0, 1, 0, 0,
        0, 1 / 4, 0, 1, 4, 0, 3 / 4, 0,
        *ONES7, *ONES7, *ONES7,
        2,
    ],
}

assert all(len(v) == 45 for v in GOLDEN.values())
