from __future__ import annotations

import random

from toktrack.diff import lcs_length, lcs_pairs


def dp_lcs(a, b):
    m, n = len(a), len(b)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        for j in range(n - 1, -1, -1):
            if a[i] == b[j]:
                table[i][j] = table[i + 1][j + 1] + 1
            else:
                table[i][j] = max(table[i + 1][j], table[i][j + 1])
    return table[0][0]


def check(a, b):
    pairs = lcs_pairs(a, b)
    assert len(pairs) == dp_lcs(a, b)
    assert all(a[i] == b[j] for i, j in pairs)
    for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]):
        assert i1 < i2 and j1 < j2


def test_basic_cases():
    assert lcs_pairs([], []) == []
    assert lcs_pairs(["a"], []) == []
    assert lcs_pairs(list("abc"), list("abc")) == [(0, 0), (1, 1), (2, 2)]
    assert lcs_pairs(list("abc"), list("ac")) == [(0, 0), (2, 1)]
    assert lcs_length(list("abcbdab"), list("bdcaba")) == 4


def test_against_dynamic_programming():
    rng = random.Random(7)
    for _ in range(2000):
        alphabet = "abcd"[: rng.randint(1, 4)]
        a = [rng.choice(alphabet) for _ in range(rng.randint(0, 25))]
        b = [rng.choice(alphabet) for _ in range(rng.randint(0, 25))]
        check(a, b)


def test_long_similar_sequences():
    rng = random.Random(11)
    a = [str(rng.randint(0, 50)) for _ in range(3000)]
    b = list(a)
    for _ in range(40):
        k = rng.randrange(len(b))
        if rng.random() < 0.5:
            del b[k]
        else:
            b.insert(k, "new")
    pairs = lcs_pairs(a, b)
    assert len(pairs) >= len(a) - 40
    assert all(a[i] == b[j] for i, j in pairs)


def test_deterministic():
    a, b = list("xaybzcxa"), list("abxczyax")
    assert lcs_pairs(a, b) == lcs_pairs(a, b)
