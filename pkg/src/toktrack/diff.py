"""Longest-common-subsequence alignment of two token sequences.

Myers' O((N+M)D) algorithm in its linear-space, divide-and-conquer form,
so memory stays proportional to the input even for large rewrites.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence


def lcs_pairs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    """Return index pairs ``(i, j)`` with ``a[i] == b[j]`` forming an LCS.

    Pairs are strictly increasing in both coordinates. The result is fully
    deterministic for a given input.
    """
    # Elements present on only one side can never be matched; dropping them
    # keeps the LCS exact and shrinks D for heavy rewrites.
    in_a = Counter(a)
    in_b = Counter(b)
    a_idx = [i for i, s in enumerate(a) if s in in_b]
    b_idx = [j for j, s in enumerate(b) if s in in_a]
    fa = [a[i] for i in a_idx]
    fb = [b[j] for j in b_idx]
    out: list[tuple[int, int]] = []
    _align(fa, 0, len(fa), fb, 0, len(fb), out)
    return [(a_idx[i], b_idx[j]) for i, j in out]


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    return len(lcs_pairs(a, b))


def _align(a, a_lo, a_hi, b, b_lo, b_hi, out):
    while a_lo < a_hi and b_lo < b_hi and a[a_lo] == b[b_lo]:
        out.append((a_lo, b_lo))
        a_lo += 1
        b_lo += 1
    suffix = []
    while a_lo < a_hi and b_lo < b_hi and a[a_hi - 1] == b[b_hi - 1]:
        a_hi -= 1
        b_hi -= 1
        suffix.append((a_hi, b_hi))

    if a_lo < a_hi and b_lo < b_hi:
        d, xs, ys, xe, ye = _middle_snake(a, a_lo, a_hi, b, b_lo, b_hi)
        if d > 1:
            _align(a, a_lo, a_lo + xs, b, b_lo, b_lo + ys, out)
            for step in range(xe - xs):
                out.append((a_lo + xs + step, b_lo + ys + step))
            _align(a, a_lo + xe, a_hi, b, b_lo + ye, b_hi, out)
        else:
            # One side is the other plus a single element.
            _greedy_subsequence(a, a_lo, a_hi, b, b_lo, b_hi, out)

    out.extend(reversed(suffix))


def _greedy_subsequence(a, a_lo, a_hi, b, b_lo, b_hi, out):
    if a_hi - a_lo <= b_hi - b_lo:
        j = b_lo
        for i in range(a_lo, a_hi):
            while b[j] != a[i]:
                j += 1
            out.append((i, j))
            j += 1
    else:
        i = a_lo
        for j in range(b_lo, b_hi):
            while a[i] != b[j]:
                i += 1
            out.append((i, j))
            i += 1


def _middle_snake(a, a_lo, a_hi, b, b_lo, b_hi):
    n = a_hi - a_lo
    m = b_hi - b_lo
    delta = n - m
    odd = delta & 1
    max_d = (n + m + 1) // 2
    off = max_d + 1
    vf = [0] * (2 * max_d + 3)
    vb = [0] * (2 * max_d + 3)

    for d in range(max_d + 1):
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and vf[off + k - 1] < vf[off + k + 1]):
                x = vf[off + k + 1]
            else:
                x = vf[off + k - 1] + 1
            y = x - k
            xs, ys = x, y
            while x < n and y < m and a[a_lo + x] == b[b_lo + y]:
                x += 1
                y += 1
            vf[off + k] = x
            if odd and delta - (d - 1) <= k <= delta + (d - 1):
                if x + vb[off + delta - k] >= n:
                    return 2 * d - 1, xs, ys, x, y

        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and vb[off + k - 1] < vb[off + k + 1]):
                x = vb[off + k + 1]
            else:
                x = vb[off + k - 1] + 1
            y = x - k
            xs, ys = x, y
            while x < n and y < m and a[a_hi - 1 - x] == b[b_hi - 1 - y]:
                x += 1
                y += 1
            vb[off + k] = x
            if not odd and -d <= delta - k <= d:
                if x + vf[off + delta - k] >= n:
                    return 2 * d, n - x, m - y, n - xs, m - ys

    raise AssertionError("middle snake not found")  # pragma: no cover
