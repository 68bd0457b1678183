"""Brute-force oracle for token alignment labels.

Enumerates every complete edit script between two token sequences,
keeps the minimum-cost ones, and picks the canonical script: the one
whose operations, read from the end of the sentence backwards, are
lexicographically smallest under match < substitution < deletion <
insertion. Exponential; intended for sequences of length <= 6.
"""

from __future__ import annotations

MATCH, SUB, DEL, INS = 0, 1, 2, 3
_COST = {MATCH: 0, SUB: 1, DEL: 1, INS: 1}


def enumerate_scripts(src: list[str], cor: list[str]):
    """Yield (ops, cost) for every complete edit script."""
    n, m = len(src), len(cor)
    stack = [(0, 0, (), 0)]
    while stack:
        i, j, ops, cost = stack.pop()
        if i == n and j == m:
            yield ops, cost
            continue
        if i < n and j < m:
            if src[i] == cor[j]:
                stack.append((i + 1, j + 1, ops + (MATCH,), cost))
            else:
                stack.append((i + 1, j + 1, ops + (SUB,), cost + 1))
        if i < n:
            stack.append((i + 1, j, ops + (DEL,), cost + 1))
        if j < m:
            stack.append((i, j + 1, ops + (INS,), cost + 1))


def canonical_labels(src: list[str], cor: list[str]) -> list[int]:
    scripts = list(enumerate_scripts(src, cor))
    best_cost = min(cost for _, cost in scripts)
    minimal = [ops for ops, cost in scripts if cost == best_cost]
    canonical = min(minimal, key=lambda ops: tuple(reversed(ops)))

    n = len(src)
    labels = [0] * n
    i = 0
    for op in canonical:
        if op == MATCH:
            i += 1
        elif op in (SUB, DEL):
            labels[i] = 1
            i += 1
        else:  # insertion: the source token right after the gap is wrong
            labels[i if i < n else n - 1] = 1
    return labels
