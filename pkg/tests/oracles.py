"""Independent brute-force recomputations used to cross-check statistics.

Pure-Python loop implementations, deliberately separate from the library's
vectorized code paths.
"""
import math


def brute_cohen(a, b):
    """Returns kappa, or None when chance agreement is total."""
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    categories = sorted(set(a) | set(b))
    chance = 0.0
    for c in categories:
        chance += (sum(1 for x in a if x == c) / n) * (sum(1 for y in b if y == c) / n)
    if chance >= 1.0:
        return None
    return (observed - chance) / (1.0 - chance)


def brute_pearson(x, y):
    """Returns r, or None when either vector is constant."""
    n = len(x)
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    cov = sum((a - mean_x) * (b - mean_y) for a, b in zip(x, y))
    var_x = sum((a - mean_x) ** 2 for a in x)
    var_y = sum((b - mean_y) ** 2 for b in y)
    if var_x == 0.0 or var_y == 0.0:
        return None
    r = cov / (math.sqrt(var_x) * math.sqrt(var_y))
    return max(-1.0, min(1.0, r))


def brute_fleiss(rows):
    """Fleiss' kappa from a list of per-item category-count rows, or None."""
    n = sum(rows[0])
    item_count = len(rows)
    per_item = [
        (sum(c * c for c in row) - n) / (n * (n - 1)) for row in rows
    ]
    p_mean = sum(per_item) / item_count
    total = n * item_count
    proportions = [
        sum(row[j] for row in rows) / total for j in range(len(rows[0]))
    ]
    p_chance = sum(p * p for p in proportions)
    if p_chance >= 1.0:
        return None
    return (p_mean - p_chance) / (1.0 - p_chance)


def brute_report(scores):
    """Aggregate {rater: {video: score}} the same way the library promises to.

    Returns (cohen_avg, fleiss, pearson_avg) with None for empty aggregates.
    """
    raters = sorted(scores)
    cohens, pearsons = [], []
    for i in range(len(raters)):
        for j in range(i + 1, len(raters)):
            va, vb = scores[raters[i]], scores[raters[j]]
            common = sorted(set(va) & set(vb))
            if not common:
                continue
            x = [va[v] for v in common]
            y = [vb[v] for v in common]
            kappa = brute_cohen(x, y)
            if kappa is not None:
                cohens.append(kappa)
            if len(x) >= 2:
                r = brute_pearson(x, y)
                if r is not None:
                    pearsons.append(r)
    complete = sorted(set.intersection(*(set(v) for v in scores.values())))
    fleiss = None
    if complete:
        rows = []
        for video in complete:
            row = [0] * 5
            for rater in raters:
                row[scores[rater][video] - 1] += 1
            rows.append(row)
        fleiss = brute_fleiss(rows)
    cohen_avg = sum(cohens) / len(cohens) if cohens else None
    pearson_avg = sum(pearsons) / len(pearsons) if pearsons else None
    return cohen_avg, fleiss, pearson_avg
