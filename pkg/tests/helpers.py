import numpy as np

EXAMPLE3 = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]]) / 3.0
PM_HALF = np.array([[0.5, -0.5], [-0.5, 0.5]])


def random_centered(n, rng, unit_variance=True):
    """Seeded double-centered Gaussian matrix, optionally scaled to Var(W) = 1."""
    a = rng.normal(size=(n, n))
    c = a - a.mean(axis=1, keepdims=True) - a.mean(axis=0, keepdims=True) + a.mean()
    if unit_variance:
        c = c / np.sqrt(np.sum(c * c) / (n - 1))
    return c


def brute_force_variance(c):
    """Var(W) straight from the definition, one permutation at a time."""
    import itertools

    n = c.shape[0]
    sums = [sum(c[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))]
    mean = sum(sums) / len(sums)
    return sum((s - mean) ** 2 for s in sums) / len(sums)
