"""Independent reference computations shared by the tests."""

import math
from fractions import Fraction


def dist_to_int(x):
    """||x|| for an exact Surd or Fraction."""
    f = math.floor(x)
    return min(x - f, f + 1 - x)


def brute_ncf(x: Fraction, n: int) -> list[int]:
    """Negative continued fraction digits of a rational by the bare recursion."""
    out = []
    while x != 0 and len(out) < n:
        a = math.ceil(1 / x)
        out.append(a)
        x = a - 1 / x
    return out


def ostrowski_ok(c, a) -> bool:
    """Digit bounds, nonzero leading digit and no block a_i-1, a_{i+1}-2, ..., a_j-1 (j > i)."""
    n = len(c)
    if n == 0 or c[-1] < 1:
        return False
    if any(not 0 <= c[k] <= a[k] - 1 for k in range(n)):
        return False
    for i in range(n):
        if c[i] != a[i] - 1:
            continue
        j = i + 1
        while j < n and c[j] == a[j] - 2:
            j += 1
        if j < n and c[j] == a[j] - 1:
            return False
    return True


def davenport_reference(beta: Fraction, alpha_digits, alpha_value, n: int, dps: int = 400):
    """b_i = floor(beta_i / alpha_i) with complete quotients rebuilt in mpmath."""
    import mpmath

    with mpmath.workdps(dps):
        x = mpmath.mpf(alpha_value)
        quotients = [x]
        for a in alpha_digits[: n - 1]:
            x = a - 1 / x
            quotients.append(x)
        b = mpmath.mpf(beta.numerator) / beta.denominator
        out = []
        for q in quotients[:n]:
            t = b / q
            d = int(mpmath.floor(t))
            out.append(d)
            b = t - d
        return out


def lambda_bound_violations(alpha, beta: Fraction, n_max: int) -> tuple[int, int]:
    """Exhaustive scan of q ||q alpha - beta|| over [q_n, q_{n+1}) against
    min(lambda_n, rho_n, lambda_{n+1}, rho_{n+1}).

    A 64-bit fixed-point sweep picks candidates; every candidate within a
    relative 1e-6 of the bound is then decided in exact surd arithmetic.
    Returns ``(violations, candidates_checked)``.
    """
    import numpy as np

    from ncfray.spectrum import trace

    tr = trace(beta, alpha, depth=n_max + 1)
    x = alpha.source
    A = np.uint64(x.fixed(64) % (1 << 64))
    B = np.uint64(math.floor(beta * (1 << 64)) % (1 << 64))
    violations = checked = 0
    for n in range(1, n_max + 1):
        lv, nx = tr[n], tr[n + 1]
        bound = min(lv.lam, lv.rho, nx.lam, nx.rho)
        cut = float(bound) * (1 + 1e-6)
        q = np.arange(alpha.q(n), alpha.q(n + 1), dtype=np.uint64)
        y = q * A - B
        dist = np.minimum(y, np.uint64(0) - y).astype(np.float64) * 2.0 ** -64
        vals = q.astype(np.float64) * dist
        for qc in q[vals < cut]:
            qc = int(qc)
            checked += 1
            if qc * dist_to_int(qc * x - beta) < bound:
                violations += 1
    return violations, checked
