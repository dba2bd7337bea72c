"""Exact integer double factorials, binomials and the double-factorial sum identity.

All results are checked against signed 64-bit range; Python ints would happily
grow past it, but the callers feed these into float bounds and the identity
checks are meant to run at machine width.
"""

from .errors import EvenArgument, OutOfRange, Overflow

INT64_MAX = 2**63 - 1


def _checked(value):
    if abs(value) > INT64_MAX:
        raise Overflow(f"integer result {value} exceeds 64-bit range")
    return value


def double_factorial(n):
    """n!! for odd n >= -1, with (-1)!! = 1."""
    if n < -1:
        raise OutOfRange(f"double factorial needs n >= -1, got {n}")
    if n % 2 == 0:
        raise EvenArgument(f"only odd double factorials are supported, got {n}")
    result = 1
    for k in range(3, n + 1, 2):
        result = _checked(result * k)
    return result


def binomial(n, k):
    if not (0 <= k <= n <= 40):
        raise OutOfRange(f"binomial needs 0 <= k <= n <= 40, got n={n}, k={k}")
    k = min(k, n - k)
    result = 1
    # exact at every step: result * (n - i) is divisible by (i + 1)
    for i in range(k):
        result = _checked(result * (n - i)) // (i + 1)
    return result


def dblfact_sum(i):
    """sum_{k=1}^{i} C(i, k) (2k-3)!! (2(i-k)-1)!!, which equals (2i-1)!!."""
    if not (2 <= i <= 15):
        raise OutOfRange(f"dblfact_sum needs 2 <= i <= 15, got {i}")
    total = 0
    for k in range(1, i + 1):
        term = _checked(binomial(i, k) * double_factorial(2 * k - 3))
        term = _checked(term * double_factorial(2 * (i - k) - 1))
        total = _checked(total + term)
    return total


def phi_sum(d):
    """sum_{k=1}^{d-1} C(d-1, k) (2k-3)!! (2(d-k)-3)!!, which equals (2d-3)!!."""
    if not (2 <= d <= 16):
        raise OutOfRange(f"phi_sum needs 2 <= d <= 16, got {d}")
    total = 0
    for k in range(1, d):
        term = _checked(binomial(d - 1, k) * double_factorial(2 * k - 3))
        term = _checked(term * double_factorial(2 * (d - k) - 3))
        total = _checked(total + term)
    return total
