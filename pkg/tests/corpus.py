"""Verified certificates built by the test-suite, shared with the acceptance checks."""

import numpy as np

from sparsemoments import (
    FunctionFamily,
    JordanSupport,
    build_l2_sign_interpolant,
    build_nonnegative_dual,
    chebyshev_measure_support,
    generalized_chebyshev,
    verify_dual_polynomial,
)


def power_quartic():
    fam = FunctionFamily.power(4)
    x = np.linspace(-1, 1, 10_001)
    c = 0.9 / ((x - 0.3) ** 2 * (x + 0.4) ** 2).max()
    coeffs = -c * np.polynomial.polynomial.polyfromroots([0.3, 0.3, -0.4, -0.4])
    coeffs[0] += 1.0
    return verify_dual_polynomial(coeffs, fam, [(0.3, 1), (-0.4, 1)])


def cosine_three():
    fam = FunctionFamily.cosine(3)
    return verify_dual_polynomial([0, 0, 0, 1.0], fam, [(0, 1), (2 / 3, 1), (1 / 3, -1), (1, -1)])


def certificate_corpus():
    """Every certificate the unit tests assert as verified."""
    certs = [
        ("cos3pi", cosine_three()),
        ("power-quartic", power_quartic()),
        ("nonneg-power", build_nonnegative_dual(FunctionFamily.power(4), [-2**-0.5, 2**-0.5])),
        ("nonneg-cosine", build_nonnegative_dual(FunctionFamily.cosine(2), [0.5])),
        ("nonneg-cosine-ends", build_nonnegative_dual(FunctionFamily.cosine(9), [0.0, 0.3, 0.6, 1.0])),
        ("nonneg-laplace", build_nonnegative_dual(FunctionFamily.laplace(8), [-1.0, 0.2, 0.5])),
        ("nonneg-muntz", build_nonnegative_dual(FunctionFamily.muntz([0.5, 1, 1.5, 2, 2.5]), [0.3, 1.0])),
        ("nonneg-stieltjes", build_nonnegative_dual(
            FunctionFamily.stieltjes([2, 3, -2, -3, 4, 5]), [0.1, -0.5])),
        ("l2-cosine-single", build_l2_sign_interpolant(FunctionFamily.cosine(4), JordanSupport((0.5,)), 4)),
        ("l2-cosine-cos3", build_l2_sign_interpolant(
            FunctionFamily.cosine(5), JordanSupport((0.0, 2 / 3), (1 / 3, 1.0)), 5)),
    ]
    for kind, k in (("power", 5), ("cosine", 4)):
        fam = FunctionFamily(kind, k)
        res = generalized_chebyshev(fam, k)
        jordan = chebyshev_measure_support(fam, k)
        certs.append((f"chebyshev-{kind}-{k}", verify_dual_polynomial(res.coefficients, fam, jordan)))
    return [(name, c) for name, c in certs if c.verified]
