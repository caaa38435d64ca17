"""Reference values for the bin-entropy constant of the uncertainty bound.

The constant is q = -log2[(dd'/2pi) * R(1, dd'/4)^2] where R is the radial
prolate spheroidal function of the first kind at order (0,0).  The package
computes R through a Legendre/spherical-Bessel expansion; this tool
cross-checks it against ``scipy.special.pro_rad1``, which is only stable
slightly off the ``x = 1`` endpoint, and against the analytic small-argument
limit R -> sinc-free value 1 (q -> -log2(dd'/2pi)).

Offline tool: run ``python tools/prolate_reference.py`` and freeze the
printed values into tests.
"""

from __future__ import annotations

import math

from scipy.special import pro_rad1

from cvqss.finite import q_constant


def scipy_radial(c: float) -> float:
    """pro_rad1 at the first x > 1 where scipy returns a finite value."""
    for offset in (1e-9, 1e-8, 1e-7, 1e-6, 1e-5):
        value = pro_rad1(0, 0, c, 1.0 + offset)[0]
        if math.isfinite(value):
            return float(value)
    raise RuntimeError(f"scipy pro_rad1 unstable near x=1 for c={c}")


def scipy_q(delta_key: float, delta_check: float) -> float:
    u = delta_key * delta_check / 4.0
    radial = scipy_radial(u)
    return -math.log2(delta_key * delta_check / (2.0 * math.pi) * radial**2)


def main() -> None:
    print(f"{'delta_key':>10} {'delta_check':>12} {'q (package)':>20} {'q (scipy)':>20} {'abs diff':>10}")
    for dk, dc in [(0.1, 0.4), (0.2, 0.2), (0.4, 0.4), (0.5, 1.0), (1.0, 1.0), (0.02, 0.02)]:
        ours = q_constant(dk, dc)
        ref = scipy_q(dk, dc)
        print(f"{dk:>10g} {dc:>12g} {ours:>20.15f} {ref:>20.15f} {abs(ours - ref):>10.2e}")
    limit = -math.log2(0.1 * 0.4 / (2.0 * math.pi))
    print(f"\nsmall-argument limit at (0.1, 0.4): {limit:.15f}")
    print(f"package value      at (0.1, 0.4): {q_constant(0.1, 0.4):.15f}")


if __name__ == "__main__":
    main()
