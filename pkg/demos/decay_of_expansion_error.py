"""How fast does the truncated Stirling expansion of Delta f / f converge?

For f(z) = I_0(2 sqrt z), an entire function of order 1/2, the error of the
N-term expansion of Delta f(r)/f(r) shrinks like r^((N+1)(sigma-1)).  The
script prints the error table and the fitted log-log slopes.

    python3 demos/decay_of_expansion_error.py
"""

from deltawv import builtin, verify_expansion, verify_first_difference
from deltawv._numeric import geometric_grid

f = builtin("bessel_i0_sqrt")
grid = geometric_grid(1e2, 1e6, 9)

for N in (1, 2, 3):
    rep = verify_first_difference(f, N, r_grid=grid, prec=512)
    print(f"n=1 N={N}: slope {rep.fitted_slope:+.3f} (expected {(N + 1) * -0.5:+.1f})  {rep.status}")

# higher differences: the measured rate follows (N+1)(sigma-1), not (n+N+1)(sigma-1)
for n, N in ((2, 2), (2, 4), (3, 3)):
    rep = verify_expansion(f, n, N, r_grid=grid, eps=0.1, prec=512)
    print(
        f"n={n} N={N}: slope {rep.fitted_slope:+.3f}  "
        f"conservative {rep.claimed_exponent_conservative:+.1f}  full {rep.claimed_exponent_full:+.1f}"
    )

rep = verify_first_difference(f, 2, r_grid=grid, prec=512)
print("\n       r            |error|")
for row in rep.rows:
    print(f"{float(row.r):>10.0f}   {float(row.abs_err):.3e}")
