"""Two functions of order one where the small-order estimates fail.

exp: Delta e^z / e^z = e - 1 for every z, while nu(r)/r stays near 1.
1/Gamma: Delta Phi / Phi = 1/z - 1 tends to -1, far from nu(r)/r.

    python3 demos/order_one_breakdown.py
"""

from deltawv import builtin, gamma_counterexample, verify_wv_difference

rep = verify_wv_difference(builtin("exp"), 1, [10, 100, 1000])
for row in rep.rows:
    print(f"exp     r={float(row.r):>6.0f}  ratio {float(row.delta_ratio):.6f}  nu/r {float(row.wv_prediction):.4f}")

for row in gamma_counterexample([2, 10, 50]):
    print(
        f"1/Gamma z={float(row.z):>4.0f}  ratio {float(row.delta_ratio):+.6f}  1/z-1 {float(row.identity_value):+.6f}"
        f"  nu/z {float(row.wv_prediction):.3f}  match {row.match}"
    )
