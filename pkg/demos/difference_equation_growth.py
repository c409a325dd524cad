"""Regular growth of a solution of z Delta^2 f + f = 0.

The Newton polygon of the equation predicts order 1/2.  The script builds the
coefficient recurrence for f = sum b_m C(z, m), extracts the minimal solution
by backward recursion and fits log M(r) = L r^chi + kappa log r + c.

    python3 demos/difference_equation_growth.py
"""

from deltawv.difference_eq import (
    binomial_recurrence,
    newton_polygon,
    parse_equation,
    verify_regular_growth,
)

eq = parse_equation('{"eta": 1, "coeffs": [[1], [], [0, 1]]}')
print(eq.describe())
print("predicted orders:", [str(c) for c in newton_polygon(eq).predicted_orders])
print(binomial_recurrence(eq).describe())

rep = verify_regular_growth(eq)
print(rep.message)
print("b_0..b_5:", [f"{float(x):+.4g}" for x in rep.solution.b[:6]])
for decade, L in rep.fit.per_decade_L:
    print(f"  decade 1e{decade}: L = {L:.5f}")
print("status:", rep.status)
