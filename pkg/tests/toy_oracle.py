"""Independent brute-force oracles for the toy curve y^2 = x^3 + 2x + 2 over F_17.

Kept deliberately separate from the package: plain int tuples, textbook
affine formulas, exhaustive searches.  ``None`` stands for the point at
infinity.
"""

P = 17
A = 2
B = 2
ORDER = 19
GEN = (5, 1)


def oracle_add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and (y1 + y2) % P == 0:
        return None
    if p1 == p2:
        lam = (3 * x1 * x1 + A) * pow(2 * y1, P - 2, P) % P
    else:
        lam = (y2 - y1) * pow(x2 - x1, P - 2, P) % P
    x3 = (lam * lam - x1 - x2) % P
    y3 = (lam * (x1 - x3) - y1) % P
    return (x3, y3)


def oracle_mul(k, pt):
    acc = None
    for _ in range(k):
        acc = oracle_add(acc, pt)
    return acc


def group_table():
    """[O, G, 2G, ..., 18G] by repeated oracle addition."""
    table = [None]
    for _ in range(1, ORDER):
        table.append(oracle_add(table[-1], GEN))
    return table


def enumerate_affine_points():
    """All (x, y) satisfying the curve equation, found by exhaustion."""
    points = []
    for x in range(P):
        rhs = (x * x * x + A * x + B) % P
        for y in range(P):
            if y * y % P == rhs:
                points.append((x, y))
    return points


def on_curve(pt):
    if pt is None:
        return True
    x, y = pt
    return (y * y - (x * x * x + A * x + B)) % P == 0


def dlog(pt):
    """Discrete log of pt relative to GEN, by table scan."""
    return group_table().index(pt)
