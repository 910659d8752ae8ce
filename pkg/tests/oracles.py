"""Independent reference data for the test suite."""

import sympy
from sympy.parsing.sympy_parser import implicit_multiplication_application, parse_expr, standard_transformations

h, w = sympy.symbols("h w", positive=True, integer=True)
n = h * w

# relation degrees d_i, transcribed from the published table
DEGREES = {
    1: "1",
    2: "w-1",
    3: "(h-1)w",
    4: "h-1",
    5: "(h-1)(w-1)",
    6: "(h-1)^2w",
    7: "h(w-1)",
    8: "h(w-1)^2",
    9: "n(h-1)(w-1)",
    10: "n",
    11: "n(h-1)",
    12: "nh(w-1)",
    13: "n",
    14: "n(h-1)",
    15: "nh(w-1)",
    16: "1",
    17: "n-1",
    18: "h-1",
    19: "(n-1)(h-1)",
    20: "h(w-1)",
    21: "(n-1)h(w-1)",
    22: "n",
    23: "n(w-1)",
    24: "n(h-1)w",
    25: "n",
    26: "n(w-1)",
    27: "n(h-1)w",
    28: "n",
    29: "n(n-1)",
    30: "n",
    31: "n(n-1)",
    32: "1",
    33: "n-1",
    34: "w-1",
    35: "(n-1)(w-1)",
    36: "(h-1)w",
    37: "(n-1)(h-1)w",
    38: "n",
    39: "n(h-1)",
    40: "n(w-1)",
    41: "n(h-1)(w-1)",
    42: "n",
    43: "n(h-1)",
    44: "n(w-1)",
    45: "n(h-1)(w-1)",
    46: "h",
    47: "(n-1)h",
    48: "h(w-1)",
    49: "(n-1)h(w-1)",
    50: "h",
    51: "(n-1)h",
    52: "h(w-1)",
    53: "(n-1)h(w-1)",
    54: "w",
    55: "(n-1)w",
    56: "(h-1)w",
    57: "(n-1)(h-1)w",
    58: "w",
    59: "(n-1)w",
    60: "(h-1)w",
    61: "(n-1)(h-1)w",
    62: "1",
    63: "n-1",
    64: "h-1",
    65: "(n-1)(h-1)",
    66: "w-1",
    67: "(n-1)(w-1)",
    68: "(h-1)(w-1)",
    69: "(n-1)(h-1)(w-1)",
}


def degree(i: int) -> sympy.Expr:
    return parse_expr(DEGREES[i].replace("^", "**"), local_dict={"h": h, "w": w, "n": n},
                      transformations=standard_transformations + (implicit_multiplication_application,))


# multiplicities of the eigenvalues 0, n, 2n, 3n, 4n of M at (2, 3)
MULTIPLICITIES_2x3 = (43, 68, 24, 8, 1)
