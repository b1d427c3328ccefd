from fractions import Fraction
from typing import Union

import numpy as np
import numpy.typing as npt
import sympy as sp
from typing_extensions import Literal

# Contains some typing used in the library
Rational = Union[int, Fraction, sp.Rational]
RealArray = npt.NDArray[np.float64]

ZeroKind = Literal['node', 'antinode']
NodeKind = Literal['const', 'x', 'neg', 'add', 'sub', 'mul', 'div', 'pow',
                   'sin', 'cos', 'exp']
OutputFormat = Literal['json', 'csv']
