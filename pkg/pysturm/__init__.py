from .errors import *
from .potential_parser import parse_potential, differentiate, evaluate, to_text, ExprAst, Potential
from .vandermonde import *
from .spectral_solver import *
from .slater import *
from .zero_analysis import *
from .oscillator import *
