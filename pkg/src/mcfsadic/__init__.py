"""Multidimensional continued fractions, S-adic words, Rauzy fractals and their spectral checks."""

from .core import (DEFAULT_PRECISION, SimplexPoint, Substitution, abelianize, compose, compose_all,
                   format_word, parse_vector, parse_word, power)
from .errors import *  # noqa: F401,F403
from .mcf import (ALGORITHMS, ArnouxRauzy, Brun, CassaigneSelmer, JacobiPerron, MCFAlgorithm,
                  expand, get_algorithm, step)
from .sadic import DirectiveSequence, balance, factor_complexity, language, limit_word_prefix
from .rauzy import cloud, raster_tiling_check, right_eigenvector
from .spectral import bpa_run, char_poly, effective_gcc, pisot_certify, tijdeman_word
from .dynamics import lyapunov, periodic_lyapunov

__version__ = "0.1.0"
