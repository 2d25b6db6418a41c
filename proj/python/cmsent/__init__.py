"""Ensemble sentiment classifier for romanized code-mixed text.

Thin Python facade over the C++ core: a word-ngram multinomial naive Bayes
classifier and a character-trigram LSTM, fused by weighted-linear or
multiplicative combination.
"""

try:
    from ._cmsent import *  # noqa: F401,F403
    from ._cmsent import __doc__ as _core_doc  # noqa: F401
except ImportError:
    # Development layout: the extension is built by CMake into
    # <build>/python_ext and put on sys.path directly.
    from _cmsent import *  # noqa: F401,F403
