"""Exact M+(alpha, beta) for a few periodic digit words, next to the brute-force bracket."""

from ncfray.expansions import DigitWord, word_value
from ncfray.ncf import NcfExpansion
from ncfray.spectrum import mplus_oracle, mplus_truncated

alpha = NcfExpansion.periodic([], [5, 3])

for word in (DigitWord((), (1, 2)), DigitWord((2,), (1, 0)), DigitWord((), (1, 1)), DigitWord((), (4, 0))):
    est = mplus_truncated(word, alpha)
    table = mplus_oracle(word_value(alpha, word), alpha, 10**6)
    print(f"{str(word.prefix):>8} {str(word.period):>8}  exact {est.lower}  ~ {float(est.lower):.12f}"
          f"  oracle [{table.liminf_lo:.6f}, {table.liminf_hi:.6f}]  inside {table.contains(est.lower)}")
