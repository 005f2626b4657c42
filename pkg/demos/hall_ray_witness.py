"""Glue e and f into a beta whose lambda_{K(i)} converge to a point of the ray."""

import mpmath

from ncfray.cantor import Dissection
from ncfray.hallray import fit_schedule, glue_beta, lambda_gap, ray_chain, verify_glued
from ncfray.ncf import NcfExpansion, structural_bounds

alpha = NcfExpansion.periodic([], [5, 3])
s = 11  # smallest s passing the depth-10 Hall check (`ncfray hallcheck`, about 30 s)
r = s * structural_bounds(expansion=alpha).L

pair = fit_schedule(alpha, r, s)
e = Dissection("E", pair.alpha_minus, s).tree(0)[0].lower_word
f = Dissection("F", pair.alpha_plus.shifted(r), s).tree(0)[0].lower_word
glued = glue_beta(e, f, r, s, pair)

print(f"s = {s}, r = {r}, K = {pair.k_schedule(6)}")
print("checks:", verify_glued(glued, 8))
with mpmath.workprec(1024):
    print("target:", mpmath.nstr(glued.target().to_mpf(1024), 20))
    for i in range(5, 13):
        print(f"  i = {i:2d}  gap {mpmath.nstr(lambda_gap(glued, i), 4):>12}"
              f"  bound {mpmath.nstr(glued.tail_bound(i, 1024), 4)}")

for link in ray_chain(alpha, range(r, r + 5)):
    print(link.to_json(8))
