"""Write the long/short subdivision picture for <5,3,5,3,...> to an SVG file."""

import sys

from ncfray.figure import cell_counts, run_figure
from ncfray.ncf import NcfExpansion

alpha = NcfExpansion.periodic([], [5, 3])
path = sys.argv[1] if len(sys.argv) > 1 else "long_short.svg"
with open(path, "w") as fh:
    fh.write(run_figure(alpha, 3))
for row in cell_counts(alpha, 3):
    print(row)
print("wrote", path)
