"""Emit src/sobol_direction_numbers.cc from the Joe-Kuo new-joe-kuo-6.21201 set.

The table shipped with SciPy (scipy/stats/_sobol_direction_numbers.npz) is a
verbatim copy of the Joe-Kuo data, so it is used as the source here.
"""
import os
import sys

import numpy as np
import scipy

src = os.path.join(os.path.dirname(scipy.__file__), "stats", "_sobol_direction_numbers.npz")
data = np.load(src)
poly = data["poly"].astype(np.uint64)
vinit = data["vinit"].astype(np.uint64)

out = sys.argv[1] if len(sys.argv) > 1 else "src/sobol_direction_numbers.cc"
with open(out, "w") as f:
    f.write("// Generated by scripts/gen_sobol_table.py. Do not edit.\n")
    f.write("// Joe-Kuo direction numbers (new-joe-kuo-6.21201).\n\n")
    f.write('#include "vinr/sobol.h"\n\nnamespace vinr::sobol_detail {\n\n')
    f.write(f"const std::size_t kTableDimensions = {len(poly)};\n\n")
    f.write("// Primitive polynomial per dimension, including leading and trailing terms.\n")
    f.write("const std::uint32_t kPolynomials[] = {\n")
    for i in range(0, len(poly), 12):
        f.write("    " + ", ".join(str(int(p)) for p in poly[i:i + 12]) + ",\n")
    f.write("};\n\n")
    offsets = [0]
    flat = []
    for d in range(len(poly)):
        deg = max(int(poly[d]).bit_length() - 1, 0)
        flat.extend(int(v) for v in vinit[d, :deg])
        offsets.append(len(flat))
    f.write("// Initial direction integers m_1..m_s, concatenated.\n")
    f.write("const std::uint32_t kInitialNumbers[] = {\n")
    for i in range(0, len(flat), 16):
        f.write("    " + ", ".join(str(v) for v in flat[i:i + 16]) + ",\n")
    f.write("};\n\n")
    f.write("const std::uint32_t kInitialOffsets[] = {\n")
    for i in range(0, len(offsets), 12):
        f.write("    " + ", ".join(str(v) for v in offsets[i:i + 12]) + ",\n")
    f.write("};\n\n}  // namespace vinr::sobol_detail\n")
