"""
Turning raw symbols into uniform bits
=====================================

The raw string is hashed with a random Toeplitz matrix to the number of bits
the entropy bound allows. The seed is public and stored next to the output.
"""

from pathlib import Path

import numpy as np

from hdeur import extractor, rates

rng = np.random.default_rng(4)
p = rates.ProtocolParams(4, 100_000)

# Stand-in for the untested readout: n uniform symbols of a 4-level source.
raw = rng.integers(0, 4, size=p.n)
w_observed = 0.02
ell = int(rates.ell_ours(p, w_observed))
print(f"n = {p.n} symbols ({2 * p.n} raw bits), certified output ell = {ell} bits")

bits, seed = extractor.extract(raw, ell, rng, d=4)
print(f"output bias: {bits.mean():.4f}, seed length {seed.bits.size} bits")

# Hashing ell bits below the min-entropy bound leaves distance 2^-(gap/2).
h_min = ell + 2 * 120
print(f"distance bound with a 240-bit gap: {extractor.pa_distance_bound(h_min, ell):.2e}")

out_dir = Path(__file__).with_name("output")
out_dir.mkdir(exist_ok=True)
bits_path, seed_path = extractor.write_output(out_dir / "extracted.bin", bits, seed)
back, back_seed = extractor.read_output(bits_path, ell, seed.n_in, ell)
print(f"wrote {bits_path.name} and {seed_path.name}; round trip ok: "
      f"{np.array_equal(back, bits) and np.array_equal(back_seed.bits, seed.bits)}")
