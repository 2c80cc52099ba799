#!/usr/bin/env python3
"""Independent generator for the frozen index-vector files.

Reimplements the documented deterministic chain from scratch (splitmix64 ->
xoshiro256** -> rejection-sampled bounded draws -> descending Fisher-Yates ->
floor(e * gamma) index construction) so the committed .fhix files are derived
without touching the C++ code they verify. Re-running this script must
reproduce the committed files byte for byte.
"""

import struct
from pathlib import Path

M64 = (1 << 64) - 1


def splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return state, z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M64


class Xoshiro256SS:
    def __init__(self, seed):
        s = seed
        self.s = []
        for _ in range(4):
            s, out = splitmix64(s)
            self.s.append(out)

    def next(self):
        s = self.s
        result = (rotl((s[1] * 5) & M64, 7) * 9) & M64
        t = (s[1] << 17) & M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def bounded(self, n):
        threshold = (1 << 64) % n
        while True:
            x = self.next()
            if x >= threshold:
                return x % n


def index_vector(virtual_size, num, den, seed):
    rs = list(range(virtual_size))
    rng = Xoshiro256SS(seed)
    for i in range(virtual_size - 1, 0, -1):
        j = rng.bounded(i + 1)
        rs[i], rs[j] = rs[j], rs[i]
    return [(e * num) // den for e in rs]


def write_fhix(path, indices):
    with open(path, "wb") as f:
        f.write(b"FHIX")
        f.write(struct.pack("<I", 1))
        f.write(struct.pack("<Q", len(indices)))
        f.write(struct.pack("<%dI" % len(indices), *indices))


def main():
    out_dir = Path(__file__).parent
    for t in (8, 16, 64):
        for num, den in ((1, 2), (1, 4)):
            for seed in (0, 1, 42):
                name = f"idx_T{t}_g{num}_{den}_s{seed}.fhix"
                write_fhix(out_dir / name, index_vector(t, num, den, seed))
                print("wrote", name)


if __name__ == "__main__":
    main()
