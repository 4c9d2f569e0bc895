#!/usr/bin/env python3
"""Synthesize a capture file with a known single-tap channel, independently of
the Rust implementation, to cross-check the capture format and the estimation
pipeline.

Writes <out>.iq (payload: little-endian f32, interleaved I,Q, channels
concatenated) and <out>.iq.hdr (text sidecar).

The training waveform is the degree-6 m-sequence from the polynomial
x^6 + x + 1 (mask 0x43), Galois register convention: state starts at 1, the
output bit is the register LSB, chips map 0 -> +1, 1 -> -1, each chip held
for `oversampling` samples.
"""

import cmath
import struct
import sys


def mseq(degree, poly):
    n = (1 << degree) - 1
    state = 1
    chips = []
    for _ in range(n):
        bit = state & 1
        chips.append(1.0 if bit == 0 else -1.0)
        state >>= 1
        if bit:
            state ^= poly >> 1
    return chips


def main(out_base):
    degree, poly, oversampling = 6, 0x43, 2
    blocks = 2
    chips = mseq(degree, poly)
    waveform = [c for c in chips for _ in range(oversampling)]
    l_t = len(waveform)

    # single tap: gain 0.8 e^{j pi/5} at delay 4 samples
    gain = 0.8 * cmath.exp(1j * cmath.pi / 5)
    delay = 4
    block = [gain * waveform[(t - delay) % l_t] for t in range(l_t)]
    stream = block * blocks

    payload = b"".join(struct.pack("<ff", z.real, z.imag) for z in stream)
    with open(out_base + ".iq", "wb") as f:
        f.write(payload)
    with open(out_base + ".iq.hdr", "w") as f:
        f.write("format_version: 1\n")
        f.write("channels: 1\n")
        f.write(f"samples_per_channel: {blocks * l_t}\n")
        f.write(f"blocks: {blocks}\n")
        f.write(f"samples_per_block: {l_t}\n")
        f.write(f"oversampling: {oversampling}\n")
    print(f"wrote {out_base}.iq ({len(payload)} bytes), tap {gain:.6f} at delay {delay}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "single_tap")
