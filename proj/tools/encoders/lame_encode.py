#!/usr/bin/env python3
"""Second encoder for the forge: libmp3lame through the `lameenc` binding.

Usage: lame_encode.py IN.wav OUT.mp3 (--cbr KBPS | --vbr QUALITY)
       lame_encode.py --version
"""
import argparse
import sys
import wave


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("input", nargs="?")
    ap.add_argument("output", nargs="?")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--cbr", type=int)
    mode.add_argument("--vbr", type=int)
    ap.add_argument("--version", action="store_true")
    args = ap.parse_args()

    import lameenc

    if args.version:
        print("lameenc", getattr(lameenc, "__version__", "unknown"))
        return 0
    if not args.input or not args.output or (args.cbr is None and args.vbr is None):
        ap.print_usage(sys.stderr)
        return 2

    with wave.open(args.input, "rb") as w:
        if w.getsampwidth() != 2:
            print("expected 16-bit PCM", file=sys.stderr)
            return 1
        channels, rate = w.getnchannels(), w.getframerate()
        pcm = w.readframes(w.getnframes())

    enc = lameenc.Encoder()
    enc.set_channels(channels)
    enc.set_in_sample_rate(rate)
    enc.set_out_sample_rate(rate)
    enc.set_quality(2)
    if args.cbr is not None:
        enc.set_bit_rate(args.cbr)
    else:
        enc.set_vbr(4)  # vbr_mtrh, LAME's default VBR mode
        enc.set_vbr_quality(args.vbr)
    data = enc.encode(pcm) + enc.flush()
    with open(args.output, "wb") as f:
        f.write(data)
    return 0


if __name__ == "__main__":
    sys.exit(main())
