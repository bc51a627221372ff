"""transteg command line.

Exit codes: 0 ok, 2 usage error, 3 input error (missing/unreadable files,
unknown payload types), 4 invariant violation (refused configuration, failed
extraction, broken bookkeeping).

Call report JSON keys (``"schema": 1``): scenario, stages, packets_sent,
duration_s, capacity_bytes_per_packet, nominal_bandwidth_bit_s,
stego_bytes_expected, stego_bytes_delivered, goodput_bit_s, transcode_count,
extraction_ok, masked, per_stage_processing_us, added_processing_us,
passthrough_processing_us, tap_histograms, voice_frames_out, capture_files,
notes.
"""

import argparse
import configparser
import json
import sys
from pathlib import Path

from . import __version__
from .audio_io import PcmStream, UnsupportedWavError, WavFormatError, write_wav
from .channel import Compression, FramingError, StegoChannel
from .codec.registry import UnknownPayloadType, codec_by_name, codec_lookup
from .corpus import sample_text, write_fixtures
from .engine import CodecPair, NoMapping, StreamState, TranStegError, decode_covert_voice, embed, extract
from .rtp import CaptureError, read_capture, write_capture
from .warden import WardenError, WardenPolicy, detect, histogram, tap_id

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _key(hexstr):
    if hexstr is None:
        return None
    try:
        key = bytes.fromhex(hexstr)
    except ValueError:
        raise CliError(f"mask key is not hex: {hexstr!r}", EXIT_USAGE) from None
    if len(key) != 16:
        raise CliError("mask key must be 32 hex digits (128 bits)", EXIT_USAGE)
    return key


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# bandwidth

def cmd_bandwidth(args):
    from .engine import steg_bandwidth

    try:
        overt, covert = codec_by_name(args.overt), codec_by_name(args.covert)
        pair = CodecPair(overt, covert)
    except KeyError as exc:
        raise CliError(str(exc).strip("'\""), EXIT_USAGE) from None
    except NoMapping as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    sb = steg_bandwidth(pair, args.pps)
    print(f"{sb} bit/s")
    if args.duration is not None:
        total_bits = sb * args.duration
        print(f"{int(total_bits // 8)} bytes in {args.duration:g} s")
    return EXIT_OK


# simulate

_CONFIG_KEYS = {"scenario", "wav", "overt", "covert_pt", "key", "stego", "stego_text_bytes", "stego_seed",
                "compression", "filler_seed", "packets", "duration", "taps", "ssrc", "seq_start",
                "capture_dir", "out", "output_wav"}
_PATH_KEYS = {"wav", "stego", "capture_dir", "out", "output_wav"}


def read_config(path):
    """key = value text, an optional [call] section; relative paths resolve against the file."""
    path = Path(path)
    if not path.is_file():
        raise CliError(f"config not found: {path}", EXIT_INPUT)
    text = path.read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not text.lstrip().startswith("["):
        text = "[call]\n" + text
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise CliError(f"bad config {path}: {exc}", EXIT_USAGE) from None
    values = dict(cp["call"]) if cp.has_section("call") else {}
    unknown = set(values) - _CONFIG_KEYS
    if unknown:
        raise CliError(f"unknown config key(s): {', '.join(sorted(unknown))}", EXIT_USAGE)
    base = path.parent
    for k in _PATH_KEYS & set(values):
        parts = [p.strip() for p in values[k].replace("\n", ",").split(",") if p.strip()]
        values[k] = [str((base / p) if not Path(p).is_absolute() else Path(p)) for p in parts]
        if k != "wav":
            values[k] = values[k][0] if values[k] else None
    return values


def _merge_flags(values, args):
    flags = {
        "scenario": args.scenario, "wav": args.wav, "overt": args.overt, "covert_pt": args.covert_pt,
        "key": args.key, "stego": args.stego, "stego_text_bytes": args.stego_text_bytes,
        "stego_seed": args.stego_seed, "compression": args.compression, "filler_seed": args.filler_seed,
        "packets": args.packets, "duration": args.duration, "taps": args.taps, "capture_dir": args.capture_dir,
        "out": args.out, "output_wav": args.output_wav, "seq_start": args.seq_start,
    }
    merged = dict(values)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _as_int(v, name):
    try:
        return int(str(v), 0)
    except ValueError:
        raise CliError(f"{name} must be an integer, got {v!r}", EXIT_USAGE) from None


def build_scenario(values):
    from .simulator import ScenarioConfig

    if values.get("stego") and values.get("stego_text_bytes"):
        raise CliError("stego and stego_text_bytes are mutually exclusive", EXIT_USAGE)
    stego_data = None
    if values.get("stego_text_bytes"):
        stego_data = sample_text(_as_int(values["stego_text_bytes"], "stego_text_bytes"),
                                 seed=_as_int(values.get("stego_seed", 0), "stego_seed"))
    comp = str(values.get("compression", "none")).lower()
    if comp not in ("none", "deflate", "0", "1"):
        raise CliError(f"compression must be none or deflate, got {comp!r}", EXIT_USAGE)
    taps = values.get("taps", "before-ss,after-ss")
    if isinstance(taps, str):
        taps = [t.strip() for t in taps.split(",") if t.strip()]
    wav = values.get("wav") or []
    if isinstance(wav, str):
        wav = [w.strip() for w in wav.split(",") if w.strip()]
    return ScenarioConfig(
        scenario=str(values.get("scenario", "S4")).upper(),
        wav_inputs=wav,
        overt=values.get("overt", "g711u"),
        covert_pt=_as_int(values.get("covert_pt", 96), "covert_pt"),
        mask_key=_key(values.get("key")),
        stego_input=values.get("stego"),
        stego_data=stego_data,
        compression=Compression.DEFLATE if comp in ("deflate", "1") else Compression.NONE,
        filler_seed=_as_int(values.get("filler_seed", 0), "filler_seed"),
        packets=_as_int(values["packets"], "packets") if values.get("packets") is not None else None,
        duration_s=float(values["duration"]) if values.get("duration") is not None else None,
        taps=taps,
        ssrc=_as_int(values.get("ssrc", 0x5EC12E7), "ssrc"),
        seq_start=_as_int(values.get("seq_start", 0), "seq_start"),
        capture_dir=values.get("capture_dir"),
        output_wav=values.get("output_wav"),
    )


def cmd_simulate(args):
    from .simulator import ConfigError, StageError, run_call

    values = read_config(args.config) if args.config else {}
    values = _merge_flags(values, args)
    try:
        cfg = build_scenario(values)
        cfg.validate(check_files=False)
    except (ConfigError, ValueError) as exc:
        code = EXIT_INVARIANT if "refused" in str(exc) else EXIT_USAGE
        raise CliError(str(exc), code) from None
    missing = [p for p in cfg.wav_inputs + ([cfg.stego_input] if cfg.stego_input else []) if not Path(p).is_file()]
    if missing:
        raise CliError(f"input not found: {', '.join(missing)}", EXIT_INPUT)
    try:
        report = run_call(cfg)
    except StageError as exc:
        raise CliError(str(exc), EXIT_INVARIANT) from None
    except (WavFormatError, UnsupportedWavError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _emit(report.to_dict(), values.get("out"))
    if not report.extraction_ok:
        print(f"extraction failed: {'; '.join(report.notes) or 'steganogram mismatch'}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


# embed / extract on captures

def _load_single_stream(path):
    try:
        cap = read_capture(path)
    except (OSError, CaptureError) as exc:
        raise CliError(f"cannot read capture {path}: {exc}", EXIT_INPUT) from None
    recs = cap.records
    if not recs:
        raise CliError(f"{path}: no RTP packets", EXIT_INPUT)
    ssrcs = {r.rtp.ssrc for r in recs}
    if len(ssrcs) > 1:
        raise CliError(f"{path}: {len(ssrcs)} RTP streams (SSRCs); give a single-stream capture", EXIT_INPUT)
    if cap.skipped:
        print(f"{path}: skipped {cap.skipped} non-RTP/UDP packets", file=sys.stderr)
    bad = [i for i, r in enumerate(recs) if not r.checksum_ok()]
    for i in bad:
        print(f"{path}: packet {i} (seq {recs[i].rtp.sequence_number}) fails UDP checksum", file=sys.stderr)
    return recs, bad


def _overt_pair(recs, covert_pt):
    try:
        overt = codec_lookup(recs[0].rtp.payload_type)
        pair = CodecPair.for_overt(overt)
    except (UnknownPayloadType, NoMapping) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    if covert_pt != pair.covert.payload_type:
        from .codec.registry import g726_with_pt
        pair = CodecPair(overt, g726_with_pt(covert_pt))
    return pair


def cmd_embed(args):
    recs, bad = _load_single_stream(args.input)
    pair = _overt_pair(recs, args.covert_pt)
    stego_path = Path(args.stego)
    if not stego_path.is_file():
        raise CliError(f"steganogram not found: {stego_path}", EXIT_INPUT)
    comp = Compression.DEFLATE if args.compression == "deflate" else Compression.NONE
    state = StreamState(pair, StegoChannel.embedder(stego_path.read_bytes(), comp, args.filler_seed),
                        mask_key=_key(args.key), filler_seed=args.filler_seed)
    out = []
    for i, r in enumerate(recs):
        try:
            out.append(r.with_rtp(embed(r.rtp, state)))
        except (TranStegError, ValueError) as exc:
            raise CliError(f"packet {i}: {exc}", EXIT_INPUT) from None
    write_capture(out, args.output)
    ch = state.stego
    summary = {"schema": 1, "packets": len(out), "framed_bytes": ch.framed_length, "sent_bytes": ch.cursor,
               "fits": ch.exhausted, "input_checksum_failures": len(bad)}
    print(json.dumps(summary))
    return EXIT_OK if ch.exhausted else EXIT_INVARIANT


def cmd_extract(args):
    recs, bad = _load_single_stream(args.input)
    pair = _overt_pair(recs, args.covert_pt)
    comp = Compression.DEFLATE if args.compression == "deflate" else Compression.NONE
    state = StreamState(pair, StegoChannel.extractor(comp), mask_key=_key(args.key))
    pcm = []
    for i, r in enumerate(recs):
        try:
            voice, _ = extract(r.rtp, state)
        except (TranStegError, ValueError) as exc:
            raise CliError(f"packet {i}: {exc}", EXIT_INPUT) from None
        if args.voice_out:
            pcm.append(decode_covert_voice(voice, state))
    ch = state.stego
    summary = {"schema": 1, "packets": len(recs), "header_seen": ch.header_seen,
               "declared_bytes": ch.total_length, "received_bytes": ch.received, "complete": ch.complete,
               "checksum_failures": len(bad)}
    ok = False
    try:
        data = ch.payload()
        Path(args.output).write_bytes(data)
        summary["steganogram_bytes"] = len(data)
        ok = True
    except (FramingError, Exception) as exc:  # zlib errors are plain zlib.error
        summary["error"] = str(exc)
    if args.voice_out and pcm:
        import numpy as np
        write_wav(PcmStream(np.concatenate(pcm)), args.voice_out)
    print(json.dumps(summary))
    return EXIT_OK if ok and not bad else EXIT_INVARIANT


# analyze

def cmd_analyze(args):
    taps = [t.strip() for t in args.taps.split(",")] if args.taps else [str(i + 1) for i in range(len(args.captures))]
    if len(taps) != len(args.captures):
        raise CliError("--taps must name one tap per capture", EXIT_USAGE)
    try:
        ids = [tap_id(t) for t in taps]
    except WardenError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    try:
        policy = WardenPolicy.load(args.policy)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot load policy: {exc}", EXIT_INPUT) from None
    hists = {}
    for path, t in zip(args.captures, ids):
        try:
            recs = read_capture(path).records
        except (OSError, CaptureError) as exc:
            raise CliError(f"cannot read capture {path}: {exc}", EXIT_INPUT) from None
        h = histogram(recs, tap_id=f"tap{t}")
        if t in hists:
            # same tap position given twice: put the second copy on the next free slot
            t = next(s for s in (1, 2, 3) if s not in hists)
        hists[t] = h
        if args.csv_dir:
            d = Path(args.csv_dir)
            d.mkdir(parents=True, exist_ok=True)
            h.write_csv(d / f"tap{t}_{Path(path).stem}.csv")
    try:
        verdict = detect(hists, policy, stream_id=args.stream_id)
    except WardenError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _emit(verdict.to_dict(), args.out)
    return EXIT_OK


def cmd_calibrate(args):
    from .calibration import main as calibrate_main

    argv = ["--fixtures", args.fixtures] + (["--out", args.out] if args.out else [])
    if args.steganogram:
        argv += ["--steganogram", args.steganogram]
    return calibrate_main(argv)


def cmd_corpus(args):
    for p in write_fixtures(args.dir, args.count, args.seconds):
        print(p)
    if args.steganogram_bytes:
        p = Path(args.dir) / "steganogram.txt"
        p.write_bytes(sample_text(args.steganogram_bytes, seed=11))
        print(p)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="transteg", description="TranSteg laboratory: covert transcoding "
                                 "steganography over RTP, plus a histogram warden.",
                                 formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bandwidth", help="steganographic bandwidth of an overt/covert codec pair")
    p.add_argument("--overt", default="g711u")
    p.add_argument("--covert", default="g726-32")
    p.add_argument("--pps", type=int, default=50, help="packets per second")
    p.add_argument("--duration", type=float, help="call length in seconds, prints total bytes")
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("simulate", help="run a whole call; prints the JSON call report",
                       description="Config keys (key = value): " + ", ".join(sorted(_CONFIG_KEYS))
                       + ". Flags override the config file.")
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--scenario", choices=["S1", "S2", "S3", "S4", "s1", "s2", "s3", "s4"])
    p.add_argument("--wav", action="append", help="input WAV (repeatable; inputs are cycled)")
    p.add_argument("--overt", help="overt codec (g711u or g711a)")
    p.add_argument("--covert-pt", type=int, help="dynamic PT of the covert codec (default 96)")
    p.add_argument("--key", help="128-bit mask key in hex (masked/SRTP-like session)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--stego", help="steganogram file")
    g.add_argument("--stego-text-bytes", type=int, help="synthesize an English-like text steganogram")
    p.add_argument("--stego-seed", type=int)
    p.add_argument("--compression", choices=["none", "deflate"])
    p.add_argument("--filler-seed", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--packets", type=int)
    g.add_argument("--duration", type=float, help="seconds at 50 packets/s")
    p.add_argument("--taps", help="comma list of before-ss, after-ss, after-sr")
    p.add_argument("--seq-start", type=int)
    p.add_argument("--capture-dir", help="write one native capture per tap here")
    p.add_argument("--output-wav", help="write the callee's decoded voice here")
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("embed", cmd_embed, "act as an intermediate SS on a capture"),
                                 ("extract", cmd_extract, "act as the SR on a capture")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input", help="capture file (native or pcap)")
        p.add_argument("output", help="output capture (embed) or recovered steganogram (extract)")
        if name == "embed":
            p.add_argument("--stego", required=True, help="steganogram file")
            p.add_argument("--filler-seed", type=int, default=0)
        else:
            p.add_argument("--voice-out", help="also write the covert voice as WAV")
        p.add_argument("--key", help="128-bit mask key in hex")
        p.add_argument("--compression", choices=["none", "deflate"], default="none")
        p.add_argument("--covert-pt", type=int, default=96)
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="warden verdict over one or more tap captures")
    p.add_argument("captures", nargs="+")
    p.add_argument("--taps", help="tap of each capture, e.g. 1,3 or before-ss,after-sr (default 1,2,3)")
    p.add_argument("--policy", help="policy JSON (default: bundled calibration)")
    p.add_argument("--csv-dir", help="write a 256-row histogram CSV per capture here")
    p.add_argument("--stream-id", default="stream")
    p.add_argument("--out", help="verdict path (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="recompute warden thresholds from speech fixtures")
    p.add_argument("--fixtures", default="fixtures")
    p.add_argument("--steganogram")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("corpus", help="write the synthetic speech fixtures")
    p.add_argument("dir")
    p.add_argument("--count", type=int, default=7)
    p.add_argument("--seconds", type=float, default=30.0)
    p.add_argument("--steganogram-bytes", type=int, default=200000)
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"transteg {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (WavFormatError, UnsupportedWavError, OSError) as exc:
        print(f"transteg {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
