"""Standalone scanner for native captures (no transteg imports).

Checks the TranSteg payload contract packet by packet: RTP header fields
and payload length against a reference capture, and reports where the
voice/stego split of each payload would fall.
"""

import struct


def records(path):
    blob = open(path, "rb").read()
    if blob[:8] != b"TSCAP001":
        raise ValueError("not a native capture")
    pos = 8
    while pos < len(blob):
        ts, sip, dip, sp, dp, csum, n = struct.unpack_from("<QIIHHHH", blob, pos)
        pos += 24
        rtp = blob[pos:pos + n]
        pos += n
        b0, b1, seq, rts, ssrc = struct.unpack_from(">BBHII", rtp)
        yield {"ts": ts, "version": b0 >> 6, "pt": b1 & 0x7F, "seq": seq, "rtp_ts": rts, "ssrc": ssrc,
               "payload": rtp[12:]}


def scan(reference_path, emitted_path, voice_bytes=80):
    """Compare packets pairwise; returns a list of problems (empty means the contract holds)."""
    problems = []
    ref, out = list(records(reference_path)), list(records(emitted_path))
    if len(ref) != len(out):
        return [f"packet count {len(out)} != {len(ref)}"]
    for i, (a, b) in enumerate(zip(ref, out)):
        for k in ("version", "pt", "seq", "rtp_ts", "ssrc"):
            if a[k] != b[k]:
                problems.append(f"packet {i}: {k} {b[k]} != {a[k]}")
        if len(b["payload"]) != len(a["payload"]):
            problems.append(f"packet {i}: payload length {len(b['payload'])} != {len(a['payload'])}")
        voice, stego = b["payload"][:voice_bytes], b["payload"][voice_bytes:]
        if len(voice) != voice_bytes or len(stego) != len(b["payload"]) - voice_bytes:
            problems.append(f"packet {i}: split {len(voice)}/{len(stego)}")
    return problems


def halves(path, voice_bytes=80):
    """(list of payload heads, concatenated payload tails) of a capture."""
    heads, tails = [], bytearray()
    for r in records(path):
        heads.append(r["payload"][:voice_bytes])
        tails += r["payload"][voice_bytes:]
    return heads, bytes(tails)


def parse_frame(tails):
    """Read the u32/u8/u8/u16 little-endian header off the tail stream; returns (header dict, body)."""
    length, comp, version, reserved = struct.unpack_from("<IBBH", tails)
    return {"length": length, "compression": comp, "version": version, "reserved": reserved}, \
        tails[8:8 + length]
