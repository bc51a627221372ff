"""Standalone UDP checksum verifier (no transteg imports).

    python tools/checksum_oracle.py capture.tscap

Sums 16-bit words with numpy in a wide integer and folds the carries at the
end, rather than folding per word like the package does.
"""

import struct
import sys

import numpy as np


def ones_sum(data):
    data = bytes(data)
    if len(data) % 2:
        data += b"\0"
    total = int(np.frombuffer(data, dtype=">u2").astype(np.uint64).sum())
    while total > 0xFFFF:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def udp_checksum(src_ip, dst_ip, src_port, dst_port, payload):
    length = 8 + len(payload)
    pseudo = src_ip.to_bytes(4, "big") + dst_ip.to_bytes(4, "big") + b"\0\x11" + length.to_bytes(2, "big")
    header = src_port.to_bytes(2, "big") + dst_port.to_bytes(2, "big") + length.to_bytes(2, "big") + b"\0\0"
    c = 0xFFFF - ones_sum(pseudo + header + payload)
    return c if c else 0xFFFF


def verify_native(path):
    """Yield (index, stored, computed) for every record of a TSCAP001 file."""
    blob = open(path, "rb").read()
    assert blob[:8] == b"TSCAP001", "not a native capture"
    pos, i = 8, 0
    while pos < len(blob):
        _ts, sip, dip, sp, dp, csum, n = struct.unpack_from("<QIIHHHH", blob, pos)
        pos += 24
        rtp = blob[pos:pos + n]
        pos += n
        yield i, csum, udp_checksum(sip, dip, sp, dp, rtp)
        i += 1


if __name__ == "__main__":
    bad = 0
    for path in sys.argv[1:]:
        for i, stored, computed in verify_native(path):
            if stored != computed:
                bad += 1
                print(f"{path}: record {i}: stored {stored:#06x} computed {computed:#06x}")
    print("ok" if not bad else f"{bad} bad")
    sys.exit(1 if bad else 0)
