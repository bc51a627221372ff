"""SRTP-style payload masking.

AES-128 in counter mode, with the counter block built from the SSRC and the
packet index the way SRTP's AES-CM does it (minus the session salt and key
derivation).  Masking and unmasking are the same XOR.
"""

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

KEY_LEN = 16


def _counter_block(ssrc, index):
    # SSRC in bytes 4..7, 48-bit packet index in bytes 8..13, block counter in 14..15
    return b"\x00" * 4 + ssrc.to_bytes(4, "big") + (index & 0xFFFFFFFFFFFF).to_bytes(6, "big") + b"\x00\x00"


def keystream(key, ssrc, index, n, offset=0):
    if len(key) != KEY_LEN:
        raise ValueError(f"mask key must be {KEY_LEN} bytes, got {len(key)}")
    enc = Cipher(algorithms.AES(bytes(key)), modes.CTR(_counter_block(ssrc, index))).encryptor()
    return enc.update(b"\x00" * (offset + n))[offset:]


def mask(region, key, ssrc, index, offset=0):
    """XOR ``region`` with the keystream for packet ``index`` starting at byte ``offset``."""
    ks = keystream(key, ssrc, index, len(region), offset)
    return (int.from_bytes(region, "little") ^ int.from_bytes(ks, "little")).to_bytes(len(region), "little")


unmask = mask


class ExtendedIndex:
    """Tracks 16-bit sequence rollover to give a monotonically growing packet index."""

    def __init__(self):
        self.roc = 0
        self.last = None

    def peek(self, seq):
        """Index ``seq`` would get, without advancing."""
        roc = self.roc
        if self.last is not None and seq < self.last and self.last - seq > 0x8000:
            roc += 1
        return (roc << 16) | seq

    def __call__(self, seq):
        idx = self.peek(seq)
        self.roc = idx >> 16
        self.last = seq
        return idx
