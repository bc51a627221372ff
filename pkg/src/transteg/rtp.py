"""RTP packets, UDP checksums and capture files.

Native capture layout (all integers little-endian)::

    b"TSCAP001"
    repeated: u64 timestamp_us, u32 src_ip, u32 dst_ip, u16 src_port,
              u16 dst_port, u16 udp_checksum, u16 rtp_length, rtp bytes

Classic pcap (Ethernet / IPv4 / UDP) can be imported; anything else in the
pcap is skipped and counted.
"""

import ipaddress
import struct
from dataclasses import dataclass, field, replace

RTP_HEADER_LEN = 12
UDP_HEADER_LEN = 8
NATIVE_MAGIC = b"TSCAP001"
_NATIVE_RECORD = struct.Struct("<QIIHHHH")
_RTP_HEADER = struct.Struct("!BBHII")


class RtpError(ValueError):
    pass


class CaptureError(ValueError):
    pass


@dataclass(frozen=True)
class RtpPacket:
    payload_type: int
    sequence_number: int
    timestamp: int
    ssrc: int
    payload: bytes = b""
    marker: bool = False
    padding: bool = False
    extension: bool = False
    csrc_count: int = 0
    version: int = 2

    def with_payload(self, payload):
        return replace(self, payload=bytes(payload))


def parse_rtp(data):
    data = bytes(data)
    if len(data) < RTP_HEADER_LEN:
        raise RtpError(f"short buffer: {len(data)} bytes, RTP header needs {RTP_HEADER_LEN}")
    b0, b1, seq, ts, ssrc = _RTP_HEADER.unpack_from(data)
    version = b0 >> 6
    if version != 2:
        raise RtpError(f"unsupported RTP version {version}")
    cc = b0 & 0x0F
    if cc:
        raise RtpError(f"CSRC lists not supported (csrc_count={cc})")
    if b0 & 0x10:
        raise RtpError("header extension not supported")
    return RtpPacket(
        payload_type=b1 & 0x7F,
        sequence_number=seq,
        timestamp=ts,
        ssrc=ssrc,
        payload=data[RTP_HEADER_LEN:],
        marker=bool(b1 & 0x80),
        padding=bool(b0 & 0x20),
        extension=False,
        csrc_count=0,
        version=version,
    )


def serialize_rtp(packet):
    b0 = (packet.version << 6) | (int(packet.padding) << 5) | (int(packet.extension) << 4) | packet.csrc_count
    b1 = (int(packet.marker) << 7) | (packet.payload_type & 0x7F)
    header = _RTP_HEADER.pack(b0, b1, packet.sequence_number & 0xFFFF,
                              packet.timestamp & 0xFFFFFFFF, packet.ssrc & 0xFFFFFFFF)
    return header + bytes(packet.payload)


def _ip_int(addr):
    if isinstance(addr, int):
        return addr
    return int(ipaddress.IPv4Address(addr))


def ones_complement_sum(data):
    if len(data) % 2:
        data = bytes(data) + b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def internet_checksum(data):
    return ~ones_complement_sum(data) & 0xFFFF


def udp_checksum(src_addr, dst_addr, udp_segment):
    """IPv4 UDP checksum; the checksum field inside ``udp_segment`` is ignored."""
    seg = bytearray(udp_segment)
    if len(seg) >= UDP_HEADER_LEN:
        length_field = struct.unpack_from("!H", seg, 4)[0]
        if length_field != len(seg):
            raise ValueError(f"UDP length field {length_field} != segment length {len(seg)}")
        seg[6:8] = b"\x00\x00"
    pseudo = struct.pack("!IIBBH", _ip_int(src_addr), _ip_int(dst_addr), 0, 17, len(seg))
    # a computed 0 is sent as 0xFFFF; 0 on the wire means "no checksum"
    return internet_checksum(pseudo + bytes(seg)) or 0xFFFF


def udp_segment(src_port, dst_port, payload, checksum=0):
    return struct.pack("!HHHH", src_port, dst_port, UDP_HEADER_LEN + len(payload), checksum) + bytes(payload)


@dataclass(frozen=True)
class PacketRecord:
    timestamp_us: int
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    udp_checksum: int
    rtp: RtpPacket

    @classmethod
    def build(cls, rtp, timestamp_us, src_ip, dst_ip, src_port, dst_port):
        """Record with a freshly computed checksum."""
        return cls(timestamp_us, _ip_int(src_ip), _ip_int(dst_ip), src_port, dst_port, 0, rtp).rechecksummed()

    @property
    def rtp_bytes(self):
        return serialize_rtp(self.rtp)

    def segment(self):
        return udp_segment(self.src_port, self.dst_port, self.rtp_bytes, self.udp_checksum)

    def compute_checksum(self):
        return udp_checksum(self.src_ip, self.dst_ip, self.segment())

    def checksum_ok(self):
        return self.udp_checksum == 0 or self.udp_checksum == self.compute_checksum()

    def rechecksummed(self):
        return replace(self, udp_checksum=self.compute_checksum())

    def with_rtp(self, rtp):
        """Swap in a modified RTP packet and fix up the UDP checksum."""
        return replace(self, rtp=rtp).rechecksummed()


def write_capture(records, path):
    with open(path, "wb") as fh:
        fh.write(NATIVE_MAGIC)
        for r in records:
            data = r.rtp_bytes
            fh.write(_NATIVE_RECORD.pack(r.timestamp_us, r.src_ip, r.dst_ip, r.src_port,
                                         r.dst_port, r.udp_checksum, len(data)))
            fh.write(data)


@dataclass
class CaptureReadResult:
    records: list = field(default_factory=list)
    skipped: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


def read_capture(path):
    """Read a native or pcap capture; returns records plus a skipped-packet count."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] == NATIVE_MAGIC:
        return _read_native(blob)
    if blob[:4] in _PCAP_MAGICS:
        return _read_pcap(blob)
    raise CaptureError(f"{path}: not a native TSCAP001 or pcap capture")


def _read_native(blob):
    out = CaptureReadResult()
    pos = len(NATIVE_MAGIC)
    while pos < len(blob):
        if pos + _NATIVE_RECORD.size > len(blob):
            raise CaptureError(f"truncated record header at offset {pos}")
        ts, sip, dip, sp, dp, csum, n = _NATIVE_RECORD.unpack_from(blob, pos)
        pos += _NATIVE_RECORD.size
        if pos + n > len(blob):
            raise CaptureError(f"truncated RTP data at offset {pos}")
        try:
            rtp = parse_rtp(blob[pos:pos + n])
        except RtpError as exc:
            raise CaptureError(f"bad RTP packet at offset {pos}: {exc}") from exc
        pos += n
        out.records.append(PacketRecord(ts, sip, dip, sp, dp, csum, rtp))
    return out


_PCAP_MAGICS = {
    b"\xd4\xc3\xb2\xa1": ("<", 1),      # little-endian, microseconds
    b"\xa1\xb2\xc3\xd4": (">", 1),
    b"\x4d\x3c\xb2\xa1": ("<", 1000),   # nanosecond variant
    b"\xa1\xb2\x3c\x4d": (">", 1000),
}
_LINKTYPE_ETHERNET = 1


def _read_pcap(blob):
    endian, ts_div = _PCAP_MAGICS[blob[:4]]
    if len(blob) < 24:
        raise CaptureError("truncated pcap global header")
    linktype = struct.unpack_from(endian + "I", blob, 20)[0]
    if linktype != _LINKTYPE_ETHERNET:
        raise CaptureError(f"unsupported pcap link type {linktype} (Ethernet only)")
    rec_hdr = struct.Struct(endian + "IIII")
    out = CaptureReadResult()
    pos = 24
    while pos < len(blob):
        if pos + rec_hdr.size > len(blob):
            raise CaptureError(f"truncated pcap record header at offset {pos}")
        sec, frac, incl, _orig = rec_hdr.unpack_from(blob, pos)
        pos += rec_hdr.size
        frame = blob[pos:pos + incl]
        if len(frame) < incl:
            raise CaptureError(f"truncated pcap frame at offset {pos}")
        pos += incl
        rec = _udp_from_ethernet(frame, sec * 1_000_000 + frac // ts_div)
        if rec is None:
            out.skipped += 1
        else:
            out.records.append(rec)
    return out


def _udp_from_ethernet(frame, ts_us):
    if len(frame) < 14 + 20 or struct.unpack_from("!H", frame, 12)[0] != 0x0800:
        return None
    ip = frame[14:]
    ihl = (ip[0] & 0x0F) * 4
    if ip[0] >> 4 != 4 or ip[9] != 17 or len(ip) < ihl + UDP_HEADER_LEN:
        return None
    total_len = struct.unpack_from("!H", ip, 2)[0]
    src_ip, dst_ip = struct.unpack_from("!II", ip, 12)
    udp = ip[ihl:total_len]
    sport, dport, ulen, csum = struct.unpack_from("!HHHH", udp)
    try:
        rtp = parse_rtp(udp[UDP_HEADER_LEN:ulen])
    except RtpError:
        return None
    return PacketRecord(ts_us, src_ip, dst_ip, sport, dport, csum, rtp)
