"""Parse CSI capture files into validated frame streams.

Captures are classic little-endian pcap files (Ethernet or raw-IP linktype)
carrying UDP datagrams to port 5500. Each datagram holds one record in the
Raspberry Pi (bcm43455c0) extractor layout:

    magic 0x1111   uint16 LE
    rssi           int8
    frame control  uint8
    source MAC     6 bytes
    seq            uint16 LE
    core/stream    uint16 LE
    chanspec       uint16 LE
    chip version   uint16 LE
    CSI            256 x (int16 LE real, int16 LE imag)

CSI bins are stored in ascending subcarrier order (-128 ... +127). Parsing
drops the 14 null bins of the 80 MHz tone plan, leaving the 242 data+pilot
subcarriers. Malformed records are skipped and tallied rather than aborting
the parse; only structural file damage raises.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

RAW_BIN_COUNT = 256
SUBCARRIER_COUNT = 242

# 802.11ac 80 MHz null set: guard bands plus the three DC bins.
NULL_SUBCARRIERS = frozenset(range(-128, -122)) | {-1, 0, 1} | frozenset(range(123, 128))
KEPT_BIN_INDICES = np.array(
    [s + 128 for s in range(-128, 128) if s not in NULL_SUBCARRIERS], dtype=int)

RECORD_MAGIC = 0x1111
CSI_UDP_PORT = 5500

_RECORD_HEADER = struct.Struct("<HbB6sHHHH")  # 18 bytes before the CSI payload
RECORD_SIZE = _RECORD_HEADER.size + 4 * RAW_BIN_COUNT

_PCAP_GLOBAL = struct.Struct("<IHHiIII")
_PCAP_PACKET = struct.Struct("<IIII")
PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1
LINKTYPE_RAW_IP = 101

# Other Nexmon bandwidths (20/40/160 MHz); records of these sizes are
# recognized but rejected rather than silently skipped.
_OTHER_BIN_COUNTS = (64, 128, 512)


class CaptureError(Exception):
    """Base class for capture parsing failures."""


class FileTruncated(CaptureError):
    """The stream ends mid-record header or mid-record body."""


class BadMagic(CaptureError):
    """The stream does not start with a classic little-endian pcap magic."""


class UnsupportedWidth(CaptureError):
    """A CSI record carries a raw bin count other than 256."""


@dataclass(frozen=True, eq=False)
class CsiFrame:
    """One received frame with its 242 complex subcarrier values."""

    timestamp: float
    source_mac: bytes
    seq_no: int
    rssi: int
    chanspec: int
    csi: np.ndarray  # (242,) complex128


@dataclass(frozen=True, eq=False)
class AmplitudeFrame:
    """Per-subcarrier amplitudes of one frame."""

    timestamp: float
    amp: np.ndarray  # (242,) non-negative float


@dataclass
class ParseResult:
    """Frames parsed from a capture plus the malformed-record tally."""

    frames: list[CsiFrame] = field(default_factory=list)
    skipped: int = 0

    def __iter__(self):
        return iter(self.frames)

    def __len__(self) -> int:
        return len(self.frames)


def drop_null_subcarriers(raw: np.ndarray) -> np.ndarray:
    """Remove the 14 null bins from a 256-bin vector in ascending
    subcarrier order, returning the 242 data+pilot entries."""
    raw = np.asarray(raw)
    if raw.shape != (RAW_BIN_COUNT,):
        raise UnsupportedWidth(
            f"expected {RAW_BIN_COUNT} raw bins, got shape {raw.shape}")
    return raw[KEPT_BIN_INDICES].copy()


def extract_amplitude(frame: CsiFrame) -> AmplitudeFrame:
    """Element-wise modulus of the frame's CSI; timestamp preserved."""
    return AmplitudeFrame(frame.timestamp, np.abs(frame.csi))


def _udp_payload(packet: bytes, linktype: int) -> bytes | None:
    """UDP payload addressed to the CSI port, or None if this packet is
    not a well-formed CSI datagram."""
    if linktype == LINKTYPE_ETHERNET:
        if len(packet) < 14 or packet[12:14] != b"\x08\x00":
            return None
        ip = packet[14:]
    else:
        ip = packet
    if len(ip) < 20 or ip[0] >> 4 != 4:
        return None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl + 8 or ip[9] != 17:
        return None
    if int.from_bytes(ip[6:8], "big") & 0x1FFF:  # fragmented
        return None
    udp = ip[ihl:]
    dst_port = int.from_bytes(udp[2:4], "big")
    if dst_port != CSI_UDP_PORT:
        return None
    udp_len = int.from_bytes(udp[4:6], "big")
    if udp_len < 8 or udp_len > len(udp):
        return None
    return udp[8:udp_len]


def _decode_record(payload: bytes, timestamp: float) -> CsiFrame | None:
    """Decode one record payload; None means skip-and-tally.

    Raises UnsupportedWidth when the record is a valid CSI record of a
    recognized non-80 MHz bandwidth.
    """
    if len(payload) < _RECORD_HEADER.size:
        return None
    magic, rssi, _fctl, mac, seq, _css, chanspec, _cvr = _RECORD_HEADER.unpack_from(payload)
    if magic != RECORD_MAGIC:
        return None
    csi_bytes = payload[_RECORD_HEADER.size:]
    if len(csi_bytes) != 4 * RAW_BIN_COUNT:
        if len(csi_bytes) in (4 * n for n in _OTHER_BIN_COUNTS):
            raise UnsupportedWidth(
                f"record carries {len(csi_bytes) // 4} bins; only "
                f"{RAW_BIN_COUNT}-bin (80 MHz) captures are supported")
        return None
    pairs = np.frombuffer(csi_bytes, dtype="<i2").astype(np.float64)
    raw = pairs[0::2] + 1j * pairs[1::2]
    return CsiFrame(timestamp, mac, seq, rssi, chanspec, drop_null_subcarriers(raw))


def parse_capture(data: bytes) -> ParseResult:
    """Parse a pcap byte stream into CSI frames.

    Malformed records (wrong payload magic, garbage payloads, non-CSI
    datagrams, timestamp regressions) are skipped and counted. Structural
    damage to the pcap container raises FileTruncated/BadMagic.
    """
    if len(data) < _PCAP_GLOBAL.size:
        raise FileTruncated("stream ends inside the pcap global header")
    magic, _maj, _min, _tz, _sig, _snap, linktype = _PCAP_GLOBAL.unpack_from(data)
    if magic != PCAP_MAGIC:
        raise BadMagic(f"not a classic little-endian pcap (magic 0x{magic:08x})")
    if linktype not in (LINKTYPE_ETHERNET, LINKTYPE_RAW_IP):
        raise CaptureError(f"unsupported linktype {linktype}")

    result = ParseResult()
    last_ts = -np.inf
    offset = _PCAP_GLOBAL.size
    while offset < len(data):
        if offset + _PCAP_PACKET.size > len(data):
            raise FileTruncated("stream ends mid-record header")
        ts_sec, ts_usec, incl_len, _orig_len = _PCAP_PACKET.unpack_from(data, offset)
        offset += _PCAP_PACKET.size
        if offset + incl_len > len(data):
            raise FileTruncated("stream ends mid-record body")
        packet = data[offset:offset + incl_len]
        offset += incl_len

        payload = _udp_payload(packet, linktype)
        if payload is None:
            result.skipped += 1
            continue
        timestamp = ts_sec + ts_usec / 1e6
        frame = _decode_record(payload, timestamp)
        if frame is None or frame.timestamp < last_ts:
            result.skipped += 1
            continue
        last_ts = frame.timestamp
        result.frames.append(frame)
    return result


def parse_capture_file(path) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_capture(fh.read())
