"""Text file formats for channels, precoders, and hybrid precoders.

All floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.  Every file starts with a magic line naming the format and
its version.

channels (`mhp-channels 1`): header keys N, G, K (G integers), L, spacing,
noise, seed; then one line per UE in group-major order:
`<group> <ue> <2N floats re im interleaved>`.

precoder (`mhp-precoder 1`): header keys N, G; then N antenna rows of 2G
floats (re im per group column).

hybrid (`mhp-hybrid 1`): header keys N, NRF, G, family, bits (`inf` for
infinite resolution); then N rows of phases_a (NRF floats), N rows of
phases_b, NRF rows of the digital matrix (2G floats re im interleaved).
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelSet, SystemConfig
from .hybrid import HybridPrecoder

FLOAT_FMT = "%.17g"


class FileFormatError(ValueError):
    """Raised when a data file does not match its documented format."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _fmt_floats(values) -> str:
    return " ".join(FLOAT_FMT % v for v in np.asarray(values, dtype=float).ravel())


def _interleave(row: np.ndarray) -> np.ndarray:
    out = np.empty(2 * row.size)
    out[0::2] = row.real
    out[1::2] = row.imag
    return out


def _deinterleave(values: np.ndarray) -> np.ndarray:
    return values[0::2] + 1j * values[1::2]


class _Reader:
    def __init__(self, path):
        self.path = path
        with open(path, "r", encoding="utf-8") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise FileFormatError(self.path, self.pos, "unexpected end of file")

    def error(self, message: str) -> FileFormatError:
        return FileFormatError(self.path, self.pos, message)

    def expect_magic(self, magic: str):
        line = self.next_line()
        if line != magic:
            raise self.error(f"expected magic line {magic!r}, got {line!r}")

    def header_field(self, key: str) -> list[str]:
        line = self.next_line()
        parts = line.split()
        if parts[0] != key:
            raise self.error(f"expected header field {key!r}, got {parts[0]!r}")
        return parts[1:]

    def header_int(self, key: str) -> int:
        parts = self.header_field(key)
        try:
            return int(parts[0])
        except (IndexError, ValueError):
            raise self.error(f"header field {key!r} expects an integer") from None

    def header_float(self, key: str) -> float:
        parts = self.header_field(key)
        try:
            return float(parts[0])
        except (IndexError, ValueError):
            raise self.error(f"header field {key!r} expects a number") from None

    def floats(self, expected: int) -> np.ndarray:
        line = self.next_line()
        parts = line.split()
        if len(parts) != expected:
            raise self.error(f"expected {expected} values, got {len(parts)}")
        try:
            return np.array([float(p) for p in parts])
        except ValueError:
            raise self.error("non-numeric value") from None


def write_channels(path, channels: ChannelSet) -> None:
    cfg = channels.config
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mhp-channels 1\n")
        fh.write(f"N {cfg.n_antennas}\n")
        fh.write(f"G {cfg.n_groups}\n")
        fh.write("K " + " ".join(str(k) for k in cfg.group_sizes) + "\n")
        fh.write(f"L {cfg.n_paths}\n")
        fh.write(f"spacing {FLOAT_FMT % cfg.spacing_ratio}\n")
        fh.write(f"noise {FLOAT_FMT % cfg.noise_power}\n")
        fh.write(f"seed {channels.seed}\n")
        for j, k, h in channels.pairs():
            fh.write(f"{j} {k} " + _fmt_floats(_interleave(h)) + "\n")


def read_channels(path) -> ChannelSet:
    r = _Reader(path)
    r.expect_magic("mhp-channels 1")
    n = r.header_int("N")
    g = r.header_int("G")
    k_parts = r.header_field("K")
    try:
        sizes = tuple(int(p) for p in k_parts)
    except ValueError:
        raise r.error("header field 'K' expects integers") from None
    if len(sizes) != g:
        raise r.error(f"expected {g} group sizes, got {len(sizes)}")
    n_paths = r.header_int("L")
    spacing = r.header_float("spacing")
    noise = r.header_float("noise")
    seed = r.header_int("seed")
    cfg = SystemConfig(
        n_antennas=n,
        group_sizes=sizes,
        n_paths=n_paths,
        spacing_ratio=spacing,
        noise_power=noise,
    )
    vectors: list[list[np.ndarray]] = []
    for j, size in enumerate(sizes):
        group = []
        for k in range(size):
            values = r.floats(2 + 2 * n)
            if int(values[0]) != j or int(values[1]) != k:
                raise r.error(
                    f"expected UE ({j}, {k}), got ({int(values[0])}, {int(values[1])})"
                )
            group.append(_deinterleave(values[2:]))
        vectors.append(group)
    return ChannelSet(config=cfg, seed=seed, vectors=vectors)


def write_precoder(path, w: np.ndarray) -> None:
    w = np.atleast_2d(np.asarray(w, dtype=np.complex128))
    n, g = w.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mhp-precoder 1\n")
        fh.write(f"N {n}\n")
        fh.write(f"G {g}\n")
        for row in w:
            fh.write(_fmt_floats(_interleave(row)) + "\n")


def read_precoder(path) -> np.ndarray:
    r = _Reader(path)
    r.expect_magic("mhp-precoder 1")
    n = r.header_int("N")
    g = r.header_int("G")
    rows = [_deinterleave(r.floats(2 * g)) for _ in range(n)]
    return np.vstack(rows)


def write_hybrid(path, hybrid: HybridPrecoder) -> None:
    n = hybrid.n_antennas
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mhp-hybrid 1\n")
        fh.write(f"N {n}\n")
        fh.write(f"NRF {hybrid.n_rf}\n")
        fh.write(f"G {hybrid.n_groups}\n")
        fh.write(f"family {hybrid.family}\n")
        fh.write(f"bits {'inf' if hybrid.bits is None else hybrid.bits}\n")
        for row in hybrid.phases_a:
            fh.write(_fmt_floats(row) + "\n")
        for row in hybrid.phases_b:
            fh.write(_fmt_floats(row) + "\n")
        for row in hybrid.digital:
            fh.write(_fmt_floats(_interleave(row)) + "\n")


def read_hybrid(path) -> HybridPrecoder:
    r = _Reader(path)
    r.expect_magic("mhp-hybrid 1")
    n = r.header_int("N")
    n_rf = r.header_int("NRF")
    g = r.header_int("G")
    family = r.header_field("family")[0]
    bits_text = r.header_field("bits")[0]
    if bits_text == "inf":
        bits = None
    else:
        try:
            bits = int(bits_text)
        except ValueError:
            raise r.error("header field 'bits' expects an integer or 'inf'") from None
    phases_a = np.vstack([r.floats(n_rf) for _ in range(n)])
    phases_b = np.vstack([r.floats(n_rf) for _ in range(n)])
    digital = np.vstack([_deinterleave(r.floats(2 * g)) for _ in range(n_rf)])
    return HybridPrecoder(
        phases_a=phases_a,
        phases_b=phases_b,
        digital=digital,
        n_rf=n_rf,
        family=family,
        bits=bits,
    )
