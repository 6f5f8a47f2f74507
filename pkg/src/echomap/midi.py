"""Standard MIDI File (format 0) serialization and a sine-synth WAV preview.

The SMF writer is deliberately bit-exact: no running status, a fixed tempo
meta event up front, and deterministic event ordering, so identical inputs
always produce identical bytes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .sonify import NoteEvent

NOTE_OFF = 0x80
NOTE_ON = 0x90
CONTROL_CHANGE = 0xB0
PAN_CONTROLLER = 10


class MidiMessage(NamedTuple):
    """One channel message at an absolute tick (channel 0 only)."""

    tick: int
    status: int
    data1: int
    data2: int


@dataclass(frozen=True)
class MidiDocument:
    """A single-track, single-channel MIDI timeline ready for serialization."""

    ticks_per_quarter: int = 480
    tempo: int = 500000  # microseconds per quarter note
    events: tuple = ()

    def __post_init__(self):
        if self.ticks_per_quarter < 1:
            raise ValueError("ticks_per_quarter must be positive")
        if not 1 <= self.tempo <= 0xFFFFFF:
            raise ValueError("tempo must fit in three bytes")
        object.__setattr__(self, "events", tuple(MidiMessage(*e) for e in self.events))


def _ms_to_tick(ms: float, ticks_per_quarter: int, tempo: int) -> int:
    return math.floor(ms * ticks_per_quarter * 1000.0 / tempo + 0.5)


def events_to_midi(events: Sequence[NoteEvent], ticks_per_quarter: int = 480,
                   tempo: int = 500000) -> MidiDocument:
    """Convert a sorted note stream into MIDI messages.

    Each note emits a pan controller message (CC 10) right before its
    Note-On whenever the pan differs from the previously emitted pan, then
    Note-On at the onset tick and Note-Off at the end tick (at least one
    tick later, so a note never collapses).  Equal-tick messages keep
    Note-Offs of earlier notes first.
    """
    last_onset = -math.inf
    for e in events:
        if e.onset_ms < last_onset:
            raise ValueError("events must be sorted by onset")
        last_onset = e.onset_ms

    staged = []  # (tick, rank, seq, pair_order, message)
    last_pan = None
    for seq, e in enumerate(events):
        on_tick = _ms_to_tick(e.onset_ms, ticks_per_quarter, tempo)
        off_tick = max(on_tick + 1,
                       _ms_to_tick(e.onset_ms + e.duration_ms, ticks_per_quarter, tempo))
        if e.pan != last_pan:
            staged.append((on_tick, 1, seq, 0,
                           MidiMessage(on_tick, CONTROL_CHANGE, PAN_CONTROLLER, e.pan)))
            last_pan = e.pan
        staged.append((on_tick, 1, seq, 1,
                       MidiMessage(on_tick, NOTE_ON, e.pitch, e.velocity)))
        staged.append((off_tick, 0, seq, 0,
                       MidiMessage(off_tick, NOTE_OFF, e.pitch, 0)))
    staged.sort(key=lambda item: item[:4])
    return MidiDocument(ticks_per_quarter, tempo, tuple(item[4] for item in staged))


def encode_vlq(value: int) -> bytes:
    """MIDI variable-length quantity encoding of a non-negative integer."""
    if value < 0:
        raise ValueError("delta times must be non-negative")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(chunks))


def write_smf(doc: MidiDocument) -> bytes:
    """Serialize to Standard MIDI File bytes: format 0, one track."""
    track = bytearray()
    track += b"\x00\xff\x51\x03" + doc.tempo.to_bytes(3, "big")
    prev_tick = 0
    for msg in doc.events:
        if msg.tick < prev_tick:
            raise ValueError("document events are not time-ordered")
        track += encode_vlq(msg.tick - prev_tick)
        track += bytes((msg.status, msg.data1, msg.data2))
        prev_tick = msg.tick
    track += b"\x00\xff\x2f\x00"

    out = bytearray(b"MThd")
    out += struct.pack(">IHHH", 6, 0, 1, doc.ticks_per_quarter)
    out += b"MTrk" + struct.pack(">I", len(track)) + track
    return bytes(out)


def render_wav(events: Sequence[NoteEvent], sample_rate: int,
               tail_ms: float = 0.0) -> bytes:
    """Additive sine preview of a note stream as a stereo 16-bit PCM WAV.

    Each note is a sine at 440 * 2**((pitch-69)/12) Hz with amplitude
    velocity/127, 5 ms linear attack/release ramps, and constant-power pan
    gains (cos/sin of pan/127 * pi/2).  Overlapping notes sum and clip.
    """
    if sample_rate < 8000:
        raise ValueError("sample_rate must be at least 8000 Hz")
    end_ms = max((e.onset_ms + e.duration_ms for e in events), default=0.0) + tail_ms
    frames = int(round(end_ms * sample_rate / 1000.0))
    left = np.zeros(frames, dtype=np.float64)
    right = np.zeros(frames, dtype=np.float64)

    for e in events:
        start = int(round(e.onset_ms * sample_rate / 1000.0))
        length = int(round(e.duration_ms * sample_rate / 1000.0))
        length = min(length, frames - start)
        if length <= 0 or start >= frames:
            continue
        t = np.arange(length) / sample_rate
        freq = 440.0 * 2.0 ** ((e.pitch - 69) / 12.0)
        tone = np.sin(2.0 * np.pi * freq * t) * (e.velocity / 127.0)
        ramp = min(int(0.005 * sample_rate), length // 2)
        if ramp > 0:
            envelope = np.ones(length)
            envelope[:ramp] = np.arange(ramp) / ramp
            envelope[length - ramp:] = envelope[:ramp][::-1]
            tone *= envelope
        angle = (e.pan / 127.0) * (np.pi / 2.0)
        left[start:start + length] += tone * np.cos(angle)
        right[start:start + length] += tone * np.sin(angle)

    stereo = np.empty(frames * 2, dtype=np.float64)
    stereo[0::2] = left
    stereo[1::2] = right
    pcm = np.clip(np.floor(stereo * 32767.0 + 0.5), -32768, 32767).astype("<i2")
    data = pcm.tobytes()

    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, 2, sample_rate, sample_rate * 4, 4, 16,
        b"data", len(data),
    )
    return header + data
