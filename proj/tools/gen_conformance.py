#!/usr/bin/env python3
"""Regenerates tests/data/wire_vectors.txt and tests/data/golden.evtr.

Standalone reference encoder for the frame and trace layouts, written against
docs/wire-format.md and docs/trace-format.md rather than the C++ sources.

    python3 tools/gen_conformance.py tests/data
"""

import struct
import sys
from pathlib import Path

HELLO, CONFIG, EVENT, BYE = 1, 2, 3, 4

REGISTRY = [
    "ACTION", "KEY_PRESSED", "KEY_RELEASED", "KEY_TYPED", "MOUSE_MOVED",
    "MOUSE_CLICKED", "PAINT", "FOCUS_GAINED", "FOCUS_LOST", "WINDOW_OPENED",
    "WINDOW_CLOSED", "SELECTION", "TEXT_CHANGED",
]


def s(text):
    raw = text.encode("utf-8")
    return struct.pack(">H", len(raw)) + raw


def frame(kind, payload=b""):
    return struct.pack(">IB", len(payload), kind) + payload


def hello(version, agent, toolkit):
    return struct.pack(">H", version) + s(agent) + s(toolkit)


def config(handled, ignored, screenshots):
    ignored = sorted(set(ignored), key=REGISTRY.index)
    out = struct.pack(">BH", 1 if handled else 0, len(ignored))
    for name in ignored:
        out += s(name)
    return out + struct.pack(">B", 1 if screenshots else 0)


def config_text(handled, ignored, screenshots):
    ignored = sorted(set(ignored), key=REGISTRY.index)
    return "granularity=%s; ignore=%s; screenshots=%s" % (
        "HANDLED" if handled else "ALL", ",".join(ignored), "on" if screenshots else "off")


def event(id_, cls, index, geom, shot, type_, timers, listeners):
    out = struct.pack(">Q", id_) + s(cls) + struct.pack(">iiiii", index, *geom)
    if shot is None:
        out += b"\x00"
    else:
        w, h, pixels = shot
        assert len(pixels) == w * h * 4
        out += b"\x01" + struct.pack(">II", w, h) + bytes(pixels)
    out += s(type_)
    out += struct.pack(">H", len(timers))
    for name in sorted(timers):
        out += s(name) + struct.pack(">Q", timers[name])
    out += struct.pack(">I", len(listeners))
    for handler_id, order in listeners:
        out += s(handler_id) + struct.pack(">I", order)
    return out


VECTORS = [
    ("bye", frame(BYE)),
    ("hello_v1", frame(HELLO, hello(1, "agent", "synthetic"))),
    ("hello_v2", frame(HELLO, hello(2, "evtrace-agent", ""))),
    ("config_all_off", frame(CONFIG, config(False, [], False))),
    ("config_handled_noise_on", frame(CONFIG, config(True, ["PAINT", "MOUSE_MOVED"], True))),
    ("config_keys", frame(CONFIG, config(False, ["KEY_TYPED", "KEY_RELEASED"], False))),
    ("event_minimal", frame(EVENT, event(1, "JButton", 0, (10, 20, 30, 40), None, "ACTION", {}, []))),
    ("event_full", frame(EVENT, event(
        7, "Window", -1, (0, 0, 2, 1), (2, 1, range(1, 9)), "KEY_PRESSED",
        {"t_total": 100, "t_capture": 40}, [("h1", 0), ("h2", 3)]))),
    ("event_utf8", frame(EVENT, event(
        0xFFFFFFFFFFFFFFFF, "Fenêtre", 65535, (-5, -7, 1, 1), None, "TEXT_CHANGED",
        {"t_send": 0}, [("ü", 4294967295)]))),
]

MALFORMED = [
    # name, hex, offset of first violating byte
    ("kind_7f", "000000007f", 4),
    ("kind_00", "0000000000", 4),
    ("bye_with_payload", "0000000104ff", 5),
    ("config_bad_granularity", "000000040202000000", 5),
    ("config_unsorted_ignores", frame(CONFIG, struct.pack(">BH", 0, 2) + s("PAINT") + s("ACTION") + b"\x00").hex(), 15),
    ("event_unknown_type", frame(EVENT, event(1, "B", 0, (0, 0, 1, 1), None, "ACTION", {}, [])).hex().replace(
        s("ACTION").hex(), s("ACTIOX").hex()), 37),
]


def golden_trace():
    handled, ignored, shots = True, ["MOUSE_MOVED", "PAINT"], True
    out = b"EVTR" + struct.pack(">H", 1) + s("golden") + s(config_text(handled, ignored, shots))
    events = [
        event(1, "MainFrame", -1, (0, 0, 4, 2), None, "WINDOW_OPENED",
              {"t_capture": 0, "t_send": 0, "t_total": 1500}, [("Main.opened", 0)]),
        event(2, "JButton", 2, (1, 1, 2, 1), (4, 2, [i % 256 for i in range(32)]), "ACTION",
              {"t_capture": 900, "t_send": 0, "t_total": 1200}, [("Save", 1), ("Audit", 5)]),
        event(3, "JTextArea", 0, (0, 1, 4, 1), (4, 2, [255 - i for i in range(32)]), "KEY_PRESSED",
              {"t_capture": 800, "t_send": 0, "t_total": 1000}, [("Editor.keys", 2)]),
    ]
    for e in events:
        out += frame(EVENT, e)
    samples = [(1, 2000, 0, 400), (2, 5000, 900, 3000), (3, 4100, 800, 2900)]
    out += frame(BYE) + struct.pack(">QQ", len(events), len(samples))
    for sample in samples:
        out += struct.pack(">QQQQ", *sample)
    return out


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    lines = ["# name hex  (valid frames)"]
    lines += ["%s %s" % (name, data.hex()) for name, data in VECTORS]
    lines.append("# name hex offset  (malformed input)")
    lines += ["!%s %s %d" % (name, hx, off) for name, hx, off in MALFORMED]
    (out_dir / "wire_vectors.txt").write_text("\n".join(lines) + "\n")
    (out_dir / "golden.evtr").write_bytes(golden_trace())


if __name__ == "__main__":
    main()
