"""Regenerate src/notimind/data/emoji.tsv from the interpreter's unicodedata.

The table is committed so that emoji detection does not depend on the
Unicode version of whichever Python runs the pipeline.

    python tools/build_emoji_table.py
"""

import sys
import unicodedata
from pathlib import Path

# Skin-tone modifiers (1F3FB..1F3FF), ZWJ and variation selectors are left out
# on purpose: they decorate an emoji rather than count as one.
RANGES = [
    (0x2600, 0x26FF, "MISCELLANEOUS SYMBOLS"),
    (0x2700, 0x27BF, "DINGBATS"),
    (0x1F1E6, 0x1F1FF, "REGIONAL INDICATOR SYMBOLS"),
    (0x1F300, 0x1F3FA, "MISCELLANEOUS SYMBOLS AND PICTOGRAPHS"),
    (0x1F400, 0x1F5FF, "MISCELLANEOUS SYMBOLS AND PICTOGRAPHS"),
    (0x1F600, 0x1F64F, "EMOTICONS"),
    (0x1F680, 0x1F6FF, "TRANSPORT AND MAP SYMBOLS"),
    (0x1F900, 0x1F9FF, "SUPPLEMENTAL SYMBOLS AND PICTOGRAPHS"),
    (0x1FA70, 0x1FAFF, "SYMBOLS AND PICTOGRAPHS EXTENDED-A"),
]


def main(out):
    lines = [
        "# Emoji codepoint table for notimind.enrich.",
        f"# Generated by tools/build_emoji_table.py (Unicode {unicodedata.unidata_version}).",
        "# Range lines: FIRST..LAST<TAB>RANGE-NAME.  Name lines: CODEPOINT<TAB>NAME.",
    ]
    for lo, hi, label in RANGES:
        lines.append(f"{lo:04X}..{hi:04X}\t{label}")
    for lo, hi, _ in RANGES:
        for cp in range(lo, hi + 1):
            name = unicodedata.name(chr(cp), None)
            if name is not None:
                lines.append(f"{cp:04X}\t{name}")
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "notimind" / "data" / "emoji.tsv"
    main(sys.argv[1] if len(sys.argv) > 1 else default)
