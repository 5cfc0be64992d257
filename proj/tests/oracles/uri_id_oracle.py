#!/usr/bin/env python3
"""Independent reference for the 128-bit URI id.

Byte 4-gram features, FNV-1a 128 base hash, per-bit +1/-1 vote,
bit i set iff vote[i] > 0. Keys shorter than 4 bytes are one feature.
Writes "SURT<TAB>32-hex id" lines (most significant nibble first).
"""
import sys

MASK = (1 << 128) - 1
OFFSET = 0x6C62272E07BB014262B821756295C58D
PRIME = 0x0000000001000000000000000000013B


def fnv1a128(data: bytes) -> int:
    h = OFFSET
    for b in data:
        h ^= b
        h = (h * PRIME) & MASK
    return h


def uri_id(key: str) -> int:
    raw = key.encode("utf-8")
    feats = [raw[i:i + 4] for i in range(len(raw) - 3)] or [raw]
    votes = [0] * 128
    for f in feats:
        h = fnv1a128(f)
        for i in range(128):
            votes[i] += 1 if (h >> i) & 1 else -1
    return sum(1 << i for i in range(128) if votes[i] > 0)


KEYS = [
    "org,example)/foo.html",
    "org,example)/",
    "com,vancouver2010)/",
    "com,vancouver2010)/code",
    "com,vancouver2010)/en/langpolicy",
    "com,vancouver2010)/store/index.html",
    "com,vancouver2010,canadacode)/explore",
    "com,teamgb,vancouver2010)/gallery/gillian-cooke/",
    "ch,swissolympic)/olympiablog/?tag=/verletzung",
    "fr,lefigaro)/sport",
    "fr,lemonde)/cgv",
    "fr,liberation,monlibe)/",
    "com,adobe,get)/flashplayer",
    "de,dosb)/de/vancouver-2010/vancouver-ticker/detail/printer.html",
    "org,example)/a?a=1&b=2",
    "org,example:8080)/x",
    "paralympic-games)/news",
    "olympic-cross-country-skiing)/",
    "a)/",
    "ab",
    "abc",
    "abcd",
    "x",
    "nl,i-credible)/",
    "com,topsport)/sportch/liveticker/",
]


def main() -> None:
    out = sys.stdout if len(sys.argv) < 2 else open(sys.argv[1], "w")
    for k in KEYS:
        out.write(f"{k}\t{uri_id(k):032x}\n")


if __name__ == "__main__":
    main()
