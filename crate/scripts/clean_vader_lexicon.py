"""Produce the bundled lexicon from the upstream vader_lexicon.txt.

Keeps only tokens the scorer can ever look up (lowercase, no whitespace) and
resolves duplicate tokens the way the upstream dict loader does (last wins).
"""
import sys
from collections import OrderedDict

src, dst = sys.argv[1], sys.argv[2]
entries = OrderedDict()
with open(src, encoding="utf-8") as f:
    for line in f.read().rstrip("\n").split("\n"):
        if not line:
            continue
        fields = line.strip().split("\t")
        token = fields[0]
        if token != token.lower() or any(c.isspace() for c in token):
            continue
        entries.pop(token, None)
        entries[token] = fields
with open(dst, "w", encoding="utf-8") as f:
    for fields in entries.values():
        f.write("\t".join(fields) + "\n")
