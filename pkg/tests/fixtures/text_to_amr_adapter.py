import re
import sys

# One graph per line: a document node with one child per word (at most four words).
for line in sys.stdin:
    words = re.findall(r"[a-z]+", line.lower())[:4]
    children = " ".join(f":ARG{i} (w{i} / {word})" for i, word in enumerate(words))
    sys.stdout.write(f"(d / document {children})".replace(" )", ")") + "\n")
    sys.stdout.flush()
