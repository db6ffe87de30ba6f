"""Download the Cora citation graph and convert it to the dataset directory layout.

    python3 scripts/fetch_cora.py                      # downloads into data/cora
    python3 scripts/fetch_cora.py --tarball cora.tgz   # converts a local copy

Input is the LINQS release (`cora/cora.content`, `cora/cora.cites`). Nodes are
numbered by ascending paper id, classes by sorted class name, citations become
undirected edges with duplicates and self-citations dropped. The result has
2708 nodes, 5278 edges, 1433 binary features and 7 classes.
"""

import argparse
import io
import json
import tarfile
import urllib.request
from pathlib import Path

DEFAULT_URL = "https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz"
ROOT = Path(__file__).resolve().parent.parent


def read_members(tar):
    content = cites = None
    for member in tar.getmembers():
        if member.name.endswith("cora.content"):
            content = tar.extractfile(member).read().decode()
        elif member.name.endswith("cora.cites"):
            cites = tar.extractfile(member).read().decode()
    if content is None or cites is None:
        raise SystemExit("archive lacks cora.content or cora.cites")
    return content, cites


def convert(content, cites):
    rows = [line.split() for line in content.splitlines() if line.strip()]
    rows.sort(key=lambda r: int(r[0]))
    index = {r[0]: i for i, r in enumerate(rows)}
    classes = sorted({r[-1] for r in rows})
    class_id = {c: i for i, c in enumerate(classes)}
    features = [r[1:-1] for r in rows]
    labels = [class_id[r[-1]] for r in rows]

    edges = set()
    for line in cites.splitlines():
        parts = line.split()
        if len(parts) != 2 or parts[0] not in index or parts[1] not in index:
            continue
        a, b = index[parts[0]], index[parts[1]]
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return features, labels, sorted(edges), len(classes)


def write(out, features, labels, edges, num_classes):
    out.mkdir(parents=True, exist_ok=True)
    (out / "features.txt").write_text("".join(" ".join(f) + "\n" for f in features))
    (out / "labels.txt").write_text("".join(f"{y}\n" for y in labels))
    (out / "edges.txt").write_text("# cora citations, undirected\n" + "".join(f"{a} {b}\n" for a, b in edges))
    meta = {"name": "cora", "C": num_classes, "d": len(features[0])}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--url", default=DEFAULT_URL)
    parser.add_argument("--tarball", type=Path, help="use a local cora.tgz instead of downloading")
    parser.add_argument("--out", type=Path, default=ROOT / "data" / "cora")
    args = parser.parse_args()

    if args.tarball:
        blob = args.tarball.read_bytes()
    else:
        with urllib.request.urlopen(args.url, timeout=60) as resp:
            blob = resp.read()
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:*") as tar:
        content, cites = read_members(tar)

    features, labels, edges, num_classes = convert(content, cites)
    write(args.out, features, labels, edges, num_classes)
    same = sum(labels[a] == labels[b] for a, b in edges) / max(len(edges), 1)
    print(f"wrote {args.out}: m={len(labels)} |E|={len(edges)} d={len(features[0])} C={num_classes} H={same:.4f}")


if __name__ == "__main__":
    main()
