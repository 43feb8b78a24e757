#!/usr/bin/env python3
"""Smoke test for the aspectsum_py extension module.

Builds the extension with cargo if needed, imports it from the target
directory, and exercises the exposed operations against known values.

Usage: python3 python/smoke_test.py [--release]
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_extension(profile: str) -> Path:
    args = ["cargo", "build", "-p", "aspectsum-python"]
    if profile == "release":
        args.append("--release")
    subprocess.run(args, cwd=REPO, check=True)
    lib = REPO / "target" / profile / "libaspectsum_py.so"
    if not lib.exists():  # macOS
        lib = REPO / "target" / profile / "libaspectsum_py.dylib"
    if not lib.exists():
        sys.exit(f"built library not found under target/{profile}")
    return lib


def main() -> None:
    profile = "release" if "--release" in sys.argv[1:] else "debug"
    lib = build_extension(profile)

    staging = Path(tempfile.mkdtemp(prefix="aspectsum_py_"))
    shutil.copy2(lib, staging / "aspectsum_py.so")
    sys.path.insert(0, str(staging))
    import aspectsum_py as m

    # Chunking: worked spans for a 3000-char text at (1200, 100).
    chunks = m.chunk_text("x" * 3000, chunk_size=1200, overlap=100)
    spans = [(c["start"], c["end"]) for c in chunks]
    assert spans == [(0, 1200), (1100, 2300), (2200, 3000)], spans
    assert all(c["text"] == "x" * (c["end"] - c["start"]) for c in chunks)

    # Token counting and size buckets.
    assert m.count_tokens("the cat sat") == 3
    assert m.count_tokens("") == 0
    assert m.size_bucket(250_000) == "large"
    assert m.size_bucket(100_000) == "middle"
    assert m.size_bucket(50_000) == "unclassified"
    assert m.size_bucket(5_000) == "small"

    # Metrics against hand-computed values.
    assert abs(m.rouge1_f1("the cat sat", "the cat sat on the mat") - 2 / 3) < 1e-9
    assert abs(m.meteor("the cat sat down", "the cat sat down") - 0.9921875) < 1e-9
    assert abs(m.meteor("b a", "a b") - 0.5) < 1e-9
    assert abs(m.cosine([1.0, 1.0], [1.0, 0.0]) - 1 / math.sqrt(2)) < 1e-12
    assert m.porter_stem("running") == "run"
    assert m.porter_stem("ponies") == "poni"
    sem = m.semantic_score_hash("same words", "same words")
    assert abs(sem - 1.0) < 1e-9, sem

    # Extraction parsing.
    raw = (
        '("entity"<|>"EMMA"<|>"character"<|>"Protagonist")##'
        '("relationship"<|>"EMMA"<|>"KNIGHTLEY"<|>"Old friends"<|>"friendship, counsel"<|>8)'
        "<|COMPLETE|>"
    )
    parsed = m.parse_extraction_records(raw)
    assert len(parsed["entities"]) == 1 and len(parsed["relations"]) == 1
    assert parsed["relations"][0]["importance"] == 8
    assert parsed["relations"][0]["keywords"] == ["friendship", "counsel"]
    assert parsed["skipped"] == 0
    assert m.canonical_name("  emma   woodhouse ") == "EMMA WOODHOUSE"

    # Graph loading and edge selection.
    graph_file = staging / "graph.json"
    graph_file.write_text(
        json.dumps(
            {
                "version": 1,
                "book_id": "demo",
                "build_config_digest": "d",
                "nodes": [
                    {"name": n, "entity_type": "character", "description": "x", "observation_count": 1}
                    for n in ["A", "B", "C"]
                ],
                "edges": [
                    {
                        "source": "A",
                        "target": "B",
                        "description": "strong",
                        "keywords": ["k"],
                        "importance": 23,
                        "observation_count": 3,
                    },
                    {
                        "source": "B",
                        "target": "C",
                        "description": "weak",
                        "keywords": ["k"],
                        "importance": 9,
                        "observation_count": 1,
                    },
                ],
            }
        )
    )
    graph = m.KnowledgeGraph.load(str(graph_file))
    assert graph.book_id == "demo"
    assert graph.node_count == 3 and graph.edge_count == 2
    assert graph.top_edges(min_importance=10) == [("A", "B", 23)]
    assert graph.top_edges(min_importance=1) == [("A", "B", 23), ("B", "C", 9)]

    # Contract errors surface as ValueError.
    try:
        m.cosine([0.0, 0.0], [1.0, 0.0])
    except ValueError:
        pass
    else:
        sys.exit("zero-vector cosine must raise")

    print("aspectsum_py smoke test: PASS (chunking, tokens, metrics, parsing, graph)")


if __name__ == "__main__":
    main()
