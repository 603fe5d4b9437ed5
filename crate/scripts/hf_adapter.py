"""Serve a Hugging Face token-classification checkpoint over the external model
line protocol.

Usage, from a model directory's manifest.toml:

    classes = "classes.txt"
    vocabulary = "vocab.txt"
    output_width = 102
    command = ["python3", "/path/to/hf_adapter.py", "/path/to/checkpoint"]

The checkpoint's id2label must use B-<class>/I-<class>/O names; columns are
reordered into the inventory layout O, B-c0, I-c0, B-c1, ..., [PAD].
"""

import json
import sys

import torch
from transformers import AutoModelForTokenClassification


def column_map(model, classes):
    layout = {"O": 0}
    for i, c in enumerate(classes):
        layout[f"B-{c}"] = 1 + 2 * i
        layout[f"I-{c}"] = 2 + 2 * i
    mapping = {}
    for idx, label in model.config.id2label.items():
        if label in layout:
            mapping[int(idx)] = layout[label]
    return mapping


def main():
    checkpoint = sys.argv[1]
    with open("classes.txt", encoding="utf-8") as f:
        classes = [line.strip() for line in f if line.strip()]
    width = 2 * len(classes) + 2
    model = AutoModelForTokenClassification.from_pretrained(checkpoint).eval()
    mapping = column_map(model, classes)
    print(json.dumps({"ready": True, "width": width}), flush=True)

    for line in sys.stdin:
        try:
            req = json.loads(line)
            ids = torch.tensor([req["ids"]])
            mask = torch.tensor([[1 if m else 0 for m in req["mask"]]])
            with torch.no_grad():
                logits = model(input_ids=ids, attention_mask=mask).logits[0]
            rows = []
            for row in logits.tolist():
                out = [-1e9] * width
                for src, dst in mapping.items():
                    out[dst] = row[src]
                rows.append(out)
            print(json.dumps({"scores": rows}), flush=True)
        except Exception as e:  # noqa: BLE001
            print(json.dumps({"error": str(e)}), flush=True)


if __name__ == "__main__":
    main()
