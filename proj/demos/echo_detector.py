#!/usr/bin/env python3
"""Reference external detector for the line-delimited JSON patch protocol.

The pipeline writes one request per line on stdin:

    {"id": 17, "width": 200, "height": 200, "png_b64": "<base64 PNG>"}

and expects one reply per line on stdout, either

    {"id": 17, "detections": [{"x":..,"y":..,"w":..,"h":..,"score":..,"class":".."}]}

or {"id": 17, "error": "reason"}. Replies may arrive in any order; the id ties
them back to requests. This demo ignores the pixels and returns one fixed
centered box per patch, which is enough to exercise the protocol end to end.
Swap in a real model by decoding png_b64 and emitting its boxes.
"""

import json
import sys


def main() -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            w, h = int(req["width"]), int(req["height"])
            side = max(1, min(20, w, h))
            det = {
                "x": (w - side) // 2,
                "y": (h - side) // 2,
                "w": side,
                "h": side,
                "score": 0.5,
                "class": "person",
            }
            reply = {"id": req["id"], "detections": [det]}
        except (KeyError, ValueError) as ex:
            reply = {"id": req.get("id", -1) if isinstance(req, dict) else -1,
                     "error": f"bad request: {ex}"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
