"""Command-line front-end: bridge serve / bridge export."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .export import export_attributions
from .models import BridgeError, load_model
from .serve import serve


def cmd_serve(args) -> int:
    endpoint = serve(lambda: load_model(args.model), args.transport,
                     host=args.host, port=args.port)
    if endpoint is not None:  # http transport
        logging.getLogger("model_bridge").info(
            "listening on %s:%d", *endpoint.server_address[:2])
        try:
            endpoint.serve_forever()
        except KeyboardInterrupt:
            endpoint.server_close()
    return 0


def cmd_export(args) -> int:
    model = load_model(args.model)
    with open(args.data, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    rows = d["instances"] if isinstance(d, dict) else d
    instances = [
        (row.get("id", f"i{k}"), row["values"]) for k, row in enumerate(rows)
    ]
    entries = export_attributions(model, instances, args.method, out=args.out)
    if args.out is None:
        json.dump(entries, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="Host a JSON-specified model behind the prediction "
                    "protocol, or export its attribution scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve predictions over http or stdio")
    p.add_argument("--transport", choices=["http", "stdio"], required=True)
    p.add_argument("--model", required=True, help="model spec JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("export", help="write attribution scores as explanation JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="dataset JSON with an 'instances' list")
    p.add_argument("--method", default="gradient-x-input")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_export)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (BridgeError, OSError, KeyError) as err:
        sys.stderr.write(json.dumps({"error": str(err)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
