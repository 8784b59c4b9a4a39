"""Thin command-line client for the planning service.

Commands build a request from a flat JSON config (flags override config
keys) and post it to the service: in-process by default, or to a running
server via --server. Exit codes: 0 ok, 2 missing input, 3 malformed
input, 4 planning infeasible, 5 insufficient routes, 1 anything else.
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

EXIT_CODES = {
    "missing-input": 2,
    "malformed-input": 3,
    "planning-infeasible": 4,
    "insufficient-routes": 5,
}


def _post(path, payload, server=None):
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    async def _go():
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://droneplan",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(_go())


def _finish(response):
    if response.status_code == 200:
        print(json.dumps(response.json(), indent=2))
        return 0
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "code" in detail:
        print(f"error [{detail['code']}]: {detail.get('message', '')}", file=sys.stderr)
        return EXIT_CODES.get(detail["code"], 1)
    print(f"error: HTTP {response.status_code}: {response.text}", file=sys.stderr)
    return 3 if response.status_code == 422 else 1


def _load_config(args):
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            print(f"error [missing-input]: config file not found: {path}", file=sys.stderr)
            raise SystemExit(2)
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            print(f"error [malformed-input]: bad config JSON: {exc}", file=sys.stderr)
            raise SystemExit(3)
    return cfg


def _merged(cfg, args, keys):
    """Config values, overridden by any flag that was actually given."""
    out = {k: cfg[k] for k in keys if k in cfg}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _need_seed(values):
    if values.get("seed") is None:
        print("error [malformed-input]: a master seed is required (--seed or config key "
              "\"seed\"); wall-clock seeding is not supported", file=sys.stderr)
        raise SystemExit(3)
    return int(values["seed"])


def _origin_payload(values):
    return {
        "row": values.get("origin_row"), "col": values.get("origin_col"),
        "lat": values.get("origin_lat"), "lon": values.get("origin_lon"),
        "plan_file": values.get("plan_file"), "base_index": values.get("base_index"),
    }


def _params_payload(values):
    keys = ("mfd_m", "alpha", "beta", "knn_rule", "decay", "max_proposals", "max_climb_m")
    return {k: values[k] for k in keys if values.get(k) is not None}


def _add_common(parser):
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--server", help="base URL of a running service; default in-process")
    parser.add_argument("--out", help="output directory")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="droneplan",
                                     description="drone disaster-response planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-field", help="rasterize roads and write the field bundle")
    _add_common(p)
    p.add_argument("--altitude-grid", dest="altitude_grid")
    p.add_argument("--roads")
    p.add_argument("--buffer-m", dest="buffer_m", type=float)

    p = sub.add_parser("plan", help="site bases, assign drones, fill containers")
    _add_common(p)
    p.add_argument("--field-dir", dest="field_dir")
    p.add_argument("--destinations")
    p.add_argument("--drone-catalog", dest="drone_catalog")
    p.add_argument("--package-catalog", dest="package_catalog")
    p.add_argument("--seed", type=int)
    p.add_argument("--range-k", dest="range_k", type=float)
    p.add_argument("--k-max", dest="k_max", type=int)

    p = sub.add_parser("walk", help="run a reconnaissance walk batch")
    _add_common(p)
    p.add_argument("--field-dir", dest="field_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--top-n", dest="top_n", type=int)
    p.add_argument("--origin-row", dest="origin_row", type=int)
    p.add_argument("--origin-col", dest="origin_col", type=int)
    p.add_argument("--origin-lat", dest="origin_lat", type=float)
    p.add_argument("--origin-lon", dest="origin_lon", type=float)
    p.add_argument("--plan-file", dest="plan_file")
    p.add_argument("--base-index", dest="base_index", type=int)
    p.add_argument("--mfd-m", dest="mfd_m", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--knn-rule", dest="knn_rule", type=int)

    p = sub.add_parser("pair", help="pick the best-covering route pair")
    _add_common(p)
    p.add_argument("--field-dir", dest="field_dir")
    p.add_argument("--routes-dir", dest="routes_dir")
    p.add_argument("--knn-rule", dest="knn_rule", type=int)
    p.add_argument("--area", choices=("road", "all"))

    p = sub.add_parser("sensitivity", help="parameter distribution and rule studies")
    _add_common(p)
    p.add_argument("--field-dir", dest="field_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--n-per-rule", dest="n_per_rule", type=int)
    p.add_argument("--origin-row", dest="origin_row", type=int)
    p.add_argument("--origin-col", dest="origin_col", type=int)
    p.add_argument("--plan-file", dest="plan_file")
    p.add_argument("--base-index", dest="base_index", type=int)
    p.add_argument("--mfd-m", dest="mfd_m", type=float)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    cfg = _load_config(args)
    server = args.server or cfg.get("server")
    out_dir = args.out or cfg.get("out") or "out"

    all_keys = (
        "altitude_grid", "roads", "buffer_m", "field_dir", "destinations", "drone_catalog",
        "package_catalog", "seed", "range_k", "k_max", "container_dims", "road_ratio",
        "batch", "jobs", "top_n", "origin_row", "origin_col", "origin_lat", "origin_lon",
        "plan_file", "base_index", "mfd_m", "alpha", "beta", "knn_rule", "decay",
        "max_proposals", "max_climb_m", "routes_dir", "area", "threshold", "n_per_rule",
        "mean_alpha", "var_alpha", "mean_beta", "var_beta",
    )
    values = _merged(cfg, args, all_keys)

    def require(key, flag):
        if values.get(key) is None:
            print(f"error [malformed-input]: {flag} is required (flag or config key "
                  f"{key!r})", file=sys.stderr)
            raise SystemExit(3)
        return values[key]

    if args.command == "build-field":
        payload = {
            "altitude_grid": require("altitude_grid", "--altitude-grid"),
            "roads": require("roads", "--roads"),
            "out_dir": out_dir,
            "buffer_m": values.get("buffer_m", 50.0),
        }
        return _finish(_post("/field/build", payload, server))

    if args.command == "plan":
        payload = {
            "field_dir": require("field_dir", "--field-dir"),
            "destinations": require("destinations", "--destinations"),
            "out_dir": out_dir,
            "seed": _need_seed(values),
            "drone_catalog": values.get("drone_catalog"),
            "package_catalog": values.get("package_catalog"),
            "range_k": values.get("range_k", 1.3),
            "k_max": values.get("k_max", 3),
            "container_dims": values.get("container_dims"),
            "road_ratio": values.get("road_ratio", 10),
        }
        return _finish(_post("/plan", payload, server))

    if args.command == "walk":
        payload = {
            "field_dir": require("field_dir", "--field-dir"),
            "out_dir": out_dir,
            "seed": _need_seed(values),
            "batch": values.get("batch", 10000),
            "jobs": values.get("jobs", 1),
            "top_n": values.get("top_n", 5),
            "origin": _origin_payload(values),
            "params": _params_payload(values),
        }
        return _finish(_post("/walk", payload, server))

    if args.command == "pair":
        payload = {
            "field_dir": require("field_dir", "--field-dir"),
            "routes_dir": require("routes_dir", "--routes-dir"),
            "out_dir": out_dir,
            "knn_rule": values.get("knn_rule", 8),
            "area": values.get("area", "road"),
        }
        return _finish(_post("/pair", payload, server))

    if args.command == "sensitivity":
        dist_keys = ("mean_alpha", "var_alpha", "mean_beta", "var_beta")
        payload = {
            "field_dir": require("field_dir", "--field-dir"),
            "out_dir": out_dir,
            "seed": _need_seed(values),
            "batch": values.get("batch", 1000),
            "jobs": values.get("jobs", 1),
            "threshold": values.get("threshold"),
            "n_per_rule": values.get("n_per_rule", 50),
            "dist": {k: values[k] for k in dist_keys if values.get(k) is not None},
            "origin": _origin_payload(values),
            "params": _params_payload(values),
        }
        return _finish(_post("/sensitivity", payload, server))

    parser.error(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
