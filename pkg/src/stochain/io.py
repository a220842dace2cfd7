"""CSV output (RFC 4180, UTF-8, CRLF) and run manifests."""
from __future__ import annotations

import csv
import json
import time
from pathlib import Path

from . import __version__

STATS_HEADER = ("statistic", "mean", "stderr", "M", "seed")
ENDPOINT_HEADER = ("trajectory", "x", "y")
PATH_HEADER = ("l", "x", "y", "p", "q", "defect")
CF_HEADER = ("alpha", "beta", "re", "im", "stderr_re", "stderr_im")
DENSITY_HEADER = ("x", "y", "rho")
HIST_HEADER = ("x", "y", "count")
COMPARE_HEADER = ("alpha", "beta", "z_re", "z_im")
ANALYTIC_HEADER = ("quantity", "m", "l", "t", "kappa", "value", "method")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_manifest(out_dir, subcommand, args, config, outputs, started):
    """Everything needed to rerun a command: resolved config and every flag."""
    manifest = {
        "subcommand": subcommand,
        "args": args,
        "config": config.to_dict() if config is not None else None,
        "seed": config.seed if config is not None else args.get("seed"),
        "version": __version__,
        "wall_clock": {"started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
                       "elapsed_s": round(time.time() - started, 3)},
        "outputs": [str(Path(p).name) for p in outputs],
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
