"""Command line entry point, installed as embed-export and shimmed by export.py.

Exit codes follow the evaluation toolkit's convention: 0 success, 1
computational failure, 2 input or schema error. Diagnostics go to standard
error; a one-line JSON summary goes to standard output and the artifacts to
the paths given by --out and --manifest. Runs are byte-identical for fixed
inputs whenever the encoder itself is deterministic.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import __version__
from .core import SUPPORTED_RESOLUTIONS, ExportJob, run_export
from .errors import ComputeError, SchemaError
from .preprocess import MODES

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_SCHEMA = 2


def _err(message: str) -> None:
    print(f"embed-export: {message}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description=(
            "Run an injected encoder over a directory of images and write an "
            "embedding matrix as NPY plus JSON manifest."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--input",
        required=True,
        help="image directory, or a list file naming one image path per line",
    )
    parser.add_argument(
        "--encoder",
        required=True,
        help="encoder callable as 'package.module:attribute'",
    )
    parser.add_argument(
        "--resolution",
        type=int,
        default=336,
        help=f"square working resolution, one of {SUPPORTED_RESOLUTIONS}",
    )
    parser.add_argument(
        "--pad-aspect",
        action="store_true",
        help="preserve aspect ratio: scale the longer side, pad the shorter with black",
    )
    parser.add_argument(
        "--mode",
        choices=MODES,
        default="L",
        help="channel layout handed to the encoder (default L)",
    )
    parser.add_argument("--mean", type=float, default=0.5, help="normalization mean")
    parser.add_argument("--std", type=float, default=0.25, help="normalization std")
    parser.add_argument(
        "--no-preprocess",
        action="store_true",
        help="skip resize and normalization; the encoder sees raw [0, 1] pixels",
    )
    parser.add_argument(
        "--source",
        default=None,
        help="manifest source string (default: derived from the encoder spec)",
    )
    parser.add_argument("--out", required=True, help="output NPY path")
    parser.add_argument("--manifest", required=True, help="output manifest JSON path")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        job = ExportJob(
            input_path=args.input,
            encoder_spec=args.encoder,
            npy_path=args.out,
            manifest_path=args.manifest,
            resolution=args.resolution,
            pad_aspect=args.pad_aspect,
            mode=args.mode,
            mean=args.mean,
            std=args.std,
            apply_preprocess=not args.no_preprocess,
            source=args.source,
        )
        n, dim = run_export(job)
    except SchemaError as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    except ComputeError as exc:
        _err(str(exc))
        return EXIT_COMPUTE
    except (ValueError, KeyError, OSError) as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    print(json.dumps({"n": n, "dim": dim, "npy": args.out, "manifest": args.manifest}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
