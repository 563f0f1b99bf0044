#!/usr/bin/env python3
"""Invocation shim: equivalent to the installed embed-export entry point.

Usage:
  export.py --input DIR --encoder SPEC --resolution 336 --pad-aspect \
            --out embeddings.npy --manifest manifest.json
"""

import sys

from embed_export.cli import main

if __name__ == "__main__":
    sys.exit(main())
