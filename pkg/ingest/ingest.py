#!/usr/bin/env python3
"""Entry point named by the dataset-preparation interface; see scene_ingest.cli."""

import sys

from scene_ingest.cli import main

if __name__ == "__main__":
    sys.exit(main())
