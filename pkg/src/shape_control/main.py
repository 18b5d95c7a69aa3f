"""Main entry point for the Shape Control application."""

from shape_control.experiments.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
