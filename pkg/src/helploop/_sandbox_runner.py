"""Child-process entry point for sandboxed student code. Not imported.

Installs an audit hook that kills any socket use (network access is denied
inside the sandbox), then runs the student file as ``__main__``. Uncaught
exceptions propagate so the parent sees the traceback on stderr.
"""

import runpy
import sys


def _deny_network(event, args):
    if event.startswith("socket."):
        raise RuntimeError("network access is disabled in the sandbox")


def main():
    sys.addaudithook(_deny_network)
    # Shift argv so the student code sees itself as the program.
    del sys.argv[0]
    runpy.run_path(sys.argv[0], run_name="__main__")


if __name__ == "__main__":
    main()
