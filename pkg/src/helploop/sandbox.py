"""Sandboxed execution of student code for the debugging pipeline.

Code runs in an isolated subprocess with a wall-clock timeout, CPU, memory,
and file-size rlimits, no network (audit hook in the runner), and its own
process group so runaway children die with it. ``execute_code`` never raises
into the caller: every failure mode is encoded in the ExecutionResult.
"""

from __future__ import annotations

import os
import resource
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

__all__ = ["ExecutionResult", "ExitStatus", "SandboxLimits", "execute_code"]

_RUNNER = Path(__file__).with_name("_sandbox_runner.py")
# Keep captured output bounded; a print loop can fill a disk long before
# it hits the CPU limit.
_OUTPUT_CAP = 64 * 1024


class ExitStatus(str, Enum):
    OK = "ok"
    ERROR = "error"
    TIMEOUT = "timeout"
    SANDBOX_FAILURE = "sandbox_failure"


@dataclass(frozen=True)
class SandboxLimits:
    wall_time_seconds: float = 5.0
    cpu_seconds: int = 5
    memory_bytes: int = 256 * 1024 * 1024
    max_file_bytes: int = 1024 * 1024


@dataclass(frozen=True)
class ExecutionResult:
    stdout: str
    stderr: str
    exit_status: ExitStatus
    wall_time: float


def _limit_setter(limits: SandboxLimits):
    def apply_limits():
        resource.setrlimit(
            resource.RLIMIT_CPU, (limits.cpu_seconds, limits.cpu_seconds + 1)
        )
        resource.setrlimit(
            resource.RLIMIT_AS, (limits.memory_bytes, limits.memory_bytes)
        )
        resource.setrlimit(
            resource.RLIMIT_FSIZE, (limits.max_file_bytes, limits.max_file_bytes)
        )
        os.umask(0o077)

    return apply_limits


def _read_capped(path: Path) -> str:
    data = path.read_bytes()
    if len(data) > _OUTPUT_CAP:
        return data[:_OUTPUT_CAP].decode("utf-8", "replace") + "\n... [truncated]"
    return data.decode("utf-8", "replace")


def execute_code(
    code: str,
    limits: SandboxLimits | None = None,
    interpreter: tuple[str, ...] | None = None,
) -> ExecutionResult:
    """Run student code under resource limits; failures never propagate."""
    limits = limits or SandboxLimits()
    command = list(interpreter or (sys.executable,))
    started = time.monotonic()
    try:
        with tempfile.TemporaryDirectory(prefix="helploop-sandbox-") as workdir:
            work = Path(workdir)
            code_path = work / "student_code.py"
            code_path.write_text(code, encoding="utf-8")
            out_path = work / "stdout.txt"
            err_path = work / "stderr.txt"
            with out_path.open("wb") as out, err_path.open("wb") as err:
                child = subprocess.Popen(
                    [*command, str(_RUNNER), str(code_path)],
                    stdin=subprocess.DEVNULL,
                    stdout=out,
                    stderr=err,
                    cwd=workdir,
                    env={
                        "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
                        "PYTHONDONTWRITEBYTECODE": "1",
                        "PYTHONIOENCODING": "utf-8",
                    },
                    preexec_fn=_limit_setter(limits),
                    start_new_session=True,
                )
                timed_out = False
                try:
                    child.wait(timeout=limits.wall_time_seconds)
                except subprocess.TimeoutExpired:
                    timed_out = True
                    try:
                        os.killpg(child.pid, signal.SIGKILL)
                    except ProcessLookupError:
                        pass
                    child.wait()
            wall_time = time.monotonic() - started
            stdout = _read_capped(out_path)
            stderr = _read_capped(err_path)
    except Exception as exc:  # the sandbox itself broke, not the student code
        return ExecutionResult(
            stdout="",
            stderr=f"sandbox failure: {exc}",
            exit_status=ExitStatus.SANDBOX_FAILURE,
            wall_time=time.monotonic() - started,
        )
    if timed_out:
        status = ExitStatus.TIMEOUT
    elif child.returncode == 0:
        status = ExitStatus.OK
    else:
        status = ExitStatus.ERROR
    return ExecutionResult(
        stdout=stdout, stderr=stderr, exit_status=status, wall_time=wall_time
    )
