"""
Child-process adapters for the model-backed stages.

Each adapter is a command line speaking a line protocol: one UTF-8 input per line
on stdin, exactly one output per line on stdout, in the same order. PENMAN inputs
are sent single-line.
"""
import logging
import shlex
import subprocess
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from config import ADAPTER_SLOTS, EditConfig
from penman_codec import single_line

logger = logging.getLogger(__name__)


class AdapterFailure(RuntimeError):
    """An adapter exited abnormally or answered with the wrong number of lines"""

    def __init__(self, adapter: str, message: str, record_id: Optional[str] = None,
                 rounds: Optional[Sequence[int]] = None):
        where = ""
        if record_id is not None:
            where = f" for record '{record_id}'"
            if rounds:
                where += f" rounds {', '.join(str(r) for r in rounds)}"
        super().__init__(f"adapter {adapter}{where}: {message}")
        self.adapter = adapter
        self.message = message
        self.record_id = record_id
        self.rounds = list(rounds or [])

    def for_record(self, record_id: str, rounds: Sequence[int]) -> "AdapterFailure":
        return AdapterFailure(self.adapter, self.message, record_id, rounds)


@dataclass
class LineAdapter:
    name: str
    command: str
    timeout: float = 600.0

    @property
    def argv(self) -> List[str]:
        return shlex.split(self.command)

    def run(self, lines: Sequence[str]) -> List[str]:
        """Send a batch of inputs and return the outputs, one per input"""
        if not lines:
            return []
        payload = "".join(" ".join(line.splitlines()) + "\n" for line in lines)
        logger.debug(f"Running adapter {self.name} on {len(lines)} line(s): {self.command}")
        try:
            completed = subprocess.run(
                self.argv,
                input=payload.encode("utf-8"),
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                timeout=self.timeout,
                check=False,
            )
        except FileNotFoundError as e:
            raise AdapterFailure(self.name, f"command not found: {e.filename}") from e
        except subprocess.TimeoutExpired as e:
            raise AdapterFailure(self.name, f"timed out after {self.timeout:g}s") from e

        if completed.returncode != 0:
            detail = completed.stderr.decode("utf-8", errors="replace").strip().splitlines()
            tail = f" ({detail[-1]})" if detail else ""
            raise AdapterFailure(self.name, f"exited with status {completed.returncode}{tail}")

        outputs = completed.stdout.decode("utf-8", errors="replace").splitlines()
        if len(outputs) != len(lines):
            raise AdapterFailure(self.name, f"returned {len(outputs)} line(s) for {len(lines)} input(s)")
        return outputs


class ExternalAdapters:
    """The three optional adapter slots"""

    def __init__(self, adapters: Optional[Dict[str, LineAdapter]] = None):
        self.adapters = adapters or {}

    @classmethod
    def from_config(cls, config: EditConfig) -> "ExternalAdapters":
        adapters = {
            slot: LineAdapter(slot, command, config.adapter_timeout)
            for slot, command in config.adapters.items()
            if slot in ADAPTER_SLOTS
        }
        if adapters:
            logger.info(f"Configured adapters: {', '.join(sorted(adapters))}")
        return cls(adapters)

    def has(self, slot: str) -> bool:
        return slot in self.adapters

    def text_to_amr(self, texts: Sequence[str]) -> List[str]:
        return self.adapters["text_to_amr"].run(texts)

    def amr_to_text(self, penman_graphs: Sequence[str]) -> List[str]:
        return self.adapters["amr_to_text"].run([single_line(g) for g in penman_graphs])

    def expand(self, abstracts: Sequence[str]) -> List[str]:
        return self.adapters["expander"].run(abstracts)
