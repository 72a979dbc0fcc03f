"""Text formats: system files and run manifests.

System file (line oriented, ``#`` starts a comment)::

    symbols 3
    initiator (s1,s2) (s2*,s1*)
    monomer (s2*,s1*,s1,s2) + conc=0.5
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .core import (
    CONCENTRATION_TOLERANCE, Initiator, InsertionSystem, MonomerType, Symbol, sym, validate_system,
)


class SystemParseError(ValueError):
    def __init__(self, line: Optional[int], message: str):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


_SYM = r"\s*(s\d+\*?)\s*"
_PAIR = re.compile(r"\(" + _SYM + "," + _SYM + r"\)")
_INIT = re.compile(r"initiator\s+" + _PAIR.pattern + r"\s*" + _PAIR.pattern)
_MONO = re.compile(r"monomer\s+\(" + ",".join([_SYM] * 4) + r"\)\s*([+-])\s+conc\s*=\s*(\S+)")


def format_symbol(s: Symbol) -> str:
    return str(s)


def serialize_system(sys: InsertionSystem, header: Optional[list[str]] = None) -> str:
    lines = [f"# {h}" for h in (header or [])]
    lines.append(f"symbols {sys.symbol_count}")
    (a, b), (c, d) = sys.initiator.q, sys.initiator.r
    lines.append(f"initiator ({a},{b}) ({c},{d})")
    for m in sys.monomers:
        lines.append(f"monomer ({','.join(map(str, m.quad))}) {m.sign} conc={m.concentration!r}")
    return "\n".join(lines) + "\n"


def parse_system(text: str) -> InsertionSystem:
    """Parse and validate a system file; errors carry the offending line number."""
    count = None
    initiator = None
    monomers: list[MonomerType] = []
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        try:
            if head == "symbols":
                m = re.fullmatch(r"symbols\s+(\d+)", line)
                if not m:
                    raise SystemParseError(lineno, "expected 'symbols <N>'")
                if count is not None:
                    raise SystemParseError(lineno, "duplicate 'symbols' line")
                count = int(m.group(1))
            elif head == "initiator":
                m = _INIT.fullmatch(line)
                if not m:
                    raise SystemParseError(lineno, "expected 'initiator (s,s) (s,s)'")
                if initiator is not None:
                    raise SystemParseError(lineno, "duplicate 'initiator' line")
                a, b, c, d = (sym(g) for g in m.groups())
                initiator = Initiator((a, b), (c, d))
                init_line = lineno
            elif head == "monomer":
                m = _MONO.fullmatch(line)
                if not m:
                    raise SystemParseError(lineno, "expected 'monomer (s,s,s,s) +|- conc=<decimal>'")
                quad = tuple(sym(g) for g in m.groups()[:4])
                try:
                    conc = float(m.group(6))
                except ValueError:
                    raise SystemParseError(lineno, f"bad concentration {m.group(6)!r}") from None
                monomers.append(MonomerType(quad, m.group(5), conc))
                lines.append(lineno)
            else:
                raise SystemParseError(lineno, f"unknown directive {head!r}")
        except SystemParseError:
            raise
        except ValueError as exc:
            raise SystemParseError(lineno, str(exc)) from None
    if count is None:
        raise SystemParseError(None, "missing 'symbols' line")
    if initiator is None:
        raise SystemParseError(None, "missing 'initiator' line")
    sys_ = InsertionSystem(count, tuple(monomers), initiator)
    report = validate_system(sys_)
    if not report.ok:
        raise SystemParseError(_blame(sys_, lines, init_line), report.violations[0])
    return sys_


def _blame(sys_, lines, init_line) -> Optional[int]:
    """Line of the first monomer that breaks validation, else the initiator line."""
    total = 0.0
    for m, ln in zip(sys_.monomers, lines):
        total += m.concentration
        bad_symbol = any(not 0 <= s.base < sys_.symbol_count for s in m.quad)
        if not 0 < m.concentration <= 1 or bad_symbol or total > 1 + CONCENTRATION_TOLERANCE:
            return ln
    return init_line


def load_system(path) -> InsertionSystem:
    return parse_system(Path(path).read_text())


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    arguments: list[str]
    seed: Optional[int]
    version: str = __version__
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def manifest_path(output) -> Path:
    p = Path(output)
    return p.with_name(p.name + ".manifest.json")
