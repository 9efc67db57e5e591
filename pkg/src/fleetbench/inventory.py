"""Node inventory: CPU, memory, kernel and distribution identity of a worker node.

Raw text comes from an *info source* keyed by probe-target name. The live
source reads ``/proc`` and release files; :class:`DirectorySource` replays a
directory holding one file per target, which is how fixtures are stored.
"""

from __future__ import annotations

import os
import re
import socket
import subprocess
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Protocol

from fleetbench.results import INVENTORY, BenchmarkRecord, utc_now

TARGETS = ("cpuinfo", "meminfo", "version", "distro-release", "environment",
           "disks", "packages", "kernel-messages")
REQUIRED = ("cpuinfo", "meminfo", "version")

DEFAULT_DENY = ("PASS", "SECRET", "TOKEN", "KEY", "PROXY")

DISTRO_FILES = ("/etc/os-release", "/etc/redhat-release", "/etc/lsb-release",
                "/etc/SuSE-release", "/etc/debian_version")


class InventoryError(Exception):
    pass


class NoProcessorStanza(InventoryError, ValueError):
    pass


class MissingTotal(InventoryError, ValueError):
    pass


class Unparseable(InventoryError, ValueError):
    pass


class ProbeError(InventoryError):
    """A parser or read failure, tagged with the probe target that caused it."""

    def __init__(self, target: str, cause: Exception | str):
        super().__init__(f"{target}: {cause}")
        self.target = target


class InfoSource(Protocol):
    def read(self, target: str) -> Optional[str]:
        """Raw text for ``target``, or ``None`` when the target is absent."""

    def origin(self, target: str) -> str: ...


@dataclass(frozen=True)
class CpuInfo:
    model: str
    vendor: str
    mhz: float
    count: int
    mixed: bool = False  # stanzas disagree on model/vendor


@dataclass(frozen=True)
class NodeInventory:
    hostname: str
    timestamp: datetime
    cpu_model: str
    cpu_vendor: str
    cpu_mhz: float
    cpu_count: int
    memory_kb: int
    kernel_version: str
    kernel_base: str
    kernel_smp: bool
    distro: str
    env_capture: tuple[tuple[str, str], ...] = ()
    packages_blob: Optional[str] = None
    kernel_messages_blob: Optional[str] = None
    disks_blob: Optional[str] = None
    distro_source: str = ""
    cpu_mixed: bool = False

    def __post_init__(self):
        if self.cpu_count < 1:
            raise ValueError("cpu_count must be >= 1")
        if self.memory_kb <= 0:
            raise ValueError("memory_kb must be > 0")


def _squash(text: str) -> str:
    return " ".join(text.split())


def _stanzas(raw: str) -> list[dict[str, str]]:
    out = []
    for block in re.split(r"\n\s*\n", raw):
        fields = {}
        for line in block.splitlines():
            key, sep, value = line.partition(":")
            if sep:
                fields.setdefault(_squash(key).lower(), _squash(value))
        if fields:
            out.append(fields)
    return out


def _first(fields: Mapping[str, str], *names: str) -> str:
    for n in names:
        if fields.get(n):
            return fields[n]
    return ""


def _mhz(text: str) -> float:
    m = re.match(r"[0-9]+(?:\.[0-9]*)?", text)
    return float(m.group()) if m else 0.0


def parse_cpuinfo(raw: str) -> CpuInfo:
    procs = [s for s in _stanzas(raw) if "processor" in s]
    if not procs:
        raise NoProcessorStanza("no processor stanza found")
    first = procs[0]
    model = _first(first, "model name", "cpu model", "cpu")
    vendor = _first(first, "vendor_id", "vendor", "cpu implementer")
    mhz = _mhz(_first(first, "cpu mhz", "clock"))
    mixed = any(_first(p, "model name", "cpu model", "cpu") != model
                or _first(p, "vendor_id", "vendor", "cpu implementer") != vendor
                for p in procs[1:])
    return CpuInfo(model, vendor, mhz, len(procs), mixed)


def parse_meminfo(raw: str) -> int:
    m = re.search(r"^MemTotal:\s*([0-9]+)\s*kB", raw, re.MULTILINE)
    if not m:
        raise MissingTotal("no MemTotal line")
    return int(m.group(1))


def kernel_release(raw: str) -> str:
    """The release string from either ``/proc/version`` text or a bare release."""
    text = raw.strip()
    m = re.match(r"Linux version (\S+)", text)
    if m:
        return m.group(1)
    return text.split()[0] if text else ""


def classify_kernel(version: str) -> tuple[str, bool]:
    """(first two numeric components, whether the build is an SMP kernel)."""
    if not version:
        raise Unparseable("empty kernel version")
    m = re.match(r"([0-9]+)\.([0-9]+)", version)
    if not m:
        raise Unparseable(f"no leading N.M in {version!r}")
    return f"{m.group(1)}.{m.group(2)}", "smp" in version.lower()


def parse_distro(raw: Optional[str]) -> str:
    if not raw or not raw.strip():
        return "unknown"
    for key in ("PRETTY_NAME", "DISTRIB_DESCRIPTION"):
        m = re.search(rf'^{key}\s*=\s*"?([^"\n]*)"?', raw, re.MULTILINE)
        if m and m.group(1).strip():
            return m.group(1).strip()
    for line in raw.splitlines():
        if line.strip():
            return _squash(line)
    return "unknown"


def parse_environment(raw: str) -> list[tuple[str, str]]:
    pairs = []
    for line in raw.splitlines():
        name, sep, value = line.partition("=")
        if sep and name:
            pairs.append((name, value))
    return pairs


def is_denied(name: str, deny: Iterable[str] = DEFAULT_DENY) -> bool:
    upper = name.upper()
    return any(d.upper() in upper for d in deny)


def filter_environment(pairs: Iterable[tuple[str, str]],
                       deny: Iterable[str] = DEFAULT_DENY) -> list[tuple[str, str]]:
    deny = tuple(deny)
    return sorted((n, v) for n, v in pairs if not is_denied(n, deny))


def collect_inventory(source: InfoSource, clock: Optional[Callable[[], datetime]] = None,
                      hostname: Optional[str] = None,
                      deny: Iterable[str] = DEFAULT_DENY) -> NodeInventory:
    raw = {t: source.read(t) for t in TARGETS}
    for target in REQUIRED:
        if raw[target] is None:
            raise ProbeError(target, "required target is absent")

    def parsed(target, fn):
        try:
            return fn(raw[target])
        except InventoryError as exc:
            raise ProbeError(target, exc) from exc

    cpu = parsed("cpuinfo", parse_cpuinfo)
    memory_kb = parsed("meminfo", parse_meminfo)
    release = kernel_release(raw["version"])
    base, smp = parsed("version", lambda _: classify_kernel(release))
    env = filter_environment(parse_environment(raw["environment"] or ""), deny)
    distro_raw = raw["distro-release"]
    return NodeInventory(
        hostname=hostname or socket.gethostname(),
        timestamp=(clock or utc_now)(),
        cpu_model=cpu.model, cpu_vendor=cpu.vendor, cpu_mhz=cpu.mhz, cpu_count=cpu.count,
        memory_kb=memory_kb, kernel_version=release, kernel_base=base, kernel_smp=smp,
        distro=parse_distro(distro_raw), env_capture=tuple(env),
        packages_blob=raw["packages"], kernel_messages_blob=raw["kernel-messages"],
        disks_blob=raw["disks"],
        distro_source=source.origin("distro-release") if distro_raw is not None else "",
        cpu_mixed=cpu.mixed,
    )


# -- sources -------------------------------------------------------------------

class DirectorySource:
    """Replays fixture files named after the probe targets."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def read(self, target: str) -> Optional[str]:
        path = self.root / target
        return path.read_text(encoding="utf-8") if path.is_file() else None

    def origin(self, target: str) -> str:
        return str(self.root / target)

    @staticmethod
    def write(root: str | os.PathLike, texts: Mapping[str, Optional[str]]) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        for target, text in texts.items():
            if text is not None:
                (root / target).write_text(text, encoding="utf-8")


def _read_file(path: str) -> Optional[str]:
    try:
        with open(path, encoding="utf-8", errors="replace") as fh:
            return fh.read()
    except OSError:
        return None


def _run(argv: list[str]) -> Optional[str]:
    try:
        out = subprocess.run(argv, capture_output=True, text=True, timeout=30, check=True)
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout


class LiveSource:
    """Reads the running machine."""

    def __init__(self, distro_files: Iterable[str] = DISTRO_FILES,
                 environ: Optional[Mapping[str, str]] = None):
        self.distro_files = tuple(distro_files)
        self.environ = os.environ if environ is None else environ
        self._distro_origin = ""

    def read(self, target: str) -> Optional[str]:
        if target == "cpuinfo":
            return _read_file("/proc/cpuinfo")
        if target == "meminfo":
            return _read_file("/proc/meminfo")
        if target == "version":
            return _read_file("/proc/sys/kernel/osrelease") or os.uname().release
        if target == "distro-release":
            for path in self.distro_files:
                text = _read_file(path)
                if text is not None and text.strip():
                    self._distro_origin = path
                    return text
            return None
        if target == "environment":
            return "".join(f"{k}={v}\n" for k, v in sorted(self.environ.items())
                           if "\n" not in v)
        if target == "disks":
            return _read_file("/proc/partitions")
        if target == "packages":
            return (_run(["rpm", "-qa"])
                    or _run(["dpkg-query", "-W", "-f", "${Package} ${Version}\n"]))
        if target == "kernel-messages":
            return _run(["dmesg"])
        raise KeyError(target)

    def origin(self, target: str) -> str:
        if target == "distro-release":
            return self._distro_origin
        return target


# -- serialization ---------------------------------------------------------------

def to_fixtures(inv: NodeInventory) -> dict[str, Optional[str]]:
    """Canonical probe texts that parse back to ``inv``'s parsed fields."""
    stanza = (f"processor\t: {{i}}\nvendor_id\t: {inv.cpu_vendor}\n"
              f"model name\t: {inv.cpu_model}\ncpu MHz\t\t: {inv.cpu_mhz:.3f}\n")
    cpuinfo = "\n".join(stanza.format(i=i) for i in range(inv.cpu_count))
    return {
        "cpuinfo": cpuinfo,
        "meminfo": f"MemTotal:       {inv.memory_kb} kB\n",
        "version": inv.kernel_version + "\n",
        "distro-release": None if inv.distro == "unknown" else f'PRETTY_NAME="{inv.distro}"\n',
        "environment": "".join(f"{n}={v}\n" for n, v in inv.env_capture),
        "disks": inv.disks_blob,
        "packages": inv.packages_blob,
        "kernel-messages": inv.kernel_messages_blob,
    }


def _text(value) -> str:
    if isinstance(value, str):
        return value.replace("\x00", "")  # NUL cannot travel in a text CSV
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.9g" % value
    return str(value)


def inventory_records(inv: NodeInventory, site: str = "") -> list[BenchmarkRecord]:
    """One ``metric=inventory`` record per field; absent blobs become ``missing``."""
    fields = [
        ("cpu_model", inv.cpu_model), ("cpu_vendor", inv.cpu_vendor),
        ("cpu_mhz", inv.cpu_mhz), ("cpu_count", inv.cpu_count),
        ("cpu_mixed", inv.cpu_mixed), ("memory_kb", inv.memory_kb),
        ("kernel_version", inv.kernel_version), ("kernel_base", inv.kernel_base),
        ("kernel_smp", inv.kernel_smp), ("distro", inv.distro),
        ("distro_source", inv.distro_source),
    ]
    out = [BenchmarkRecord(inv.hostname, site, inv.timestamp, INVENTORY, "", k, None, "",
                           "ok", _text(v)) for k, v in fields]
    out += [BenchmarkRecord(inv.hostname, site, inv.timestamp, INVENTORY, "env", name, None,
                            "", "ok", _text(value)) for name, value in inv.env_capture]
    for kind, blob in (("packages", inv.packages_blob),
                       ("kernel_messages", inv.kernel_messages_blob),
                       ("disks", inv.disks_blob)):
        if blob is None:
            out.append(BenchmarkRecord(inv.hostname, site, inv.timestamp, INVENTORY, "blob",
                                       kind, None, "", "missing", "absent"))
        else:
            out.append(BenchmarkRecord(inv.hostname, site, inv.timestamp, INVENTORY, "blob",
                                       kind, None, "", "ok", _text(blob)))
    return out


def inventory_attributes(records: Iterable[BenchmarkRecord]) -> dict[str, dict[str, str]]:
    """hostname -> {field: text} for the scalar inventory fields in ``records``."""
    out: dict[str, dict[str, str]] = {}
    for r in records:
        if r.metric == INVENTORY and r.klass == "" and r.ok:
            out.setdefault(r.hostname, {})[r.kind] = r.note
    return out
