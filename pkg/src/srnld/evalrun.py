"""Cached, bounded-parallel batch inference against a chat-completion endpoint.

Each prompt is keyed by ``cache_key(prompt, model, temperature)``; a key
whose file exists under ``cache_dir/ab/cd/<key>.json`` is served from disk,
otherwise the prompt goes to the endpoint and the answer is written with a
temp-file-then-rename so readers never see half a file.  Prompts sharing a
key within one batch cost a single request.  Failures after retries become
sentinel rows and never abort the batch.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Union

import httpx

from .errors import ManifestInvalid
from .promptkit import PromptSpec
from .refine import RefinerConfig, endpoint_generate

__all__ = ["cache_key", "RunManifest", "ResponseCache", "RunSummary", "run_batch", "read_jsonl", "write_jsonl"]

log = logging.getLogger(__name__)


def cache_key(prompt: str, model: str, temperature: float) -> str:
    """SHA-256 of ``model \\x1f temperature (6 decimals) \\x1f prompt``."""
    canon = f"{model}\x1f{float(temperature):.6f}\x1f{prompt}"
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    task: str
    variant: str
    strategy: str
    model_name: str
    endpoint_url: str
    cache_dir: Path
    sr_kind: Optional[str] = None
    temperature: float = 0.0
    max_parallel: int = 4
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0
    # input prompts JSONL and output responses JSONL, used by the CLI
    prompts: Optional[Path] = None
    out: Optional[Path] = None

    def __post_init__(self):
        try:
            spec = PromptSpec(self.task, self.variant, self.strategy, self.sr_kind)
        except ValueError as exc:
            raise ManifestInvalid(str(exc)) from exc
        object.__setattr__(self, "task", spec.task.value)
        object.__setattr__(self, "variant", spec.variant.value)
        object.__setattr__(self, "strategy", spec.strategy.value)
        object.__setattr__(self, "sr_kind", spec.sr_kind)
        if not isinstance(self.max_parallel, int) or self.max_parallel < 1:
            raise ManifestInvalid("max_parallel must be an integer >= 1")
        if not self.model_name or not self.endpoint_url:
            raise ManifestInvalid("model_name and endpoint_url are required")
        if self.max_retries < 0 or self.timeout <= 0:
            raise ManifestInvalid("max_retries must be >= 0 and timeout > 0")
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))
        for name in ("prompts", "out"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, Path(getattr(self, name)))

    def ensure_cache_dir(self) -> None:
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ManifestInvalid(f"cache_dir {self.cache_dir} cannot be created: {exc}") from exc
        if not os.access(self.cache_dir, os.W_OK):
            raise ManifestInvalid(f"cache_dir {self.cache_dir} is not writable")

    def refiner_config(self) -> RefinerConfig:
        return RefinerConfig(
            mode="endpoint",
            votes=1,
            endpoint_url=self.endpoint_url,
            model_name=self.model_name,
            temperature=self.temperature,
            timeout=self.timeout,
            max_retries=self.max_retries,
            backoff_base=self.backoff_base,
        )

    @classmethod
    def from_json(cls, data: Mapping, base_dir: Union[str, Path, None] = None) -> "RunManifest":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ManifestInvalid(f"unknown manifest fields: {sorted(unknown)}")
        kw = dict(data)
        base = Path(base_dir) if base_dir else None
        for name in ("cache_dir", "prompts", "out"):
            if kw.get(name) is not None and base is not None and not Path(kw[name]).is_absolute():
                kw[name] = base / kw[name]
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ManifestInvalid(f"manifest is missing fields: {exc}") from exc

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ManifestInvalid(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ManifestInvalid("manifest must be a JSON object")
        return cls.from_json(data, path.parent)


class ResponseCache:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def path(self, key: str) -> Path:
        return self.root / key[:2] / key[2:4] / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        try:
            entry = json.loads(self.path(key).read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, ValueError) as exc:
            log.warning("unreadable cache entry %s: %s", key, exc)
            return None
        return entry if isinstance(entry, dict) and "raw_output" in entry else None

    def put(self, key: str, prompt_id: str, raw_output: str) -> None:
        target = self.path(key)
        target.parent.mkdir(parents=True, exist_ok=True)
        entry = {"key": key, "prompt_id": prompt_id, "raw_output": raw_output, "timestamp": time.time()}
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{key[:8]}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, ensure_ascii=False)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise


@dataclass
class RunSummary:
    total: int = 0
    hits: int = 0
    misses: int = 0
    failures: int = 0
    requests: int = 0
    failed_ids: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _check_rows(rows: list[dict], manifest: RunManifest) -> None:
    for i, row in enumerate(rows):
        if "id" not in row or not isinstance(row.get("prompt"), str):
            raise ManifestInvalid(f"prompt row {i} needs an id and a string prompt")
        for name in ("variant", "strategy", "sr_kind"):
            if name in row and row[name] != getattr(manifest, name):
                raise ManifestInvalid(
                    f"prompt row {row['id']} has {name}={row[name]!r}, manifest says {getattr(manifest, name)!r}"
                )


def run_batch(
    prompts: Iterable[Mapping],
    manifest: RunManifest,
    generate: Optional[Callable[[str], str]] = None,
) -> tuple[list[dict], RunSummary]:
    """Answer every prompt row, in input order.

    ``generate`` defaults to the endpoint client built from the manifest.
    Returns response rows ``{"id","key","raw_output","from_cache","error"}``
    and a summary with hit, miss and failure counts.
    """
    rows = [dict(r) for r in prompts]
    _check_rows(rows, manifest)
    manifest.ensure_cache_dir()
    cache = ResponseCache(manifest.cache_dir)
    keys = [cache_key(r["prompt"], manifest.model_name, manifest.temperature) for r in rows]
    summary = RunSummary(total=len(rows))

    cached: dict[str, dict] = {}
    todo: dict[str, tuple[str, str]] = {}
    for row, key in zip(rows, keys):
        if key in cached or key in todo:
            continue
        entry = cache.get(key)
        if entry is not None:
            cached[key] = entry
        else:
            todo[key] = (str(row["id"]), row["prompt"])

    client = None
    if generate is None and todo:
        limits = httpx.Limits(max_connections=manifest.max_parallel, max_keepalive_connections=manifest.max_parallel)
        client = httpx.Client(limits=limits)
        config = manifest.refiner_config()

        def generate(prompt: str) -> str:
            return endpoint_generate(prompt, config, client=client)

    def work(item: tuple[str, tuple[str, str]]) -> tuple[str, Optional[str], Optional[str]]:
        key, (prompt_id, prompt) = item
        try:
            out = generate(prompt)
        except Exception as exc:  # recorded per row, never raised
            return key, None, f"{type(exc).__name__}: {exc}"
        cache.put(key, prompt_id, out)
        return key, out, None

    fresh: dict[str, tuple[Optional[str], Optional[str]]] = {}
    try:
        with ThreadPoolExecutor(max_workers=manifest.max_parallel) as pool:
            for key, out, err in pool.map(work, todo.items()):
                fresh[key] = (out, err)
    finally:
        if client is not None:
            client.close()
    summary.requests = len(todo)

    out_rows = []
    for row, key in zip(rows, keys):
        if key in cached:
            summary.hits += 1
            out_rows.append(
                {"id": row["id"], "key": key, "raw_output": cached[key]["raw_output"], "from_cache": True, "error": None}
            )
            continue
        summary.misses += 1
        raw, err = fresh[key]
        if err is not None:
            summary.failures += 1
            summary.failed_ids.append(row["id"])
        out_rows.append({"id": row["id"], "key": key, "raw_output": raw, "from_cache": False, "error": err})
    return out_rows, summary


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except ValueError as exc:
                    raise ValueError(f"{path}:{n}: not JSON ({exc})") from exc
    return out


def write_jsonl(rows: Iterable[Mapping], path: Union[str, Path, None] = None) -> str:
    text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
