"""Deterministic on-disk container for intermediate image stacks.

A stage artifact is a stored (uncompressed) zip holding meta.json plus
one .npy entry per image. Zip timestamps are pinned to a fixed epoch so
identical content always produces identical bytes, which np.savez cannot
guarantee.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .errors import ArtifactFormatError

SCHEMA = 1
_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


def save_image_stack(path: str | Path, images: dict[str, np.ndarray], meta: dict) -> None:
    meta_doc = dict(meta)
    meta_doc["schema"] = SCHEMA
    meta_doc["entries"] = sorted(images)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=_FIXED_DATE)
        zf.writestr(info, json.dumps(meta_doc, indent=2, sort_keys=True))
        for name in sorted(images):
            buffer = io.BytesIO()
            np.lib.format.write_array(buffer, np.ascontiguousarray(images[name]))
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_FIXED_DATE)
            zf.writestr(info, buffer.getvalue())


def load_image_stack(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        with zipfile.ZipFile(path) as zf:
            with zf.open("meta.json") as f:
                meta = json.load(f)
            if meta.get("schema") != SCHEMA:
                raise ArtifactFormatError(
                    f"unsupported artifact schema {meta.get('schema')!r} in {path}"
                )
            images = {}
            for name in meta["entries"]:
                with zf.open(f"{name}.npy") as f:
                    images[name] = np.lib.format.read_array(f)
    except (KeyError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise ArtifactFormatError(f"cannot read image stack {path}: {exc}") from exc
    return images, meta
