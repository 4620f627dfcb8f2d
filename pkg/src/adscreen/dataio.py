"""Dataset manifests, external file formats, and the synthetic corpus.

The real screening corpora are access-restricted; the synthetic generator
produces structurally faithful CHAT transcripts, acoustic-functional CSVs,
and MMSE labels with a configurable class separation so the full pipeline
can be exercised and tested.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateSubject,
    InvalidArity,
    InvalidMmse,
    ManifestFileNotFound,
    MissingChunk,
    MissingColumn,
    NonNumericCell,
    NotRiff,
    WrongArity,
    ZeroByteRate,
)

REQUIRED_COLUMNS = ("subject_id", "transcript_path", "acoustic_csv_path")
_META_HEADERS = {"name", "frametime", "frame", "class"}


@dataclass
class ManifestRow:
    subject_id: str
    transcript_path: Path
    acoustic_csv_path: Path
    audio_path: Path | None = None
    duration_s: float | None = None
    label: str | None = None  # "AD" | "CN"
    mmse: int | None = None
    group_id: str | None = None


@dataclass
class DatasetManifest:
    rows: list[ManifestRow]
    path: Path | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def load_manifest(path) -> DatasetManifest:
    """Read and validate a manifest CSV; relative paths resolve against the
    manifest's directory and referenced files must exist."""
    path = Path(path)
    if not path.exists():
        raise ManifestFileNotFound(f"manifest not found: {path}")
    base = path.parent
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise MissingColumn(f"manifest missing required column {col!r}")
        for rec in reader:
            sid = rec["subject_id"].strip()
            if sid in seen:
                raise DuplicateSubject(f"duplicate subject_id {sid!r}")
            seen.add(sid)

            def _path(col):
                val = (rec.get(col) or "").strip()
                if not val:
                    return None
                p = Path(val)
                p = p if p.is_absolute() else base / p
                if not p.exists():
                    raise ManifestFileNotFound(f"{col} for {sid!r} not found: {p}")
                return p

            duration = (rec.get("duration_s") or "").strip()
            duration_s = float(duration) if duration else None
            audio_path = _path("audio_path")
            if duration_s is None and audio_path is None:
                raise MissingColumn(
                    f"subject {sid!r} needs audio_path or duration_s"
                )

            mmse_raw = (rec.get("mmse") or "").strip()
            mmse = None
            if mmse_raw:
                try:
                    mmse = int(mmse_raw)
                except ValueError as exc:
                    raise InvalidMmse(f"non-integer mmse for {sid!r}: {mmse_raw!r}") from exc
                if not 0 <= mmse <= 30:
                    raise InvalidMmse(f"mmse out of [0, 30] for {sid!r}: {mmse}")

            label = (rec.get("label") or "").strip() or None
            if label is not None and label not in ("AD", "CN"):
                raise InvalidMmse(f"unknown label {label!r} for {sid!r}")

            rows.append(
                ManifestRow(
                    subject_id=sid,
                    transcript_path=_path("transcript_path"),
                    acoustic_csv_path=_path("acoustic_csv_path"),
                    audio_path=audio_path,
                    duration_s=duration_s,
                    label=label,
                    mmse=mmse,
                    group_id=(rec.get("group_id") or "").strip() or sid,
                )
            )
    return DatasetManifest(rows=rows, path=path)


def read_wav_duration(path) -> float:
    """Duration from the RIFF header alone: data-chunk bytes / byte rate."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
            raise NotRiff(f"not a RIFF/WAVE file: {path}")
        byte_rate = None
        data_size = None
        while True:
            chunk_head = fh.read(8)
            if len(chunk_head) < 8:
                break
            ident, size = chunk_head[:4], struct.unpack("<I", chunk_head[4:])[0]
            if ident == b"fmt ":
                fmt = fh.read(size)
                if len(fmt) < 12:
                    raise MissingChunk(f"truncated fmt chunk: {path}")
                byte_rate = struct.unpack("<I", fmt[8:12])[0]
            elif ident == b"data":
                data_size = size
                fh.seek(size + (size & 1), 1)
            else:
                fh.seek(size + (size & 1), 1)
            if byte_rate is not None and data_size is not None:
                break
        if byte_rate is None or data_size is None:
            raise MissingChunk(f"missing fmt or data chunk: {path}")
        if byte_rate == 0:
            raise ZeroByteRate(f"fmt chunk declares zero byte rate: {path}")
        return data_size / byte_rate


def load_compare_csv(path, expected_dim: int = 6373) -> np.ndarray:
    """One subject's acoustic functionals from a semicolon-delimited CSV.

    The leading name column and any frame/class columns are dropped; the
    remaining numeric columns must number exactly expected_dim.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=";")
        try:
            header = next(reader)
            row = next(reader)
        except StopIteration as exc:
            raise WrongArity(f"expected header plus one data row: {path}") from exc
    keep = [
        j
        for j, name in enumerate(header)
        if j != 0 and name.strip().lower() not in _META_HEADERS
    ]
    if len(keep) != expected_dim:
        raise WrongArity(
            f"{path}: expected {expected_dim} feature columns, found {len(keep)}"
        )
    out = np.empty(expected_dim)
    for i, j in enumerate(keep):
        try:
            out[i] = float(row[j])
        except (ValueError, IndexError) as exc:
            raise NonNumericCell(f"{path}: bad cell in column {header[j]!r}") from exc
    return out


# --- synthetic corpus ------------------------------------------------------

_CN_WORDS = ("the boy is on the stool reaching for the cookie jar "
             "while the water overflows in the sink").split()
_FILLERS = ("&uh", "&um", "&-hm")


def _synth_transcript(rng: np.random.Generator, severity: float) -> str:
    """A CHAT file whose pause/filler/turn statistics scale with severity."""
    lines = ["@Begin", "@Languages:\teng",
             "@Participants:\tPAR Participant, INV Investigator"]
    n_par = int(rng.integers(8, 14))
    n_inv = 1 + rng.poisson(max(0.0, 0.8 + 1.2 * severity))
    inv_positions = set(rng.choice(n_par + n_inv, size=min(n_inv, n_par + n_inv - 1),
                                   replace=False).tolist())
    pause_rate = max(0.05, 0.2 + 0.6 * severity)
    filler_rate = max(0.02, 0.1 + 0.4 * severity)
    for t in range(n_par + n_inv):
        if t in inv_positions:
            lines.append("*INV:\tmhm tell me more .")
            lines.append("%com:\tprompt")
            continue
        n_words = int(rng.integers(4, 10))
        tokens = [
            _CN_WORDS[int(rng.integers(len(_CN_WORDS)))] for _ in range(n_words)
        ]
        for marker, rate in ((("(.)", "(..)", "(...)"), pause_rate),
                             (_FILLERS, filler_rate)):
            for _ in range(rng.poisson(rate * 2)):
                pos = int(rng.integers(len(tokens) + 1))
                tokens.insert(pos, marker[int(rng.integers(len(marker)))])
        if rng.random() < 0.15 + 0.3 * min(severity, 1.0):
            tokens.append("[/]")
        if rng.random() < 0.1 + 0.2 * min(severity, 1.0):
            tokens.append("xxx")
        lines.append("*PAR:\t" + " ".join(tokens) + " .")
    lines.append("@End")
    return "\n".join(lines) + "\n"


def generate_synthetic_corpus(n_subjects: int, class_separation: float, seed: int,
                              out_dir, acoustic_dim: int = 64) -> DatasetManifest:
    """Write a complete labelled corpus under out_dir and return its manifest.

    Even subject indices are controls, odd are AD. A latent severity drives
    the transcript statistics; the acoustic vectors get a class-dependent
    Gaussian mean shift of class_separation (in units of the per-column
    sigma of 1) on the first four dimensions. MMSE is an affine function of
    severity plus noise, clipped to [0, 30].
    """
    if n_subjects % 2 != 0:
        raise InvalidArity("n_subjects must be even for balanced classes")
    if class_separation < 0:
        raise InvalidArity("class_separation must be >= 0")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    manifest_rows = []
    for i in range(n_subjects):
        is_ad = i % 2 == 1
        sid = f"S{i:03d}"
        severity = rng.normal(loc=class_separation if is_ad else 0.0, scale=1.0)

        cha = _synth_transcript(rng, severity)
        cha_path = out_dir / f"{sid}.cha"
        cha_path.write_text(cha, encoding="utf-8")

        acoustic = rng.normal(size=acoustic_dim)
        acoustic[0] = severity
        for j in (1, 2, 3):
            if j < acoustic_dim:
                acoustic[j] = 0.6 * severity + rng.normal(scale=0.8)
        csv_path = out_dir / f"{sid}.csv"
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(";".join(["name"] + [f"feat{j}" for j in range(acoustic_dim)]))
            fh.write("\n")
            fh.write(";".join([f"'{sid}'"] + [repr(float(v)) for v in acoustic]))
            fh.write("\n")

        duration = float(rng.uniform(50.0, 75.0))
        mmse = int(np.clip(round(29.0 - 3.2 * severity + rng.normal(scale=1.2)), 0, 30))
        manifest_rows.append(
            {
                "subject_id": sid,
                "transcript_path": f"{sid}.cha",
                "acoustic_csv_path": f"{sid}.csv",
                "audio_path": "",
                "duration_s": repr(duration),
                "label": "AD" if is_ad else "CN",
                "mmse": str(mmse),
                "group_id": sid,
            }
        )

    manifest_path = out_dir / "manifest.csv"
    fieldnames = ["subject_id", "transcript_path", "acoustic_csv_path", "audio_path",
                  "duration_s", "label", "mmse", "group_id"]
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(manifest_rows)
    return load_manifest(manifest_path)
