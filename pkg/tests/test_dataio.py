import struct

import numpy as np
import pytest

from adscreen.chat import parse_transcript
from adscreen.dataio import (
    generate_synthetic_corpus,
    load_compare_csv,
    load_manifest,
    read_wav_duration,
)
from adscreen.errors import (
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


def write_manifest(tmp_path, rows, header=None):
    header = header or (
        "subject_id,transcript_path,acoustic_csv_path,audio_path,"
        "duration_s,label,mmse,group_id"
    )
    path = tmp_path / "manifest.csv"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def touch_subject_files(tmp_path, sid):
    (tmp_path / f"{sid}.cha").write_text("*PAR:\thi .\n", encoding="utf-8")
    (tmp_path / f"{sid}.csv").write_text("name;f0\n'x';1.0\n", encoding="utf-8")


class TestManifest:
    def test_round_trip(self, tmp_path):
        touch_subject_files(tmp_path, "s1")
        path = write_manifest(
            tmp_path, ["s1,s1.cha,s1.csv,,62.5,AD,21,fam1"]
        )
        manifest = load_manifest(path)
        assert len(manifest) == 1
        row = manifest.rows[0]
        assert row.subject_id == "s1"
        assert row.transcript_path == tmp_path / "s1.cha"
        assert row.duration_s == 62.5
        assert row.label == "AD"
        assert row.mmse == 21
        assert row.group_id == "fam1"

    def test_group_defaults_to_subject(self, tmp_path):
        touch_subject_files(tmp_path, "s1")
        manifest = load_manifest(
            write_manifest(tmp_path, ["s1,s1.cha,s1.csv,,10,CN,,"])
        )
        assert manifest.rows[0].group_id == "s1"
        assert manifest.rows[0].mmse is None

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ManifestFileNotFound):
            load_manifest(tmp_path / "nope.csv")

    def test_missing_required_column(self, tmp_path):
        path = write_manifest(
            tmp_path, ["s1,a.cha"], header="subject_id,transcript_path"
        )
        with pytest.raises(MissingColumn):
            load_manifest(path)

    def test_missing_referenced_file(self, tmp_path):
        path = write_manifest(tmp_path, ["s1,s1.cha,s1.csv,,10,,,"])
        with pytest.raises(ManifestFileNotFound):
            load_manifest(path)

    def test_duplicate_subject(self, tmp_path):
        touch_subject_files(tmp_path, "s1")
        path = write_manifest(
            tmp_path,
            ["s1,s1.cha,s1.csv,,10,,,", "s1,s1.cha,s1.csv,,10,,,"],
        )
        with pytest.raises(DuplicateSubject):
            load_manifest(path)

    def test_needs_duration_or_audio(self, tmp_path):
        touch_subject_files(tmp_path, "s1")
        path = write_manifest(tmp_path, ["s1,s1.cha,s1.csv,,,,,"])
        with pytest.raises(MissingColumn):
            load_manifest(path)

    @pytest.mark.parametrize("mmse", ["-1", "31", "twenty"])
    def test_invalid_mmse(self, tmp_path, mmse):
        touch_subject_files(tmp_path, "s1")
        path = write_manifest(tmp_path, [f"s1,s1.cha,s1.csv,,10,AD,{mmse},"])
        with pytest.raises(InvalidMmse):
            load_manifest(path)

    def test_unknown_label(self, tmp_path):
        touch_subject_files(tmp_path, "s1")
        path = write_manifest(tmp_path, ["s1,s1.cha,s1.csv,,10,MCI,,"])
        with pytest.raises(InvalidMmse):
            load_manifest(path)


def build_wav(byte_rate=32000, data_bytes=32000, magic=b"RIFF", wave=b"WAVE",
              include_fmt=True, include_data=True, extra_chunk=False):
    chunks = b""
    if extra_chunk:
        chunks += b"LIST" + struct.pack("<I", 4) + b"INFO"
    if include_fmt:
        fmt = struct.pack("<HHIIHH", 1, 1, 16000, byte_rate, 2, 16)
        chunks += b"fmt " + struct.pack("<I", len(fmt)) + fmt
    if include_data:
        chunks += b"data" + struct.pack("<I", data_bytes) + b"\x00" * data_bytes
    return magic + struct.pack("<I", 4 + len(chunks)) + wave + chunks


class TestWav:
    def test_one_second_mono16(self, tmp_path):
        # 16 kHz mono 16-bit -> byte rate 32000; 32000 data bytes = 1.0 s
        p = tmp_path / "a.wav"
        p.write_bytes(build_wav())
        assert read_wav_duration(p) == pytest.approx(1.0)

    def test_stereo_two_and_a_half_seconds(self, tmp_path):
        p = tmp_path / "b.wav"
        p.write_bytes(build_wav(byte_rate=64000, data_bytes=160000))
        assert read_wav_duration(p) == pytest.approx(2.5)

    def test_skips_unknown_chunks(self, tmp_path):
        p = tmp_path / "c.wav"
        p.write_bytes(build_wav(extra_chunk=True))
        assert read_wav_duration(p) == pytest.approx(1.0)

    def test_not_riff(self, tmp_path):
        p = tmp_path / "d.wav"
        p.write_bytes(build_wav(magic=b"RIFX"))
        with pytest.raises(NotRiff):
            read_wav_duration(p)

    def test_not_wave(self, tmp_path):
        p = tmp_path / "e.wav"
        p.write_bytes(build_wav(wave=b"AVI "))
        with pytest.raises(NotRiff):
            read_wav_duration(p)

    def test_missing_data_chunk(self, tmp_path):
        p = tmp_path / "f.wav"
        p.write_bytes(build_wav(include_data=False))
        with pytest.raises(MissingChunk):
            read_wav_duration(p)

    def test_missing_fmt_chunk(self, tmp_path):
        p = tmp_path / "g.wav"
        p.write_bytes(build_wav(include_fmt=False))
        with pytest.raises(MissingChunk):
            read_wav_duration(p)

    def test_zero_byte_rate(self, tmp_path):
        p = tmp_path / "h.wav"
        p.write_bytes(build_wav(byte_rate=0))
        with pytest.raises(ZeroByteRate):
            read_wav_duration(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "i.wav"
        p.write_bytes(b"RIFF\x00\x00")
        with pytest.raises(NotRiff):
            read_wav_duration(p)


class TestCompareCsv:
    def write(self, tmp_path, header, row):
        p = tmp_path / "f.csv"
        p.write_text(";".join(header) + "\n" + ";".join(row) + "\n", encoding="utf-8")
        return p

    def test_basic(self, tmp_path):
        p = self.write(tmp_path, ["name", "a", "b", "c"], ["'x'", "1.5", "-2", "0"])
        np.testing.assert_array_equal(
            load_compare_csv(p, expected_dim=3), [1.5, -2.0, 0.0]
        )

    def test_drops_meta_columns(self, tmp_path):
        p = self.write(
            tmp_path,
            ["name", "frameTime", "a", "b", "class"],
            ["'x'", "0.0", "3", "4", "?"],
        )
        np.testing.assert_array_equal(load_compare_csv(p, expected_dim=2), [3.0, 4.0])

    def test_wrong_dim(self, tmp_path):
        p = self.write(tmp_path, ["name", "a", "b"], ["'x'", "1", "2"])
        with pytest.raises(WrongArity):
            load_compare_csv(p, expected_dim=5)

    def test_non_numeric(self, tmp_path):
        p = self.write(tmp_path, ["name", "a", "b"], ["'x'", "1", "oops"])
        with pytest.raises(NonNumericCell):
            load_compare_csv(p, expected_dim=2)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("", encoding="utf-8")
        with pytest.raises(WrongArity):
            load_compare_csv(p, expected_dim=2)


class TestSyntheticCorpus:
    def test_deterministic(self, tmp_path):
        m1 = generate_synthetic_corpus(8, 2.0, seed=5, out_dir=tmp_path / "a",
                                       acoustic_dim=16)
        m2 = generate_synthetic_corpus(8, 2.0, seed=5, out_dir=tmp_path / "b",
                                       acoustic_dim=16)
        for r1, r2 in zip(m1, m2):
            assert r1.subject_id == r2.subject_id
            assert r1.mmse == r2.mmse
            assert r1.transcript_path.read_bytes() == r2.transcript_path.read_bytes()
            assert r1.acoustic_csv_path.read_bytes() == r2.acoustic_csv_path.read_bytes()

    def test_structure(self, tmp_path):
        manifest = generate_synthetic_corpus(10, 1.5, seed=0, out_dir=tmp_path,
                                             acoustic_dim=12)
        assert len(manifest) == 10
        labels = [r.label for r in manifest]
        assert labels.count("AD") == 5 and labels.count("CN") == 5
        for row in manifest:
            doc = parse_transcript(
                row.transcript_path.read_text(encoding="utf-8"), row.subject_id
            )
            assert any(u.speaker.name == "PAR" for u in doc.utterances)
            vec = load_compare_csv(row.acoustic_csv_path, expected_dim=12)
            assert np.all(np.isfinite(vec))
            assert 0 <= row.mmse <= 30
            assert row.duration_s > 0

    def test_separation_statistics(self, tmp_path):
        manifest = generate_synthetic_corpus(60, 3.0, seed=1, out_dir=tmp_path,
                                             acoustic_dim=8)
        sev = {"AD": [], "CN": []}
        mmse = {"AD": [], "CN": []}
        for row in manifest:
            vec = load_compare_csv(row.acoustic_csv_path, expected_dim=8)
            sev[row.label].append(vec[0])
            mmse[row.label].append(row.mmse)
        # severity (dim 0) separates classes by ~3 sigma; MMSE decreases with it
        assert np.mean(sev["AD"]) - np.mean(sev["CN"]) > 1.5
        assert np.mean(mmse["AD"]) < np.mean(mmse["CN"]) - 3.0

    def test_odd_count_rejected(self, tmp_path):
        with pytest.raises(InvalidArity):
            generate_synthetic_corpus(7, 1.0, seed=0, out_dir=tmp_path)

    def test_negative_separation_rejected(self, tmp_path):
        with pytest.raises(InvalidArity):
            generate_synthetic_corpus(4, -0.5, seed=0, out_dir=tmp_path)
