import pytest

from ppcorf._io import atomic_write


def test_interrupted_write_leaves_target_untouched(tmp_path):
    p = tmp_path / "out.txt"
    p.write_text("old")
    with pytest.raises(RuntimeError):
        with atomic_write(p, "w") as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert p.read_text() == "old"
    assert [q.name for q in tmp_path.iterdir()] == ["out.txt"]


def test_creates_parent_dirs(tmp_path):
    p = tmp_path / "a" / "b" / "c.bin"
    with atomic_write(p) as fh:
        fh.write(b"\x00\x01")
    assert p.read_bytes() == b"\x00\x01"
