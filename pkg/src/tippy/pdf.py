"""Markdown to PDF: a self-contained PDF 1.4 writer with built-in fonts.

Layout: US-Letter 612x792 pt, 54 pt margins. Supported markdown subset:
'#'/'##'/'###' headings at 20/16/14 pt, paragraphs at 11 pt, '- ' bullets,
fenced code blocks at 10 pt Courier; everything else renders literally, one
source line per rendered line. Wrap estimate is 0.5 * font-size per character;
leading is font-size + 3 (11 pt body lines advance 14 pt).
"""

from __future__ import annotations

from dataclasses import dataclass

PAGE_WIDTH = 612
PAGE_HEIGHT = 792
MARGIN = 54
USABLE_WIDTH = PAGE_WIDTH - 2 * MARGIN
BLANK_LINE_GAP = 7

HEADING_SIZES = {1: 20, 2: 16, 3: 14}
BODY_SIZE = 11
CODE_SIZE = 10

FONT_BODY = "F1"  # Helvetica
FONT_CODE = "F2"  # Courier


@dataclass
class _Line:
    font: str
    size: int
    text: str


def render_markdown_pdf(markdown_text: str) -> bytes:
    pages = _layout(markdown_text)
    return _emit_pdf(pages)


def _layout(markdown_text: str) -> list[list[tuple]]:
    """Flow the markdown into pages of (font, size, x, y, text) runs."""
    pages: list[list[tuple]] = [[]]
    y = PAGE_HEIGHT - MARGIN
    in_code = False

    def place(line: _Line):
        nonlocal y
        leading = line.size + 3
        if y - leading < MARGIN:
            pages.append([])
            y = PAGE_HEIGHT - MARGIN
        y -= leading
        pages[-1].append((line.font, line.size, MARGIN, y, line.text))

    for raw in markdown_text.split("\n"):
        if raw.strip().startswith("```"):
            in_code = not in_code
            continue
        if in_code:
            for chunk in _wrap(raw, CODE_SIZE) or [""]:
                place(_Line(FONT_CODE, CODE_SIZE, chunk))
            continue
        if not raw.strip():
            y = max(MARGIN, y - BLANK_LINE_GAP)
            continue
        heading = _heading_level(raw)
        if heading:
            level, text = heading
            size = HEADING_SIZES[level]
            for chunk in _wrap(text, size):
                place(_Line(FONT_BODY, size, chunk))
            continue
        if raw.startswith("- "):
            for i, chunk in enumerate(_wrap(raw[2:], BODY_SIZE)):
                prefix = "• " if i == 0 else "  "
                place(_Line(FONT_BODY, BODY_SIZE, prefix + chunk))
            continue
        for chunk in _wrap(raw, BODY_SIZE):
            place(_Line(FONT_BODY, BODY_SIZE, chunk))
    return pages


def _heading_level(line: str) -> tuple[int, str] | None:
    for level in (3, 2, 1):
        marker = "#" * level + " "
        if line.startswith(marker):
            return level, line[len(marker):]
    return None


def _wrap(text: str, size: int) -> list[str]:
    """Greedy wrap at an estimated 0.5*size points per character."""
    max_chars = max(1, int(USABLE_WIDTH // (0.5 * size)))
    if len(text) <= max_chars:
        return [text] if text else []
    lines: list[str] = []
    current = ""
    for word in text.split(" "):
        while len(word) > max_chars:
            if current:
                lines.append(current)
                current = ""
            lines.append(word[:max_chars])
            word = word[max_chars:]
        if not current:
            current = word
        elif len(current) + 1 + len(word) <= max_chars:
            current += " " + word
        else:
            lines.append(current)
            current = word
    if current:
        lines.append(current)
    return lines


def _escape_pdf_text(text: str) -> str:
    out = text.replace("\\", "\\\\").replace("(", "\\(").replace(")", "\\)")
    # core fonts cover latin-1 only; anything wider degrades to '?'
    return out.encode("latin-1", errors="replace").decode("latin-1")


def _emit_pdf(pages: list[list[tuple]]) -> bytes:
    # object numbering: 1 catalog, 2 page tree, 3 Helvetica, 4 Courier,
    # then (page, content) pairs
    objects: dict[int, bytes] = {}
    page_object_ids = []
    next_id = 5
    for page in pages:
        page_id, content_id = next_id, next_id + 1
        next_id += 2
        page_object_ids.append(page_id)
        stream = _content_stream(page)
        objects[content_id] = (
            f"<< /Length {len(stream)} >>\nstream\n".encode("latin-1")
            + stream + b"\nendstream"
        )
        objects[page_id] = (
            f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {PAGE_WIDTH} {PAGE_HEIGHT}] "
            f"/Resources << /Font << /{FONT_BODY} 3 0 R /{FONT_CODE} 4 0 R >> >> "
            f"/Contents {content_id} 0 R >>"
        ).encode("latin-1")
    kids = " ".join(f"{pid} 0 R" for pid in page_object_ids)
    objects[1] = b"<< /Type /Catalog /Pages 2 0 R >>"
    objects[2] = f"<< /Type /Pages /Kids [{kids}] /Count {len(page_object_ids)} >>".encode("latin-1")
    objects[3] = b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>"
    objects[4] = b"<< /Type /Font /Subtype /Type1 /BaseFont /Courier >>"

    buf = bytearray(b"%PDF-1.4\n")
    offsets: dict[int, int] = {}
    for obj_id in sorted(objects):
        offsets[obj_id] = len(buf)
        buf += f"{obj_id} 0 obj\n".encode("latin-1")
        buf += objects[obj_id]
        buf += b"\nendobj\n"
    xref_offset = len(buf)
    count = len(objects) + 1
    buf += f"xref\n0 {count}\n".encode("latin-1")
    buf += b"0000000000 65535 f \n"
    for obj_id in sorted(objects):
        buf += f"{offsets[obj_id]:010d} 00000 n \n".encode("latin-1")
    buf += (
        f"trailer\n<< /Size {count} /Root 1 0 R >>\nstartxref\n{xref_offset}\n%%EOF"
    ).encode("latin-1")
    return bytes(buf)


def _content_stream(page: list[tuple]) -> bytes:
    parts = []
    for font, size, x, y, text in page:
        parts.append(
            f"BT /{font} {size} Tf {x} {y} Td ({_escape_pdf_text(text)}) Tj ET"
        )
    return "\n".join(parts).encode("latin-1")
