from pathlib import Path

import pytest

from treeprune.exceptions import FrontendError
from treeprune.frontend import build_page, page_from_document, page_system, parse_html
from treeprune.frontend.html import SourceText
from treeprune.guards import Atom
from treeprune.saturation import AnalysisOptions, analyze_system


def page_statuses(path: Path) -> dict[str, str]:
    page = build_page(path)
    analysis = analyze_system(page_system(page), AnalysisOptions(threads=1))
    by_name = {v.query: v.status for v in analysis.verdicts}
    return {e.text: by_name[name] for name, e in page.queries()}


class TestExamplePage:
    def test_build(self, fixtures_dir: Path) -> None:
        page = build_page(fixtures_dir / "example.html")
        assert page.source == "example.html"
        assert len(page.tree) == 11
        assert len(page.rules) == 4
        assert len(page.warnings) == 2
        assert [e.text for e in page.selectors] == [".warn"]
        assert {"div", "input", "a"} <= page.tags

    def test_system(self, fixtures_dir: Path) -> None:
        system = page_system(build_page(fixtures_dir / "example.html"))
        assert system.queries == (("q1", Atom(".warn")),)
        assert system.initial == build_page(fixtures_dir / "example.html").tree
        assert ".warn" in system.classes

    @pytest.mark.parametrize("name, status", [("example.html", "reachable"), ("example-up.html", "redundant")])
    def test_verdict(self, fixtures_dir: Path, name: str, status: str) -> None:
        assert page_statuses(fixtures_dir / name) == {".warn": status}


class TestSitePages:
    def test_selectors_carry_their_source_line(self, fixtures_dir: Path) -> None:
        page = build_page(fixtures_dir / "site" / "index.html")
        assert len(page.selectors) == 12
        assert len(page.supported) == 11
        by_text = {e.text: e.source for e in page.selectors}
        assert by_text["body"] == "site.css:1"
        assert by_text[".legacy-footer"] == "site.css:7"

    def test_index(self, fixtures_dir: Path) -> None:
        statuses = page_statuses(fixtures_dir / "site" / "index.html")
        redundant = {s for s, status in statuses.items() if status == "redundant"}
        assert redundant == {".sidebar .ad", ".legacy-footer", "#contact-form .error", ".modal.open"}
        assert sum(status == "reachable" for status in statuses.values()) == 7

    def test_contact(self, fixtures_dir: Path) -> None:
        statuses = page_statuses(fixtures_dir / "site" / "contact.html")
        reachable = {s for s, status in statuses.items() if status == "reachable"}
        assert reachable == {"body", ".nav a", ".nav a:hover", "#contact-form .error", ".nav"}
        assert sum(status == "redundant" for status in statuses.values()) == 6

    def test_warnings(self, fixtures_dir: Path) -> None:
        page = build_page(fixtures_dir / "site" / "index.html")
        assert any("stripped :hover" in w for w in page.warnings)
        assert any("unsupported selector 'input[type=\"text\"]'" in w for w in page.warnings)


class TestExtraCss:
    def test_extra_stylesheet(self, tmp_path: Path) -> None:
        html = tmp_path / "p.html"
        html.write_text("<body><p class='x'></p></body>", encoding="utf-8")
        css = tmp_path / "extra.css"
        css.write_text(".x { color: red }\n.y { color: blue }\n", encoding="utf-8")
        page = build_page(html, [css])
        assert [(e.source, e.text) for e in page.selectors] == [("extra.css:1", ".x"), ("extra.css:2", ".y")]

    def test_missing_extra_stylesheet(self, tmp_path: Path) -> None:
        html = tmp_path / "p.html"
        html.write_text("<p></p>", encoding="utf-8")
        with pytest.raises(FrontendError, match="Cannot read"):
            build_page(html, [tmp_path / "gone.css"])

    def test_page_from_document(self) -> None:
        doc = parse_html("<body><div></div></body>", "inline.html")
        page = page_from_document(doc, [SourceText("s.css", "div { margin: 0 }")])
        assert [name for name, _ in page.queries()] == ["q1"]
        assert page.rules == []


class TestAssumedHtmlVariables:
    BODY = """<body><div id="host" class="a"></div><span class="b"></span>
<script>$('#host').append(make());</script></body>"""
    CSS = "div.b { color: red }\n.a .a.b { color: blue }\nspan.a { color: green }\n"

    def statuses(self, assume: bool) -> dict[str, str]:
        doc = parse_html(self.BODY, "vars.html")
        page = page_from_document(doc, [SourceText("s.css", self.CSS)], assume_html_variables=assume)
        analysis = analyze_system(page_system(page), AnalysisOptions(threads=1))
        by_name = {v.query: v.status for v in analysis.verdicts}
        return {e.text: by_name[name] for name, e in page.queries()}

    def test_compound_selectors_become_reachable(self) -> None:
        assert self.statuses(True) == {"div.b": "reachable", ".a .a.b": "reachable", "span.a": "reachable"}

    def test_without_assumption_nothing_is_added(self) -> None:
        assert self.statuses(False) == {"div.b": "redundant", ".a .a.b": "redundant", "span.a": "redundant"}
