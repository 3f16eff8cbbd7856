import orjson
import pytest

from providers.storage.local_io import dumps, make_header, parse_document, read_document
from services.atlas.app.core.exceptions import ParseError
from services.atlas.app.schemas.graph import GraphDocument
from workers.network.planar_network import network_to_document


def test_header_first_and_sorted(series2):
    doc = network_to_document(series2).model_copy(update={"header": make_header({"a": 1}, 7)})
    data = orjson.loads(dumps(doc))
    keys = list(data)
    assert keys[0] == "header"
    assert keys[1:] == sorted(keys[1:])
    assert data["header"]["seed"] == 7
    assert data["header"]["config"]["solver_tol"] == 1e-10


def test_parse_error_reports_line():
    text = '{\n  "vertices": 2,\n  "darts": "nope"\n}\n'
    with pytest.raises(ParseError) as info:
        parse_document(text, GraphDocument)
    assert info.value.line == 3


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        read_document(tmp_path / "absent.json", GraphDocument)
