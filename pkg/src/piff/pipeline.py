"""End-to-end helpers shared by the command line and the tests."""

from __future__ import annotations

from typing import Optional

from piff.bisim import Quotient, reduce
from piff.frontend import load_model
from piff.frontend.validate import CheckedModel
from piff.idtmc import PolyMatrix, build_matrix
from piff.labels import assign_labels, parse_label_file
from piff.translator import Translation, translate


def matrix_of(tr: Translation) -> PolyMatrix:
    """The matrix of a translation, with each state's component state attached."""
    M = build_matrix(tr.spec)
    M.origin = {z: [o] for z, o in tr.origin_json().items()}
    return M


def compile_source(source: str, prune: bool = True,
                   consts: Optional[dict] = None) -> tuple[CheckedModel, Translation, PolyMatrix]:
    model = load_model(source, consts)
    tr = translate(model, prune=prune)
    return model, tr, matrix_of(tr)


def compile_file(path: str, prune: bool = True) -> tuple[CheckedModel, Translation, PolyMatrix]:
    with open(path) as fh:
        return compile_source(fh.read(), prune)


def reduce_with(M: PolyMatrix, label_text: str, prefix: str = "Q") -> Quotient:
    labels = assign_labels(M, parse_label_file(label_text))
    return reduce(M, labels, prefix=prefix)
