"""JSON loaders for systems, representations and isometry families.

Every loader raises :class:`InputError` carrying a dotted location such
as ``generators.a.basis[2].source`` so the CLI can point at the culprit.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import boundary as bd
from . import covariance as cv
from . import hilbmod as hm
from . import kgraph as kg
from . import psys
from . import qlo
from . import scalars as sc


class InputError(ValueError):
    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
        self.message = message


def read_json(source, what: str = "input"):
    """Parse a path, a JSON string or an already-parsed object."""
    if isinstance(source, (dict, list)):
        return source
    text = str(source)
    where = what
    if not text.lstrip().startswith(("{", "[")):
        where = text
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise InputError(what, f"cannot read file {where}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}:{exc.lineno}:{exc.colno}", exc.msg) from None


def _at(loc, fn, *args):
    try:
        return fn(*args)
    except InputError as exc:
        raise InputError(f"{loc}.{exc.location}" if exc.location else loc, exc.message) from None
    except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
        msg = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        raise InputError(loc, msg) from None


def load_monoid(obj, loc="monoid") -> qlo.Monoid:
    return _at(loc, qlo.parse_monoid, obj)


def load_bimodule(obj, loc="bimodule") -> hm.Bimodule:
    return _at(loc, hm.Bimodule.from_json, obj)


def load_kgraph(source, loc="kgraph") -> kg.KGraph:
    if isinstance(source, str) and not source.lstrip().startswith("{"):
        corpus = {g.name: g for g in kg.load_corpus()}
        if source in corpus:
            return corpus[source]
    obj = read_json(source, loc)
    return _at(loc, kg.KGraph.from_json, obj)


def load_system(source) -> psys.ProductSystem:
    """A system from JSON, or the shorthands ``lex`` and ``kgraph:<name>``."""
    if isinstance(source, str) and source in ("lex", "counterexample"):
        return psys.lex_counterexample()
    if isinstance(source, str) and source.startswith("kgraph:"):
        return psys.from_kgraph(load_kgraph(source[7:], "system"))
    obj = read_json(source, "system")
    if not isinstance(obj, dict):
        raise InputError("system", "expected a JSON object")
    if "builtin" in obj:
        kind = obj["builtin"]
        if kind in ("lex_counterexample", "counterexample"):
            return psys.lex_counterexample()
        if kind == "kgraph":
            src = obj.get("graph") or obj.get("file") or obj.get("name")
            if src is None:
                raise InputError("system", "kgraph builtin needs 'graph', 'file' or 'name'")
            return psys.from_kgraph(load_kgraph(src, "system.graph"))
        if kind in ("trivial", "trivial_CP"):
            return psys.trivial_system(load_monoid(obj.get("monoid"), "system.monoid"))
        if kind == "tensor_power":
            return psys.tensor_power_system(load_bimodule(obj.get("bimodule"), "system.bimodule"))
        raise InputError("system.builtin", f"unknown builtin {kind!r}")
    m = load_monoid(obj.get("monoid"), "system.monoid")
    if "vertices" not in obj:
        raise InputError("system", "missing field 'vertices'")
    gens = {}
    for g, b in obj.get("generators", {}).items():
        b = dict(b)
        b.setdefault("vertices", obj["vertices"])
        gens[g] = load_bimodule(b, f"system.generators.{g}")
    flips = {}
    for n, f in enumerate(obj.get("flips", [])):
        loc = f"system.flips[{n}]"
        pair = _at(loc + ".pair", lambda: tuple(f["pair"]))
        if len(pair) != 2:
            raise InputError(loc + ".pair", "expected two generators")
        flips[pair] = _at(loc + ".matrix", sc.parse_matrix, f["matrix"])
    gens = {_gen(m, g, "system.generators"): X for g, X in gens.items()}
    flips = {(_gen(m, a, "system.flips"), _gen(m, b, "system.flips")): M for (a, b), M in flips.items()}
    return _at("system", psys.WordSystem, m, obj["vertices"], gens, flips)


def _gen(m, g, loc):
    for x in m.generators:
        if str(x) == str(g):
            return x
    raise InputError(loc, f"unknown generator {g!r}")


def load_representation(source, ps: psys.ProductSystem) -> cv.Representation:
    obj = read_json(source, "rep")
    if "dim" not in obj:
        raise InputError("rep", "missing field 'dim'")
    dim = obj["dim"]
    psi_e = {v: _at(f"rep.psi_e.{v}", sc.parse_matrix, M) for v, M in obj.get("psi_e", {}).items()}
    gens = {}
    for g, imgs in obj.get("generators", {}).items():
        if isinstance(imgs, dict):
            gens[g] = {lab: _at(f"rep.generators.{g}.{lab}", sc.parse_matrix, M) for lab, M in imgs.items()}
        else:
            gens[g] = [_at(f"rep.generators.{g}[{n}]", sc.parse_matrix, M) for n, M in enumerate(imgs)]
    fibres = {}
    for p, imgs in obj.get("fibres", {}).items():
        q = _at(f"rep.fibres.{p}", ps.monoid.parse, p)
        fibres[q] = [_at(f"rep.fibres.{p}[{n}]", sc.parse_matrix, M) for n, M in enumerate(imgs)]
    return _at("rep", cv.Representation, ps, dim, psi_e, gens, fibres)


def load_family(source):
    obj = read_json(source, "family")
    return _at("family", bd.IsometryFamily.from_json, obj)


def dump(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, indent=2, sort_keys=False, default=str)


def monoid_to_json(m):
    if isinstance(m, qlo.GridNk):
        return f"n{m.k}"
    if isinstance(m, qlo.LexZxZ):
        return "lex"
    return m.to_json()


def system_to_json(ps: psys.WordSystem) -> dict:
    """Inverse of :func:`load_system` for word systems."""
    gens = {}
    for g, X in ps.generators.items():
        obj = X.to_json()
        obj.pop("vertices")
        gens[str(g)] = obj
    flips = [{"pair": [str(a), str(b)], "matrix": sc.dump_matrix(M)} for (a, b), M in ps.flips.items()]
    return {"monoid": monoid_to_json(ps.monoid), "vertices": list(ps.vertices),
            "generators": gens, "flips": flips}


def representation_to_json(rep: cv.Representation) -> dict:
    return {"dim": rep.dim,
            "psi_e": {str(v): sc.dump_matrix(M) for v, M in rep.psi_e.items()},
            "generators": {str(g): [sc.dump_matrix(M) for M in imgs] for g, imgs in rep.generators.items()}}
