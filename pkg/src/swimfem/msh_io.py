"""Reader for Gmsh MSH ASCII v2.2 files (triangles + tagged line elements)."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .mesh import (DIRICHLET_INFLOW, DIRICHLET_WALL, NEUMANN_OUTFLOW, SWIMMER,
                   BoundaryTag, Mesh, MeshError)


class MshFormatError(MeshError):
    """Malformed or unsupported MSH content."""


def _kind_from_name(name: str) -> tuple[str, int | None]:
    lowered = name.lower()
    m = re.match(r"swimmer(\d*)", lowered)
    if m:
        return SWIMMER, int(m.group(1) or 0)
    if "inflow" in lowered or "inlet" in lowered:
        return DIRICHLET_INFLOW, None
    if "outflow" in lowered or "outlet" in lowered or "neumann" in lowered:
        return NEUMANN_OUTFLOW, None
    return DIRICHLET_WALL, None


def _read_sections(text: str) -> dict[str, list[str]]:
    sections = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if line.startswith("$") and not line.startswith("$End"):
            name = line[1:]
            body = []
            i += 1
            while i < len(lines) and lines[i].strip() != f"$End{name}":
                body.append(lines[i].strip())
                i += 1
            if i >= len(lines):
                raise MshFormatError(f"section {name} is not terminated")
            sections[name] = body
        i += 1
    return sections


def load_msh(path) -> Mesh:
    """Load an MSH ASCII v2.2 mesh with physical names.

    Only 2-node lines (boundary edges) and 3-node triangles are accepted;
    line elements must reference named physical groups, which become the
    boundary tags.
    """
    text = Path(path).read_text()
    sections = _read_sections(text)

    if "MeshFormat" not in sections:
        raise MshFormatError("missing $MeshFormat section")
    fmt = sections["MeshFormat"][0].split()
    if not fmt or not fmt[0].startswith("2.2") or fmt[1] != "0":
        raise MshFormatError(f"unsupported MSH format {' '.join(fmt[:2])}, need ASCII 2.2")

    phys_names: dict[int, str] = {}
    for line in sections.get("PhysicalNames", [])[1:]:
        parts = line.split(maxsplit=2)
        if len(parts) < 3:
            continue
        phys_names[int(parts[1])] = parts[2].strip().strip('"')

    if "Nodes" not in sections or "Elements" not in sections:
        raise MshFormatError("missing $Nodes or $Elements section")

    node_lines = sections["Nodes"]
    n_nodes = int(node_lines[0])
    ids = np.empty(n_nodes, dtype=np.int64)
    coords = np.empty((n_nodes, 2), dtype=float)
    for k, line in enumerate(node_lines[1:1 + n_nodes]):
        parts = line.split()
        ids[k] = int(parts[0])
        coords[k] = (float(parts[1]), float(parts[2]))
    id_map = {int(i): k for k, i in enumerate(ids)}

    tris = []
    edge_list = []
    edge_phys = []
    elem_lines = sections["Elements"]
    n_elems = int(elem_lines[0])
    for line in elem_lines[1:1 + n_elems]:
        parts = [int(x) for x in line.split()]
        etype = parts[1]
        ntags = parts[2]
        tags = parts[3:3 + ntags]
        nodes = parts[3 + ntags:]
        if etype == 2:
            tris.append([id_map[n] for n in nodes])
        elif etype == 1:
            phys = tags[0] if tags else 0
            if phys not in phys_names:
                raise MshFormatError(
                    f"line element references physical group {phys} with no name")
            edge_list.append([id_map[n] for n in nodes])
            edge_phys.append(phys)
        elif etype == 15:
            continue  # isolated point elements are harmless
        else:
            raise MshFormatError(f"unsupported element type {etype} (only 1 and 2)")

    if not tris:
        raise MshFormatError("no triangles in file")
    cells = np.asarray(tris, dtype=np.int64)
    # normalize to CCW
    p0 = coords[cells[:, 0]]
    e1 = coords[cells[:, 1]] - p0
    e2 = coords[cells[:, 2]] - p0
    flip = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]

    tags = []
    tag_index = {}
    for phys in sorted({p for p in edge_phys}):
        name = phys_names[phys]
        kind, body = _kind_from_name(name)
        tag_index[phys] = len(tags)
        tags.append(BoundaryTag(name, kind, body=body))

    edges = np.asarray(edge_list, dtype=np.int64)
    tag_ids = np.asarray([tag_index[p] for p in edge_phys], dtype=np.int64)

    # orient each boundary edge so its cell lies on the left
    oriented = {}
    for tri in cells:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            oriented[(int(min(a, b)), int(max(a, b)))] = (int(a), int(b))
    fixed = []
    for a, b in edges:
        key = (int(min(a, b)), int(max(a, b)))
        if key in oriented:
            fixed.append(oriented[key])
        else:
            fixed.append((int(a), int(b)))  # orphan; validation will reject it
    edges = np.asarray(fixed, dtype=np.int64)

    return Mesh(coords, cells, edges, tag_ids, tuple(tags))
