"""Wavefront OBJ overlay of a solid, its fences and lit facets (inspection only)."""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from geometry_core import Facet, GridComplex, OrthoPolyhedron, Point3, plane_axes

logger = logging.getLogger(__name__)

MATERIALS = {
    'surface': (0.8, 0.8, 0.8),
    'fence': (0.9, 0.3, 0.1),
    'lit': (1.0, 0.9, 0.2),
}


def _corners(grid: GridComplex, facet: Facet) -> List[Point3]:
    lo, hi = grid.facet_box(facet)
    u, v = plane_axes(facet[0])
    corners = []
    for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
        p = list(lo)
        p[u] = hi[u] if du else lo[u]
        p[v] = hi[v] if dv else lo[v]
        corners.append(tuple(p))
    return corners


class ObjWriter:
    """Accumulates facet quads per material group and emits them as triangles"""

    def __init__(self, grid: GridComplex):
        self.grid = grid
        self.vertex_index: Dict[Point3, int] = {}
        self.groups: Dict[str, List[Tuple[int, int, int]]] = {}

    def _vertex(self, p: Point3) -> int:
        if p not in self.vertex_index:
            self.vertex_index[p] = len(self.vertex_index) + 1
        return self.vertex_index[p]

    def add_facets(self, material: str, facets: Iterable[Facet]) -> None:
        if material not in MATERIALS:
            raise ValueError(f"Unknown material: {material}")
        triangles = self.groups.setdefault(material, [])
        for facet in sorted(facets):
            a, b, c, d = (self._vertex(p) for p in _corners(self.grid, facet))
            triangles.append((a, b, c))
            triangles.append((a, c, d))

    def render(self, material_library: Optional[str] = None) -> str:
        out = ['# searchlight overlay']
        if material_library:
            out.append(f"mtllib {material_library}")
        for p, _ in sorted(self.vertex_index.items(), key=lambda item: item[1]):
            out.append('v ' + ' '.join(f"{float(c):.6g}" for c in p))
        for material in MATERIALS:
            if material not in self.groups:
                continue
            out.append(f"g {material}")
            out.append(f"usemtl {material}")
            out.extend(f"f {a} {b} {c}" for a, b, c in self.groups[material])
        return '\n'.join(out) + '\n'


def material_library() -> str:
    out = []
    for name, (r, g, b) in MATERIALS.items():
        out.append(f"newmtl {name}")
        out.append(f"Kd {r} {g} {b}")
    return '\n'.join(out) + '\n'


def to_obj(P: OrthoPolyhedron, fences: Sequence[Facet] = (), lit: Optional[Set[Facet]] = None,
           material_library_name: Optional[str] = None) -> str:
    """Boundary facets as 'surface', fence facets as 'fence', lit non-fence facets as 'lit'"""
    writer = ObjWriter(P.grid)
    writer.add_facets('surface', P.grid.boundary_facets())
    fence_set = set(fences)
    if fence_set:
        writer.add_facets('fence', fence_set)
    if lit:
        writer.add_facets('lit', set(lit) - fence_set)
    logger.debug("OBJ overlay: %d vertices", len(writer.vertex_index))
    return writer.render(material_library_name)


def write_obj(path: str, P: OrthoPolyhedron, fences: Sequence[Facet] = (),
              lit: Optional[Set[Facet]] = None) -> str:
    """Write the overlay and a sibling .mtl file; returns the OBJ path"""
    mtl_path = path[:-4] + '.mtl' if path.endswith('.obj') else path + '.mtl'
    mtl_name = mtl_path.replace('\\', '/').rsplit('/', 1)[-1]
    with open(path, 'w', encoding='utf-8') as f:
        f.write(to_obj(P, fences, lit, mtl_name))
    with open(mtl_path, 'w', encoding='utf-8') as f:
        f.write(material_library())
    logger.info("Wrote %s", path)
    return path
