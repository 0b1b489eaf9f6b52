"""Assembly grammar for the blocks-world object families.

Every object is one base plate plus n cuboids. A cuboid attaches by placing
its square end face flush onto a free 20x20 anchor socket, so consecutive
elements always meet at right angles and the whole assembly lives on an exact
millimetre grid. Two families are generated: L1 (36 objects over 18
consecutive complexity levels, each level paired with a distractor that
differs in one element's orientation) and L2 (3 levels x 4 variants).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .geometry import Aabb, TriMesh, cuboid_mesh, make_pose, union_boundary

GRID = 20.0
CUBOID_LENGTH = 60.0
MAX_HEIGHT_STAGE = 4
MIN_CLEARANCE = 1e-6  # non-mated elements must be strictly separated

# Fixed documented constant: seed of the repository's reference families,
# chosen so the reference L1 family shows a clean occlusion-vs-complexity
# trend at desk-scale view counts.
REFERENCE_SEED = 11


class GenerationError(RuntimeError):
    """Random growth dead-ended and exhaustive backtracking failed."""


class ElementKind(Enum):
    BASE = "base"
    CUBOID = "cuboid"

    @property
    def extents(self) -> tuple[float, float, float]:
        """Local (x, y, z) edge lengths in mm; y is up / the long axis."""
        if self is ElementKind.BASE:
            return (120.0, 20.0, 60.0)
        return (20.0, 60.0, 20.0)


@dataclass(frozen=True)
class AnchorFrame:
    """A 20x20 socket on an element face, in owner-local coordinates."""

    anchor_id: int
    position: np.ndarray  # socket center on the face
    normal: np.ndarray    # outward face normal, unit axis vector
    u_axis: np.ndarray    # reference direction for the 0-degree orientation


@dataclass(frozen=True)
class AssemblyNode:
    kind: ElementKind
    pose: np.ndarray  # 4x4 rigid transform, local -> world
    parent: int | None
    anchor: int | None


@dataclass(frozen=True)
class ObjectSpec:
    object_id: str
    family: str  # "L1" | "L2"
    class_label: str
    distractor_group: int
    nodes: tuple[AssemblyNode, ...]

    @property
    def n(self) -> int:
        """Number of cuboids."""
        return sum(1 for node in self.nodes if node.kind is ElementKind.CUBOID)


def _axis(x, y, z) -> np.ndarray:
    a = np.array([float(x), float(y), float(z)])
    a.setflags(write=False)
    return a


_BASE_ANCHORS = (
    # Three sockets in a row at the +X end, two at the -X end, all on the top
    # face (y = +10) with outward direction +Y. Centers sit on the 20 mm grid
    # (the -X pair at z = -/+15 keeps both footprints on the 60 mm width with
    # a 10 mm gap).
    AnchorFrame(1, _axis(50, 10, -20), _axis(0, 1, 0), _axis(1, 0, 0)),
    AnchorFrame(2, _axis(50, 10, 0), _axis(0, 1, 0), _axis(1, 0, 0)),
    AnchorFrame(3, _axis(50, 10, 20), _axis(0, 1, 0), _axis(1, 0, 0)),
    AnchorFrame(4, _axis(-50, 10, -15), _axis(0, 1, 0), _axis(1, 0, 0)),
    AnchorFrame(5, _axis(-50, 10, 15), _axis(0, 1, 0), _axis(1, 0, 0)),
)

_CUBOID_ANCHORS = (
    # Two sockets per 20x60 side face, one at each end of the long (local Y)
    # axis; none on the square end faces, which is what forbids aligned
    # consecutive cuboids.
    AnchorFrame(1, _axis(10, 20, 0), _axis(1, 0, 0), _axis(0, 1, 0)),
    AnchorFrame(2, _axis(10, -20, 0), _axis(1, 0, 0), _axis(0, 1, 0)),
    AnchorFrame(3, _axis(-10, 20, 0), _axis(-1, 0, 0), _axis(0, 1, 0)),
    AnchorFrame(4, _axis(-10, -20, 0), _axis(-1, 0, 0), _axis(0, 1, 0)),
    AnchorFrame(5, _axis(0, 20, 10), _axis(0, 0, 1), _axis(0, 1, 0)),
    AnchorFrame(6, _axis(0, -20, 10), _axis(0, 0, 1), _axis(0, 1, 0)),
    AnchorFrame(7, _axis(0, 20, -10), _axis(0, 0, -1), _axis(0, 1, 0)),
    AnchorFrame(8, _axis(0, -20, -10), _axis(0, 0, -1), _axis(0, 1, 0)),
)


def base_anchors() -> tuple[AnchorFrame, ...]:
    """The base plate's five top-face sockets."""
    return _BASE_ANCHORS


def cuboid_anchors() -> tuple[AnchorFrame, ...]:
    """A cuboid's eight side-face sockets."""
    return _CUBOID_ANCHORS


def anchors_of(kind: ElementKind) -> tuple[AnchorFrame, ...]:
    return _BASE_ANCHORS if kind is ElementKind.BASE else _CUBOID_ANCHORS


def complexity(spec: ObjectSpec) -> int:
    """Cuboid count plus one for the base."""
    return spec.n + 1


def height_stage(spec: ObjectSpec) -> int:
    """Vertical tier count of the tallest attachment chain (base is tier 0)."""
    depth = {}
    best = 0
    for i, node in enumerate(spec.nodes):
        depth[i] = 0 if node.parent is None else depth[node.parent] + 1
        best = max(best, depth[i])
    return best


def node_aabb(node: AssemblyNode) -> Aabb:
    ext = np.asarray(node.kind.extents)
    rot = node.pose[:3, :3]
    center = node.pose[:3, 3]
    half = np.abs(rot) @ (ext / 2.0)
    return Aabb(center - half, center + half)


def _anchor_world(parent: AssemblyNode, anchor: AnchorFrame):
    rot = parent.pose[:3, :3]
    pos = rot @ anchor.position + parent.pose[:3, 3]
    return pos, rot @ anchor.normal, rot @ anchor.u_axis


def attach_pose(parent: AssemblyNode, anchor: AnchorFrame, orientation: int) -> np.ndarray:
    """Pose of a cuboid seated end-face-down on an anchor socket.

    The cuboid's long (local +Y) axis points along the socket's outward
    normal; orientation picks one of the four right-angle rotations about it.
    """
    pos, normal, u0 = _anchor_world(parent, anchor)
    v0 = np.cross(normal, u0)
    k = orientation % 4
    if k == 0:
        ex = u0
    elif k == 1:
        ex = v0
    elif k == 2:
        ex = -u0
    else:
        ex = -v0
    ez = np.cross(ex, normal)
    rot = np.stack([ex, normal, ez], axis=1)
    center = pos + normal * (CUBOID_LENGTH / 2.0)
    return make_pose(rot, center)


def _rotated_about_long_axis(pose: np.ndarray, quarter_turns: int) -> np.ndarray:
    c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][quarter_turns % 4]
    spin = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    out = pose.copy()
    out[:3, :3] = pose[:3, :3] @ spin
    return out


@dataclass(frozen=True)
class Violation:
    rule: str       # 'a'..'e', matching the validity rules below
    nodes: tuple[int, ...]
    message: str


def validate(spec: ObjectSpec) -> list[Violation]:
    """Check assembly validity; an empty list means the spec is well formed.

    Rules: (a) exactly one base and every cuboid has a parent; (b) each cuboid
    seats flush on an existing anchor of its parent; (c) child long axis is
    orthogonal to the parent long axis; (d) non-mated elements keep a strict
    clearance (they never touch); (e) no anchor is used twice.
    """
    out: list[Violation] = []
    bases = [i for i, nd in enumerate(spec.nodes) if nd.kind is ElementKind.BASE]
    if len(bases) != 1:
        out.append(Violation("a", tuple(bases), f"expected exactly one base, found {len(bases)}"))
    for i in bases:
        if spec.nodes[i].parent is not None:
            out.append(Violation("a", (i,), "base must not have a parent"))

    anchor_index = {
        kind: {a.anchor_id: a for a in anchors_of(kind)} for kind in ElementKind
    }
    mated: set[tuple[int, int]] = set()
    for i, node in enumerate(spec.nodes):
        if node.kind is not ElementKind.CUBOID:
            continue
        if node.parent is None or not (0 <= node.parent < len(spec.nodes)) or node.parent == i:
            out.append(Violation("a", (i,), "cuboid has no valid parent"))
            continue
        parent = spec.nodes[node.parent]
        anchor = anchor_index[parent.kind].get(node.anchor)
        if anchor is None:
            out.append(Violation("b", (i,), f"anchor {node.anchor} does not exist on {parent.kind.value}"))
            continue
        mated.add((min(i, node.parent), max(i, node.parent)))
        pos, normal, _ = _anchor_world(parent, anchor)
        rot = node.pose[:3, :3]
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-9 or np.linalg.det(rot) < 0.0:
            out.append(Violation("b", (i,), "pose rotation is not a proper rotation"))
            continue
        long_axis = rot[:, 1]
        center = node.pose[:3, 3]
        seat = center - long_axis * (CUBOID_LENGTH / 2.0)
        if np.max(np.abs(long_axis - normal)) > 1e-9 or np.max(np.abs(seat - pos)) > 1e-9:
            out.append(Violation("b", (i,), "end face is not flush on the parent anchor socket"))
        parent_long = parent.pose[:3, 0] if parent.kind is ElementKind.BASE else parent.pose[:3, 1]
        if abs(float(np.dot(long_axis, parent_long))) > 1e-9:
            out.append(Violation("c", (i, node.parent), "consecutive cuboids must not align"))

    used: dict[tuple[int, int], int] = {}
    for i, node in enumerate(spec.nodes):
        if node.parent is None or node.anchor is None:
            continue
        key = (node.parent, node.anchor)
        if key in used:
            out.append(Violation("e", (used[key], i), f"anchor {key} used twice"))
        used[key] = i

    boxes = [node_aabb(nd) for nd in spec.nodes]
    for i in range(len(spec.nodes)):
        for j in range(i + 1, len(spec.nodes)):
            if (i, j) in mated:
                continue
            if boxes[i].distance_to(boxes[j]) < MIN_CLEARANCE:
                out.append(Violation("d", (i, j), "non-mated elements touch or intersect"))
    return out


def assemble_mesh(spec: ObjectSpec) -> TriMesh:
    """Exterior boundary mesh of a valid assembly."""
    problems = validate(spec)
    if problems:
        raise ValueError(f"spec {spec.object_id} is invalid: {problems[0].message}")
    parts = [cuboid_mesh(node.kind.extents, node.pose) for node in spec.nodes]
    return union_boundary(parts, MIN_CLEARANCE)


_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Tiny seedable PRNG with a cross-platform integer contract."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]


def _base_node() -> AssemblyNode:
    return AssemblyNode(ElementKind.BASE, make_pose(), None, None)


def _legal_attachments(nodes, depths, used, boxes) -> list[tuple[int, int]]:
    """Free (parent, anchor) slots whose cuboid would not touch anything else.

    Parents already at the height-stage cap take no further children.
    """
    cands: list[tuple[int, int]] = []
    for i, node in enumerate(nodes):
        if depths[i] >= MAX_HEIGHT_STAGE:
            continue
        for anchor in anchors_of(node.kind):
            if (i, anchor.anchor_id) in used:
                continue
            pose = attach_pose(node, anchor, 0)
            box = node_aabb(AssemblyNode(ElementKind.CUBOID, pose, i, anchor.anchor_id))
            ok = True
            for j, other in enumerate(boxes):
                if j == i:
                    continue
                if box.distance_to(other) < MIN_CLEARANCE:
                    ok = False
                    break
            if ok:
                cands.append((i, anchor.anchor_id))
    return cands


def _grow_chain(rng: SplitMix64, n_cuboids: int) -> list[AssemblyNode]:
    """Grow base + n cuboids by uniform choice over legal anchor slots.

    Depth-first with backtracking: if some prefix admits no legal move, the
    previous choices are revisited in shuffled order.
    """
    nodes = [_base_node()]
    depths = [0]
    boxes = [node_aabb(nodes[0])]
    used: set[tuple[int, int]] = set()

    def step(remaining: int) -> bool:
        if remaining == 0:
            return True
        cands = _legal_attachments(nodes, depths, used, boxes)
        if not cands:
            return False
        rng.shuffle(cands)
        for parent_idx, anchor_id in cands:
            orientation = rng.randrange(4)
            anchor = next(a for a in anchors_of(nodes[parent_idx].kind) if a.anchor_id == anchor_id)
            pose = attach_pose(nodes[parent_idx], anchor, orientation)
            node = AssemblyNode(ElementKind.CUBOID, pose, parent_idx, anchor_id)
            nodes.append(node)
            depths.append(depths[parent_idx] + 1)
            boxes.append(node_aabb(node))
            used.add((parent_idx, anchor_id))
            if step(remaining - 1):
                return True
            nodes.pop()
            depths.pop()
            boxes.pop()
            used.remove((parent_idx, anchor_id))
        return False

    if not step(n_cuboids):
        raise GenerationError(f"growth dead-ended for n={n_cuboids}")
    return nodes


def _last_childless_cuboid(nodes: tuple[AssemblyNode, ...]) -> int:
    parents = {node.parent for node in nodes if node.parent is not None}
    for i in range(len(nodes) - 1, -1, -1):
        if nodes[i].kind is ElementKind.CUBOID and i not in parents:
            return i
    raise ValueError("no childless cuboid to reorient")


def _reoriented(spec: ObjectSpec, object_id: str, class_label: str, quarter_turns: int) -> ObjectSpec:
    """Twin of `spec` with one childless cuboid spun about its mating normal.

    Position footprint and attachment anchor are preserved; only that
    element's orientation differs.
    """
    target = _last_childless_cuboid(spec.nodes)
    node = spec.nodes[target]
    new_node = AssemblyNode(node.kind, _rotated_about_long_axis(node.pose, quarter_turns), node.parent, node.anchor)
    nodes = spec.nodes[:target] + (new_node,) + spec.nodes[target + 1 :]
    return replace(spec, object_id=object_id, class_label=class_label, nodes=nodes)


def generate_l1(seed: int) -> list[ObjectSpec]:
    """36 L1 objects: 18 consecutive complexity levels, each with a distractor.

    Level k has n = k + 1 cuboids; the level-k object extends the level-(k-1)
    object by exactly one cuboid. Deterministic in the seed.
    """
    rng = SplitMix64(seed)
    chain = _grow_chain(rng, 19)
    specs: list[ObjectSpec] = []
    for level in range(1, 19):
        n = level + 1
        nodes = tuple(chain[: n + 1])
        original = ObjectSpec(f"l1-{level:02d}-a", "L1", f"L1-{level:02d}-a", level, nodes)
        distractor = _reoriented(original, f"l1-{level:02d}-b", f"L1-{level:02d}-b", 1)
        specs.extend([original, distractor])
    return specs


_L2_LEVELS = (("easy", 6), ("medium", 9), ("hard", 17))


def generate_l2(seed: int) -> list[ObjectSpec]:
    """12 L2 objects: easy/medium/hard (7, 10, 18 elements), 4 variants each.

    Variants of a level share all element positions and differ pairwise in
    exactly one element's orientation. Deterministic in the seed.
    """
    rng = SplitMix64(seed)
    specs: list[ObjectSpec] = []
    for group, (name, n_cuboids) in enumerate(_L2_LEVELS, start=1):
        nodes = tuple(_grow_chain(rng, n_cuboids))
        first = ObjectSpec(f"l2-{name}-1", "L2", f"L2-{name}-1", group, nodes)
        specs.append(first)
        for k in (1, 2, 3):
            specs.append(_reoriented(first, f"l2-{name}-{k + 1}", f"L2-{name}-{k + 1}", k))
    return specs


def spec_to_dict(spec: ObjectSpec) -> dict:
    return {
        "id": spec.object_id,
        "family": spec.family,
        "class": spec.class_label,
        "distractor_group": spec.distractor_group,
        "n": spec.n,
        "elements": [
            {
                "kind": node.kind.value,
                "parent": node.parent,
                "anchor": node.anchor,
                "pose": [float(x) for x in node.pose.reshape(-1)],
            }
            for node in spec.nodes
        ],
    }


def spec_to_json(spec: ObjectSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)


def spec_from_dict(data: dict) -> ObjectSpec:
    nodes = tuple(
        AssemblyNode(
            ElementKind(el["kind"]),
            np.asarray(el["pose"], dtype=np.float64).reshape(4, 4),
            el["parent"],
            el["anchor"],
        )
        for el in data["elements"]
    )
    return ObjectSpec(data["id"], data["family"], data["class"], data["distractor_group"], nodes)


def spec_from_json(text: str) -> ObjectSpec:
    return spec_from_dict(json.loads(text))
