# Block grids: the 11x11x9 build zone, transforms, connectivity, ray queries.
#
# Run: python3 demos/01_grids_and_transforms.py

from buildzone import (
    Grid,
    connected_components,
    raycast,
    rotate_y90,
    translate_xz,
)

# A grid is a dense (y, x, z) int8 tensor; cells hold 0 (air) or a color 1..6.
g = Grid()
g.set(5, 0, 5, 3)  # red block at the center of the floor
g.set(5, 1, 5, 3)  # another on top
g.set(7, 0, 5, 1)  # blue block two cells east
print("blocks:", g.block_list())
print("nonzero:", g.nonzero_count)

# Horizontal transforms: 90-degree rotation about the zone center and
# translation with drop-at-edge semantics.
r = rotate_y90(g)
print("rotated blocks:", r.block_list())
assert rotate_y90(rotate_y90(rotate_y90(r))) == g  # 4 turns = identity

moved = translate_xz(g, 4, 0)
print("shifted +4x:", moved.block_list())
print("shifted off the edge drops blocks:", translate_xz(g, 11, 0).nonzero_count)

# Connectivity is 6-neighbor face adjacency; diagonal contact is separate.
comps = connected_components(g)
print("components:", [sorted(c) for c in comps])

# Rays walk cell boundaries in order: aim down onto the stack from above.
hit = raycast(g, origin=(5.5, 6.0, 5.5), direction=(0.0, -1.0, 0.0), reach=10.0)
print("ray hit:", hit)
assert hit.cell == (5, 1, 5) and hit.face == "+y"

# A ray into empty space lands on the ground plane inside the zone.
ground = raycast(Grid(), (5.5, 1.6, 5.5), (0.0, -1.0, 0.0), 3.0)
print("ground hit:", ground)
