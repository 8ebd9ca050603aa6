# Task generation, the single-block subtask scanner, and skill labels.
#
# Run: python3 demos/05_tasks_and_skills.py

from buildzone import Grid, generate_task, label_skills, next_subtask
from buildzone.tasks import apply_subtask

# Seeded random growth: connected, ground-attached, colorful.
task = generate_task(seed=4, n_blocks=12, max_height=5, n_colors=4)
print(task.task_id, "->", task.instruction)
print("skills:", task.skills)
print("target blocks:", task.target_grid.block_list())

# The subtask scanner walks (y, x, z) and emits one add or remove at a time;
# wrong blocks come out before missing ones go in.
current = Grid.from_blocks([[0, 0, 0, 6]])  # one stray block to clean up
order = []
while (st := next_subtask(current, task.target_grid)) is not None:
    order.append(st)
    apply_subtask(current, st)
print("first three subtasks:", order[:3])
print("total subtasks to converge:", len(order))
assert current == task.target_grid

# Skill labels describe what a target demands of the builder.
fixtures = {
    "ground row": Grid.from_blocks([[x, 0, 5, 1] for x in range(3, 8)]),
    "floating block": Grid.from_blocks([[5, 3, 5, 2]]),
    "five tower": Grid.from_blocks([[5, y, 5, 3] for y in range(5)]),
}
cube = [[x, y, z, 1] for x in range(3) for y in range(3) for z in range(3)]
cube[13] = [1, 1, 1, 4]
fixtures["hidden center"] = Grid.from_blocks(cube)
for name, grid in fixtures.items():
    print(f"{name:16s} -> {label_skills(grid)}")
