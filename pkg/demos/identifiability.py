"""Run the three identifiability checkers on every preset scenario."""
from grom3 import SCENARIOS, check_theorem1, check_theorem2, check_theorem3, preset_scenario
from grom3.errors import GroupTooSmall

for name in SCENARIOS:
    m = preset_scenario(name)
    strict = check_theorem1(m).satisfied
    try:
        generic_tables = check_theorem2(m).satisfied
    except GroupTooSmall:
        generic_tables = False
    generic_dims = check_theorem3(m.dims, m.s).satisfied
    print(f"{name:8s} strict {str(strict):5s}  generic(tables) {str(generic_tables):5s}  "
          f"generic(dimensions) {generic_dims}")
