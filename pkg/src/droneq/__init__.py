"""Drone mission planning as MILP and QUBO, plus a permutation-subspace TSP simulator."""
from importlib import resources

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Path of a bundled instance file, e.g. data_path("toy_mission.json")."""
    return str(resources.files(__package__) / "data" / name)
