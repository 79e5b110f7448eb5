"""Bundled benchmark networks.

Both fixtures are reconstructions of public benchmark topologies, shipped
so the experiment harness runs offline:

* ``nsfnet.json``: the 14-node, 21-arc NSFNET T1 backbone. The original
  is undirected with no travel times; arc directions and the near-unit
  times here are artifacts of this package (see the file's comment).
* ``siouxfalls_net.tntp``: the 24-node, 76-arc Sioux Falls network with
  the standard free-flow travel times from the Transportation Networks
  for Research repository. Only the tail/head/free-flow-time columns are
  faithful; the parser ignores the rest.
"""

from importlib.resources import files

from .graph import Network, load_network


def fixture_path(name: str) -> str:
    return str(files("odtomo") / "data" / name)


def nsfnet() -> Network:
    return load_network(fixture_path("nsfnet.json"))


def sioux_falls() -> Network:
    return load_network(fixture_path("siouxfalls_net.tntp"))
