"""coedit: a workbench comparing OT and sequence-CRDT co-editing engines
behind one replica contract, with a deterministic session simulator,
puzzle searches, benchmarks, and a live websocket relay."""

__version__ = "0.1.0"
