from src.base.doc import Tag, TagEnum


class Tags(TagEnum):
    COST = Tag(name="Cost", description="Per-client communication and computation of each algorithm")
    COVERAGE = Tag(name="Coverage", description="Rounds needed to see a fraction of the clients")
    EXPERIMENT = Tag(name="Experiment", description="Federated runs on synthetic features")
