from enum import Enum
from typing import Any, Dict, List, Optional


class Tag:
    def __init__(self, name: str, description: Optional[str] = None, url: Optional[str] = None):
        self.name = name
        self.description = description
        self.url = url


class TagEnum(Tag, Enum):
    """
    Tags shared by routers and the OpenAPI document. Each member wraps a single Tag
    and its value is the tag name, so members can be passed to `APIRouter(tags=...)`:

    >>> class Tags(TagEnum):
    ...     COST = Tag(name="Cost", description="Per-client communication and compute")
    >>> router = APIRouter(tags=[Tags.COST])
    >>> app = FastAPI(openapi_tags=Tags.get_docs())
    """

    def __init__(self, *args, **kwargs) -> None:
        # pylint: disable=super-init-not-called
        assert len(args) == 1 and isinstance(args[0], Tag), "only_one_tag_allowed"
        assert not kwargs, "no_extra_parameters_allowed"

        self._value_ = args[0].name
        self._detail_ = args[0]

    @property
    def detail(self) -> Tag:
        return self._detail_

    @classmethod
    def get_docs(cls) -> List[Dict[str, Any]]:
        docs = []
        for item in cls:
            tag: Dict[str, Any] = {"name": item.detail.name, "description": item.detail.description}
            if item.detail.url:
                tag["externalDocs"] = {"url": item.detail.url}
            docs.append(tag)
        return docs
