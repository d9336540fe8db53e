from os import environ

from dotenv import load_dotenv

from src.base.app import create_fastapi_app
from src.base.config import Config
from src.fed3r.doc import Tags
from src.fed3r.endpoint.main import main_router as router_fed3r
from src.fed3r.service_initializer import Fed3RServiceInitializer

load_dotenv(".env")
config = Config(environ)

app = create_fastapi_app(
    config=config,
    initializer=Fed3RServiceInitializer,
    title="Fed3R Simulator",
    description="Federated closed-form ridge classifiers on frozen features: costs, client coverage and experiments",
    version="0.1.0",
    team_name="fed3r",
    routers=[router_fed3r],
    openapi_tags=Tags.get_docs(),
)
