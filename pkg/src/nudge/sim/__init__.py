from .config import AgentProfile, SimConfig, load_config
from .generator import generate_corpus

__all__ = ["AgentProfile", "SimConfig", "generate_corpus", "load_config"]
