from .backend import ROLES, DEFAULT_MODEL, ChatOptions, ChatBackend
from .scripted import ScriptedBackend
from .rules import MALFORMED_RESPONSE, GROUND_TRUTH, RuleBasedBackend
from .http import (
    DEFAULT_ENDPOINT, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL, classify_error,
    HttpBackend
)
