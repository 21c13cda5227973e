from .exceptions import *
from .sid import ScenarioId, SID
from .deadline import deadline, checkpoint, remaining
