from .beliefs import *
from .config import *
from .equilibrium import *
from .market import *
from .metrics import *
from .outcome import *
from .schedule import *
from .server import *
from .user import *
