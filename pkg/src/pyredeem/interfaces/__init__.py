from .mechanism import *
