"""python -m shrinklab"""
import sys

# Local Imports
from shrinklab.main import run

sys.exit(run())
