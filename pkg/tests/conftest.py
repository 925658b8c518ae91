import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

# fixed example streams so a failure seen once is seen on every run
settings.register_profile("repo", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repo")
