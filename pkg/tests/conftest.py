import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))
sys.set_int_max_str_digits(0)

# fixed example database and derandomized search keep CI runs identical
settings.register_profile("ci", derandomize=True, deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

GOLDEN = Path(__file__).parent / "golden"
