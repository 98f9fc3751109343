import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.core.log import setup_logging  # noqa: E402
from app.synth.demo import write_demo_assets  # noqa: E402

# --- Configuration ---
ASSET_ROOT = Path("assets")
N_BACKGROUNDS = 10
N_PERSONS = 5
IMAGE_SIZE = (128, 192)
SEED = 0


def main():
    setup_logging()
    bg_dir, person_dir = write_demo_assets(ASSET_ROOT, N_BACKGROUNDS, N_PERSONS, IMAGE_SIZE, SEED)
    print(f"Backgrounds: {bg_dir}")
    print(f"Persons:     {person_dir}")
    print("Next: python -m app.main synth-mosaic --count 500 --out out")


if __name__ == "__main__":
    main()
