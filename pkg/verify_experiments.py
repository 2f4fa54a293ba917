import logging
import os
import sys
import tempfile
import traceback

# Add project root to path
sys.path.append(os.getcwd())

from modules.config_loader import parse_config
from modules.runner import EXPERIMENT_MODULES, run

CONFIG_DIR = "configs"


def verify_experiment(name, config_path, out_root):
    print(f"\nTesting {name} ({config_path})...")
    try:
        config = parse_config(config_path)
        record = run(config, os.path.join(out_root, os.path.splitext(os.path.basename(config_path))[0]))
        if record.error:
            print(f"❌ {name}: {record.error['type']}: {record.error['message']}")
            return False

        print(f"✅ {name}: Processed successfully ({record.timings['total']:.1f}s)")
        print(f"   - Outputs: {sorted(record.outputs)}")
        for check, passed in record.checks.items():
            print(f"   - {'✅' if passed else '❌'} {check}")
        return record.passed

    except Exception as e:
        print(f"❌ {name}: Failed with error: {e}")
        traceback.print_exc()
        return False


def main():
    logging.basicConfig(level=logging.WARNING)
    presets = sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith(".cfg"))
    results = {}
    with tempfile.TemporaryDirectory() as out_root:
        for preset in presets:
            path = os.path.join(CONFIG_DIR, preset)
            problem = parse_config(path).problem
            if problem not in EXPERIMENT_MODULES:
                print(f"⚠️ {preset}: problem '{problem}' is not registered")
                continue
            results[preset] = verify_experiment(problem, path, out_root)

    missing = set(EXPERIMENT_MODULES) - {parse_config(os.path.join(CONFIG_DIR, p)).problem for p in presets}
    if missing:
        print(f"\n⚠️ No preset for: {', '.join(sorted(missing))}")

    passed = sum(results.values())
    print(f"\n{passed}/{len(results)} presets passed")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
