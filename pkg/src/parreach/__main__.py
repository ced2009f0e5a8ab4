import sys

from .cli import bench, main

if len(sys.argv) > 1 and sys.argv[1] == "bench":
    sys.exit(bench(sys.argv[2:]))
sys.exit(main(sys.argv[1:]))
