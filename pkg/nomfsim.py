"""
NOMFsim reproduces in software the non-overlap median filter (NOMF) for
event-based binary images, together with a behavioral model of the SRAM
in-memory-computing array that executes it, its cost model and a
tracker-based quality evaluation.

This file is the launcher script; the same entry point is installed as the
`nomfsim` console script.

"""

import sys

from nomfsim.main import main

if __name__ == '__main__':
    sys.exit(main())
