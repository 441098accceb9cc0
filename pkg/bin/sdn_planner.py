#!/usr/bin/env python
"""
Layered functional / security configuration optimizer for software-defined networks

:author: Doug Skrypa
"""

import sys

from sdn_planner.cli import main

if __name__ == '__main__':
    sys.exit(main())
