import sys

from airflowsim.cli import main

sys.exit(main())
