from qcut.cli import main

raise SystemExit(main())
