# Load config first to initialize environment variables
import config

from cli.commands import main

if __name__ == "__main__":
    main()
