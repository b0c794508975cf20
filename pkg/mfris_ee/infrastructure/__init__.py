# Infrastructure layer modules
