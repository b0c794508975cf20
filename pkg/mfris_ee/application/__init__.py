# Application layer modules
