# Presentation layer modules
