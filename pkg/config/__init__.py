# Configuration directory for the polymatrix toolkit (optional settings.json)
