# Logs directory for the polymatrix toolkit
