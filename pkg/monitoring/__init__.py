# Health checks
