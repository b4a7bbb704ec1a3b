# Rate limiting and security headers
