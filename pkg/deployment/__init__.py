# Deployment configurations and scripts