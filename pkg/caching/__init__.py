# Caching of preset certificates
