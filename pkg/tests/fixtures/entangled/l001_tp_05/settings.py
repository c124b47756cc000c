TIMEOUT = 30
RETRIES = 3
LOG_LEVEL = "info"
