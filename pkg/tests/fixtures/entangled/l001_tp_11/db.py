def connect(url, pool_size=5, echo=False):
    return (url, pool_size, echo)
