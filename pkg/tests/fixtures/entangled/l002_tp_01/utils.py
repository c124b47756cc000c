def chunk(items, size=10):
    return [items[i:i + size] for i in range(0, len(items), size)]
