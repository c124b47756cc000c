def sql_query(q):
    return run(q)

def run(q, retries=1):
    return q
