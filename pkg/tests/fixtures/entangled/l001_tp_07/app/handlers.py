class Handler:
    name = "handler"
    retries = 2

    def handle(self, event):
        return event
