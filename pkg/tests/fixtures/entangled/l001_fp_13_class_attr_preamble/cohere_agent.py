class Drafter:
    preamble = PREAMBLE_TEXT

    def run(self):
        pass
