class SupportBot:
    system_message = "Be concise and friendly."
    temperature = 0.1

    def reply(self, text):
        return text
