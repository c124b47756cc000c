user = UserProxyAgent(
    "user",
    is_termination_msg=lambda m: "TERMINATE" in m["content"],
)
