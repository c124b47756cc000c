agent = create_agent(
    tools=[search],
    system_prompt=PROMPT,
)
