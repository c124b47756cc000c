from crewai import Agent

analyst = Agent(role="Analyst", goal="Find trends", backstory="Ten years in finance.")
