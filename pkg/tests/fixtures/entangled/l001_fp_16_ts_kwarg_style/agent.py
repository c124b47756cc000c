build(name="x", instruction="Extract entities from the text.")
