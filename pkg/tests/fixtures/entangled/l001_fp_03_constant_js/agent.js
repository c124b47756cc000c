const PROMPT = 'Answer in one paragraph.';
module.exports = { PROMPT };
