const port = 8080;
function start(server) {
  server.listen(port);
}
module.exports = { start };
