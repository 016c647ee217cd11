// Local stand-in for a zero-shot classification endpoint. Each candidate
// label scores by how many of its cue words occur in the text.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "depsev/text.hpp"
#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::map<std::string, std::set<std::string>> load_cues(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read cues file " + path);
  std::map<std::string, std::set<std::string>> cues;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("cue line without tab: " + line);
    cues[depsev::text::to_lower(line.substr(0, tab))].insert(
        depsev::text::to_lower(line.substr(tab + 1)));
  }
  return cues;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stub zero-shot classification server"};
  std::string host = "127.0.0.1";
  int port = 0;
  std::string cues_path;
  int fail_first = 0;
  std::string path = "/classify";
  app.add_option("--host", host);
  app.add_option("--port", port, "0 picks a free port");
  app.add_option("--cues", cues_path, "TSV: label<TAB>cue word")->required();
  app.add_option("--fail-first", fail_first, "Answer the first N requests with 503");
  app.add_option("--path", path);
  CLI11_PARSE(app, argc, argv);

  const auto cues = load_cues(cues_path);
  std::atomic<int> failures_left{fail_first};

  httplib::Server server;
  server.Post(path, [&](const httplib::Request& req, httplib::Response& res) {
    if (failures_left.fetch_sub(1) > 0) {
      res.status = 503;
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("text") || !body.contains("candidate_labels")) {
      res.status = 400;
      return;
    }
    const auto lowered = depsev::text::to_lower(body["text"].get<std::string>());
    const auto tokens = depsev::text::split_whitespace(lowered);
    json labels = json::array();
    std::vector<double> weights;
    double total = 0;
    for (const auto& l : body["candidate_labels"]) {
      const auto name = l.get<std::string>();
      double w = 0.1;
      if (auto it = cues.find(depsev::text::to_lower(name)); it != cues.end()) {
        for (const auto& t : tokens) w += it->second.count(std::string(t));
      }
      labels.push_back(name);
      weights.push_back(w);
      total += w;
    }
    json scores = json::array();
    for (double w : weights) scores.push_back(w / total);
    res.set_content(json{{"labels", labels}, {"scores", scores}}.dump(), "application/json");
  });

  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  const int bound = port == 0 ? server.bind_to_any_port(host)
                              : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    std::fprintf(stderr, "cannot bind %s:%d\n", host.c_str(), port);
    return 2;
  }
  g_server = &server;
  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);
  std::printf("listening on %s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  server.listen_after_bind();
  return 0;
}
