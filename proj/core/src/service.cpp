#include "punk/service.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "punk/error.hpp"

namespace punk {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) {
  return {status, body.dump(), "application/json"};
}

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

std::size_t parse_count(const std::map<std::string, std::string>& query,
                        const std::string& key, std::size_t fallback) {
  auto it = query.find(key);
  if (it == query.end() || it->second.empty()) return fallback;
  std::size_t value = 0;
  std::size_t used = 0;
  try {
    const long long v = std::stoll(it->second, &used);
    if (v < 0 || used != it->second.size()) throw std::invalid_argument(key);
    value = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError(key + " must be a non-negative integer");
  }
  return value;
}

json annotation_or_null(const std::optional<AnnotationRecord>& r) {
  return r ? to_json(*r) : json(nullptr);
}

}  // namespace

ApiResponse AnnotationApi::list_problems(const std::map<std::string, std::string>& query) const {
  try {
    std::optional<LabelStatus> wanted;
    if (auto it = query.find("status"); it != query.end() && !it->second.empty()) {
      wanted = parse_label_status(it->second);
    }
    const std::size_t offset = parse_count(query, "offset", 0);
    const std::size_t limit = std::min<std::size_t>(parse_count(query, "limit", 50), 1000);
    json items = json::array();
    std::size_t matched = 0;
    for (const auto& p : corpus_.problems()) {
      const LabelStatus status = store_.status(p.id);
      if (wanted && status != *wanted) continue;
      if (matched >= offset && items.size() < limit) {
        items.push_back({{"id", p.id},
                         {"status", to_string(status)},
                         {"revision", store_.revision(p.id)},
                         {"split", to_string(p.split)},
                         {"sentences", p.sentences.size()}});
      }
      ++matched;
    }
    return json_response(200, {{"total", matched},
                               {"offset", offset},
                               {"limit", limit},
                               {"items", items}});
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  }
}

ApiResponse AnnotationApi::get_problem(const std::string& id) const {
  if (!corpus_.has_problem(id)) return error_response(404, "no problem " + id);
  const Problem& p = corpus_.problem(id);
  json sentences = json::array();
  for (const auto& s : p.sentences) {
    sentences.push_back(
        {{"index", s.index}, {"text", s.text}, {"start", s.span.start}, {"end", s.span.end}});
  }
  auto record = store_.get(id);
  return json_response(200, {{"id", p.id},
                             {"text", p.text},
                             {"sentences", sentences},
                             {"tags", p.concept_tags},
                             {"split", to_string(p.split)},
                             {"status", to_string(store_.status(id))},
                             {"annotation", annotation_or_null(record)},
                             {"revision", record ? record->revision : 0}});
}

ApiResponse AnnotationApi::put_annotation(const std::string& id, const std::string& body) {
  if (!corpus_.has_problem(id)) return error_response(404, "no problem " + id);
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  std::vector<AnnotationSpan> spans;
  bool unclear = false;
  long revision = 0;
  try {
    if (!j.is_object() || !j.contains("revision")) {
      throw ValidationError("body must be an object with a revision");
    }
    revision = j.at("revision").get<long>();
    unclear = j.value("unclear", false);
    for (const auto& s : j.value("spans", json::array())) {
      spans.push_back({s.at("sentence_index").get<int>(), s.at("char_start").get<std::size_t>(),
                       s.at("char_end").get<std::size_t>(), ""});
    }
  } catch (const json::exception& e) {
    return error_response(422, std::string("bad annotation body: ") + e.what());
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  }
  try {
    AnnotationRecord r = store_.put(id, std::move(spans), unclear, revision);
    return json_response(200, to_json(r));
  } catch (const ConflictError& e) {
    return json_response(409, {{"error", e.what()}, {"revision", store_.revision(id)}});
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  }
}

ApiResponse AnnotationApi::export_annotations() const {
  std::ostringstream out;
  write_annotations(store_.snapshot(), out);
  return {200, out.str(), "application/x-ndjson"};
}

ApiResponse AnnotationApi::progress() const {
  Progress p = store_.progress();
  return json_response(200, {{"total", p.total},
                             {"labeled", p.labeled},
                             {"unclear", p.unclear},
                             {"unlabeled", p.unlabeled}});
}

struct AnnotationServer::Impl {
  AnnotationApi& api;
  ServeOptions options;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  Impl(AnnotationApi& a, ServeOptions o) : api(a), options(std::move(o)) {}
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationApi& api, ServeOptions options)
    : impl_(std::make_unique<Impl>(api, std::move(options))) {
  auto& s = impl_->server;
  AnnotationApi* a = &impl_->api;
  s.Get("/api/problems", [a](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    reply(res, a->list_problems(query));
  });
  s.Get(R"(/api/problems/([^/]+))", [a](const httplib::Request& req, httplib::Response& res) {
    reply(res, a->get_problem(req.matches[1]));
  });
  s.Put(R"(/api/problems/([^/]+)/annotation)",
        [a](const httplib::Request& req, httplib::Response& res) {
          reply(res, a->put_annotation(req.matches[1], req.body));
        });
  s.Get("/api/export", [a](const httplib::Request&, httplib::Response& res) {
    reply(res, a->export_annotations());
  });
  s.Get("/api/progress", [a](const httplib::Request&, httplib::Response& res) {
    reply(res, a->progress());
  });
  if (impl_->options.static_dir) {
    if (!s.set_mount_point("/", impl_->options.static_dir->string())) {
      throw Error("static directory " + impl_->options.static_dir->string() + " not found");
    }
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start() {
  auto& s = impl_->server;
  if (impl_->options.port == 0) {
    impl_->port = s.bind_to_any_port(impl_->options.host);
  } else if (s.bind_to_port(impl_->options.host, impl_->options.port)) {
    impl_->port = impl_->options.port;
  } else {
    impl_->port = -1;
  }
  if (impl_->port < 0) {
    throw Error("cannot bind " + impl_->options.host + ":" +
                std::to_string(impl_->options.port));
  }
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return impl_->port;
}

void AnnotationServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace punk
