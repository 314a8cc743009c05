#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "punk/annotation_store.hpp"
#include "punk/corpus.hpp"

namespace punk {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Transport-independent handlers of the annotation HTTP API. Errors come
// back as {"error": ...} bodies with 400, 404, 409 or 422.
class AnnotationApi {
 public:
  AnnotationApi(const Corpus& corpus, AnnotationStore& store)
      : corpus_(corpus), store_(store) {}

  // GET /api/problems?status=&offset=&limit=
  ApiResponse list_problems(const std::map<std::string, std::string>& query) const;
  // GET /api/problems/{id}
  ApiResponse get_problem(const std::string& id) const;
  // PUT /api/problems/{id}/annotation
  ApiResponse put_annotation(const std::string& id, const std::string& body);
  // GET /api/export
  ApiResponse export_annotations() const;
  // GET /api/progress
  ApiResponse progress() const;

 private:
  const Corpus& corpus_;
  AnnotationStore& store_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

// HTTP front end for AnnotationApi running on a background thread.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationApi& api, ServeOptions options);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds and starts serving; returns the bound port.
  int start();
  // Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace punk
