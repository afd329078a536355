#include "collage/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "httplib.h"

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/pipeline.hpp"
#include "collage/preprocess.hpp"
#include "collage/util.hpp"

namespace collage {

namespace fs = std::filesystem;

ServiceOptions service_options_from_env() {
  ServiceOptions o;
  if (const char* d = std::getenv("COLLAGE_DATA_DIR"); d && *d) o.data_dir = d;
  o.default_backend = descriptor_from_env();
  return o;
}

std::pair<std::string, int> bind_address_from_env() {
  std::string addr = "127.0.0.1:8080";
  if (const char* a = std::getenv("COLLAGE_BIND_ADDR"); a && *a) addr = a;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw PreconditionError("COLLAGE_BIND_ADDR must be host:port, got '" + addr + "'");
  try {
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
  } catch (const std::exception&) {
    throw PreconditionError("COLLAGE_BIND_ADDR has an invalid port: '" + addr + "'");
  }
}

namespace {

// Field accessors that report the offending path.
const Json& require(const Json& j, const std::string& name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) throw ParseError(where + "." + name, "required field is missing");
  return j[name];
}

std::string string_field(const Json& j, const std::string& name, const std::string& where) {
  const Json& v = require(j, name, where);
  if (!v.is_string()) throw ParseError(where + "." + name, "expected a string");
  return v.get<std::string>();
}

double number_field(const Json& j, const std::string& name, const std::string& where) {
  const Json& v = require(j, name, where);
  if (!v.is_number()) throw ParseError(where + "." + name, "expected a number");
  return v.get<double>();
}

bool bool_field(const Json& j, const std::string& name, const std::string& where) {
  const Json& v = require(j, name, where);
  if (!v.is_boolean()) throw ParseError(where + "." + name, "expected true or false");
  return v.get<bool>();
}

std::optional<Json> optional_field(const Json& j, const std::string& name) {
  if (!j.is_object() || !j.contains(name) || j[name].is_null()) return std::nullopt;
  return j[name];
}

}  // namespace

SceneDocument apply_scene_op(const SceneDocument& scene, const ElementPaths& paths, const Json& op,
                             const std::string& where) {
  if (!op.is_object()) throw ParseError(where, "expected an object");
  const std::string kind = string_field(op, "op", where);
  if (kind == "place")
    return place(scene, paths, string_field(op, "element_id", where), number_field(op, "x", where),
                 number_field(op, "y", where));
  if (kind == "copy") return copy(scene, paths, string_field(op, "placement_id", where));
  if (kind == "delete") return remove(scene, string_field(op, "placement_id", where));
  if (kind == "move")
    return move(scene, string_field(op, "placement_id", where), number_field(op, "x", where), number_field(op, "y", where));
  if (kind == "scale") return scale(scene, string_field(op, "placement_id", where), number_field(op, "factor", where));
  if (kind == "flip_h") return flip_h(scene, string_field(op, "placement_id", where));
  if (kind == "rotate") return rotate(scene, string_field(op, "placement_id", where), number_field(op, "degrees", where));
  if (kind == "set_visible")
    return set_visible(scene, paths, string_field(op, "target", where), bool_field(op, "visible", where));
  if (kind == "reorder") {
    const Json& idx = require(op, "index", where);
    if (!idx.is_number_unsigned() && !(idx.is_number_integer() && idx.get<std::int64_t>() >= 0))
      throw ParseError(where + ".index", "expected a non-negative integer");
    return reorder_within_cluster(scene, paths, string_field(op, "placement_id", where), idx.get<std::size_t>());
  }
  throw ParseError(where + ".op", "unknown op '" + kind + "'");
}

namespace {

class WorkerPool {
 public:
  explicit WorkerPool(unsigned n) {
    for (unsigned i = 0; i < std::max(1u, n); ++i) threads_.emplace_back([this] { run(); });
  }
  ~WorkerPool() { shutdown(); }

  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mu_);
      tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

  void shutdown() {
    {
      std::lock_guard lock(mu_);
      if (stop_) return;
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !tasks_.empty(); });
        if (tasks_.empty()) return;
        task = std::move(tasks_.front());
        tasks_.pop_front();
      }
      task();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  std::vector<std::thread> threads_;
  bool stop_ = false;
};

// Raised inside handlers to answer with a specific status.
struct HttpError {
  int status;
  Json body;
};

bool valid_id(const std::string& id) {
  static const std::regex re("[A-Za-z0-9][A-Za-z0-9._-]{0,127}");
  return std::regex_match(id, re);
}

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json error_body(const std::string& kind, const std::string& detail) { return {{"error", kind}, {"detail", detail}}; }

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    Json j = Json::parse(req.body);
    if (!j.is_object()) throw ParseError("body", "expected a JSON object");
    return j;
  } catch (const Json::parse_error& ex) {
    throw ParseError("body", std::string("invalid JSON: ") + ex.what());
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  fs::path root;
  httplib::Server server;
  std::thread thread;
  WorkerPool prepare_pool;
  WorkerPool curate_pool;

  std::mutex mu;
  std::map<std::string, Json> jobs;
  std::uint64_t job_seq = 0;
  std::map<std::string, std::shared_ptr<std::mutex>> locks;
  std::map<std::string, std::shared_ptr<const pipeline::LoadedSession>> sessions;
  std::mutex idem_mu;

  explicit Impl(ServiceOptions o)
      : options(std::move(o)),
        root(fs::absolute(options.data_dir).lexically_normal()),
        prepare_pool(options.prepare_workers),
        curate_pool(options.curate_workers ? options.curate_workers : std::max(1u, std::thread::hardware_concurrency())) {
    for (const char* sub : {"collections", "libraries", "sessions", "jobs", "idempotency"}) fs::create_directories(root / sub);
    recover_jobs();
    install();
  }

  ~Impl() {
    stop();
    prepare_pool.shutdown();
    curate_pool.shutdown();
  }

  void stop() {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  // ---- persistence helpers

  fs::path collection_dir(const std::string& id) const { return root / "collections" / id; }
  fs::path library_dir(const std::string& id) const { return root / "libraries" / id; }
  fs::path session_dir(const std::string& id) const { return root / "sessions" / id; }

  std::shared_ptr<std::mutex> lock_for(const std::string& key) {
    std::lock_guard g(mu);
    auto& m = locks[key];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }

  void recover_jobs() {
    for (const auto& entry : fs::directory_iterator(root / "jobs")) {
      if (entry.path().extension() != ".json") continue;
      Json job;
      try {
        job = read_json_file(entry.path());
      } catch (const Error&) {
        continue;
      }
      const std::string id = job.value("job_id", entry.path().stem().string());
      const std::string state = job.value("state", "failed");
      if (state == "queued" || state == "running") {
        job["state"] = "failed";
        job["error"] = "interrupted by a service restart; submit again";
        write_json_file(entry.path(), job);
      }
      job_seq = std::max(job_seq, job.value("seq", std::uint64_t{0}));
      jobs[id] = job;
    }
  }

  std::string new_job(const std::string& kind, const Json& extra) {
    std::lock_guard g(mu);
    const std::uint64_t seq = ++job_seq;
    const std::string id = "job-" + std::to_string(seq);
    Json job = {{"job_id", id}, {"kind", kind}, {"state", "queued"}, {"progress", 0.0}, {"seq", seq},
                {"report", Json::object()}};
    for (const auto& [k, v] : extra.items()) job[k] = v;
    jobs[id] = job;
    write_json_file(root / "jobs" / (id + ".json"), job);
    return id;
  }

  void update_job(const std::string& id, const std::function<void(Json&)>& change) {
    std::lock_guard g(mu);
    Json& job = jobs.at(id);
    change(job);
    write_json_file(root / "jobs" / (id + ".json"), job);
  }

  void fail_job(const std::string& id, const std::string& stage, const std::string& detail) {
    update_job(id, [&](Json& j) {
      j["state"] = "failed";
      j["stage"] = stage;
      j["error"] = detail;
    });
  }

  std::shared_ptr<const pipeline::LoadedSession> session(const std::string& id) {
    if (!valid_id(id)) throw NotFoundError("session '" + id + "' not found");
    {
      std::lock_guard g(mu);
      auto it = sessions.find(id);
      if (it != sessions.end()) return it->second;
    }
    if (!fs::exists(session_dir(id) / "session.json")) throw NotFoundError("session '" + id + "' not found");
    auto loaded = std::make_shared<const pipeline::LoadedSession>(pipeline::load_session(session_dir(id)));
    std::lock_guard g(mu);
    return sessions.emplace(id, loaded).first->second;
  }

  BackendDescriptor backend_for(const Json& body, const std::optional<BackendDescriptor>& recorded) {
    std::optional<std::uint64_t> seed;
    if (auto s = optional_field(body, "seed")) {
      if (!s->is_number_unsigned()) throw ParseError("body.seed", "expected a non-negative integer");
      seed = s->get<std::uint64_t>();
    }
    if (auto b = optional_field(body, "backend")) {
      if (!b->is_string()) throw ParseError("body.backend", "expected \"mock\" or a URL");
      BackendDescriptor d = descriptor_from_spec(b->get<std::string>(), seed);
      check_descriptor(d);
      return d;
    }
    BackendDescriptor d = recorded ? *recorded : options.default_backend.value_or(descriptor_from_env());
    if (seed && d.kind == BackendKind::mock) d.seed = seed;
    return d;
  }

  // ---- request plumbing

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static void guarded(const httplib::Request& req, httplib::Response& res, const Handler& h) {
    try {
      h(req, res);
    } catch (const HttpError& e) {
      send(res, e.status, e.body);
    } catch (const ParseError& e) {
      Json b = error_body("invalid_request", e.what());
      b["field"] = e.field();
      send(res, 400, b);
    } catch (const PreconditionError& e) {
      send(res, 400, error_body("invalid_request", e.what()));
    } catch (const DomainError& e) {
      send(res, 400, error_body("domain_error", e.what()));
    } catch (const NotFoundError& e) {
      send(res, 404, error_body("not_found", e.what()));
    } catch (const CurationError& e) {
      Json b = error_body("backend_failure", e.what());
      b["stage"] = e.stage();
      send(res, 502, b);
    } catch (const TransportError& e) {
      Json b = error_body("backend_failure", e.what());
      b["stage"] = "backend";
      send(res, 502, b);
    } catch (const ProtocolError& e) {
      Json b = error_body("backend_failure", e.what());
      b["stage"] = "backend";
      send(res, 502, b);
    } catch (const ScoringError& e) {
      Json b = error_body("backend_failure", e.what());
      b["stage"] = "scoring";
      send(res, 502, b);
    } catch (const std::exception& e) {
      send(res, 500, error_body("internal", e.what()));
    }
  }

  // Replays the stored answer when the Idempotency-Key was seen before.
  void idempotent(const httplib::Request& req, httplib::Response& res, const Handler& h) {
    const std::string key = req.get_header_value("Idempotency-Key");
    if (key.empty()) return guarded(req, res, h);
    const fs::path record = root / "idempotency" / (hex8(fnv1a64(key)) + hex8(fnv1a64(key, 0x9e3779b97f4a7c15ULL)) + ".json");
    std::lock_guard g(idem_mu);
    if (fs::exists(record)) {
      const Json stored = read_json_file(record);
      if (stored.value("key", "") == key) {
        if (stored["method"] != req.method || stored["path"] != req.path || stored["body"] != req.body)
          return send(res, 422, error_body("idempotency_key_reused", "the key was used for a different request"));
        res.set_header("Idempotent-Replay", "true");
        res.status = stored["status"].get<int>();
        res.set_content(stored["response"].get<std::string>(), "application/json");
        return;
      }
    }
    guarded(req, res, h);
    if (res.status < 500)
      write_json_file(record, {{"key", key}, {"method", req.method}, {"path", req.path}, {"body", req.body},
                               {"status", res.status}, {"response", res.body}});
  }

  void get(const std::string& pattern, Handler h) {
    server.Get(pattern, [h = std::move(h)](const httplib::Request& req, httplib::Response& res) { guarded(req, res, h); });
  }
  void post(const std::string& pattern, Handler h) {
    server.Post(pattern, [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      idempotent(req, res, h);
    });
  }

  // ---- routes

  void install() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    get("/healthz", [this](const httplib::Request&, httplib::Response& res) { send(res, 200, health()); });

    post("/collections", [this](const httplib::Request& req, httplib::Response& res) { send(res, 201, add_collection(req)); });
    get(R"(/collections/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!valid_id(id) || !fs::exists(collection_dir(id) / "collection.json"))
        throw NotFoundError("collection '" + id + "' not found");
      send(res, 200, read_json_file(collection_dir(id) / "collection.json"));
    });
    post(R"(/collections/([^/]+)/prepare)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, 202, start_prepare(req.matches[1], parse_body(req)));
    });

    get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard g(mu);
      auto it = jobs.find(req.matches[1]);
      if (it == jobs.end()) throw NotFoundError("job '" + std::string(req.matches[1]) + "' not found");
      send(res, 200, it->second);
    });

    get(R"(/libraries/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!valid_id(id) || !fs::exists(library_dir(id) / "library.json")) throw NotFoundError("library '" + id + "' not found");
      const ElementLibrary lib = load_library(library_dir(id));
      send(res, 200, {{"library_id", lib.library_id}, {"embedding_dim", lib.embedding_dim},
                      {"elements", lib.elements.size()}, {"labels", lib.labels()}});
    });

    post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { send(res, 202, start_session(parse_body(req))); });
    get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      send(res, 200, {{"session", encode(s->session)}, {"options", read_options(s->session.session_id)}});
    });
    get(R"(/sessions/([^/]+)/presentation)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      send(res, 200, pipeline::presentation_document(*s, layout_options(s->session.session_id, req)));
    });
    get(R"(/sessions/([^/]+)/scene)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      send(res, 200, encode(read_scene(s->session.session_id)));
    });
    post(R"(/sessions/([^/]+)/scene/ops)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, scene_ops(req.matches[1], parse_body(req)));
    });
    post(R"(/sessions/([^/]+)/scene/select)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      const Json body = parse_body(req);
      const Rect r{number_field(body, "x", "body"), number_field(body, "y", "body"), number_field(body, "w", "body"),
                   number_field(body, "h", "body")};
      send(res, 200, {{"placement_ids", box_select(read_scene(s->session.session_id), s->library, r)}});
    });
    post(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, 200, export_session(req.matches[1], parse_body(req)));
    });
  }

  Json health() {
    Json backend;
    try {
      const BackendDescriptor d = options.default_backend.value_or(descriptor_from_env());
      backend = {{"backend", describe(d)}};
      BackendPtr b = make_backend(d);
      backend["embedding_dim"] = b->embedding_dim();
      backend["reachable"] = true;
    } catch (const std::exception& ex) {
      backend["reachable"] = false;
      backend["detail"] = ex.what();
    }
    Json libraries = Json::array();
    std::size_t elements = 0;
    for (const auto& entry : fs::directory_iterator(root / "libraries")) {
      if (!fs::exists(entry.path() / "library.json")) continue;
      try {
        const ElementLibrary lib = load_library(entry.path());
        elements += lib.elements.size();
        libraries.push_back({{"library_id", lib.library_id}, {"elements", lib.elements.size()}, {"labels", lib.label_index.size()}});
      } catch (const Error& ex) {
        libraries.push_back({{"library_id", entry.path().filename().string()}, {"error", ex.what()}});
      }
    }
    return {{"status", "ok"}, {"backend", backend}, {"libraries", libraries}, {"elements", elements}};
  }

  Json add_collection(const httplib::Request& req) {
    PhotoCollection c;
    if (req.is_multipart_form_data()) {
      std::string id;
      if (req.has_file("collection_id")) id = trim(req.get_file_value("collection_id").content);
      std::vector<const httplib::MultipartFormData*> files;
      for (const auto& [name, part] : req.files)
        if (!part.filename.empty()) files.push_back(&part);
      if (files.empty()) throw ParseError("files", "upload contains no files");
      std::sort(files.begin(), files.end(), [](auto* a, auto* b) { return a->filename < b->filename; });
      if (id.empty()) {
        std::string key;
        for (auto* f : files) key += f->filename + ":" + std::to_string(fnv1a64(f->content)) + ";";
        id = "col-" + hex8(fnv1a64(key));
      }
      if (!valid_id(id)) throw ParseError("collection_id", "use letters, digits, '.', '_' or '-'");
      const fs::path images = collection_dir(id) / "images";
      fs::create_directories(images);
      for (auto* f : files) {
        const std::string name = fs::path(f->filename).filename().string();
        if (!valid_id(name)) throw ParseError("files", "invalid file name '" + f->filename + "'");
        write_binary_file(images / name, std::span(reinterpret_cast<const std::uint8_t*>(f->content.data()), f->content.size()));
      }
      c = load_collection(images);
      c.collection_id = id;
    } else {
      const Json body = parse_body(req);
      const fs::path dir = string_field(body, "path", "body");
      if (!fs::is_directory(dir)) throw ParseError("body.path", "'" + dir.string() + "' is not a directory on the server");
      c = load_collection(fs::absolute(dir));
      if (auto id = optional_field(body, "collection_id")) {
        if (!id->is_string()) throw ParseError("body.collection_id", "expected a string");
        c.collection_id = id->get<std::string>();
      }
      if (!valid_id(c.collection_id)) throw ParseError("body.collection_id", "use letters, digits, '.', '_' or '-'");
    }
    if (c.images.empty()) throw ParseError("files", "the collection holds no PNG images");
    write_json_file(collection_dir(c.collection_id) / "collection.json", encode(c));
    return {{"collection_id", c.collection_id}, {"images", c.images.size()}};
  }

  Json start_prepare(const std::string& collection_id, const Json& body) {
    if (!valid_id(collection_id) || !fs::exists(collection_dir(collection_id) / "collection.json"))
      throw NotFoundError("collection '" + collection_id + "' not found");
    const PhotoCollection c = decode<PhotoCollection>(read_json_file(collection_dir(collection_id) / "collection.json"));
    PrepareOptions po;
    if (auto t = optional_field(body, "confidence")) {
      if (!t->is_number() || t->get<double>() < 0 || t->get<double>() > 1)
        throw ParseError("body.confidence", "expected a number in [0, 1]");
      po.confidence_threshold = t->get<double>();
    }
    const BackendDescriptor d = backend_for(body, std::nullopt);
    BackendPtr backend = make_backend(d);
    const std::string library_id = derive_library_id(c, backend->describe(), po.confidence_threshold);
    po.library_id = library_id;
    const std::string job = new_job("prepare", {{"collection_id", collection_id}, {"library_id", library_id}});

    prepare_pool.submit([this, job, c, d, backend, po, library_id] {
      update_job(job, [](Json& j) { j["state"] = "running"; });
      try {
        backend->embedding_dim();
      } catch (const std::exception& ex) {
        return fail_job(job, "prepare", std::string("backend unreachable: ") + ex.what());
      }
      try {
        auto guard = lock_for("library:" + library_id);
        std::lock_guard g(*guard);
        const PrepareResult r = prepare_collection(c, *backend, library_dir(library_id), po);
        write_json_file(library_dir(library_id) / "backend.json", pipeline::encode_descriptor(d));
        if (r.report.failed() == static_cast<int>(r.report.images.size())) {
          const std::string first = r.report.images.empty() ? "no images" : r.report.images.front().error;
          update_job(job, [&](Json& j) { j["report"] = encode(r.report); });
          return fail_job(job, "prepare", "every image failed; first error: " + first);
        }
        update_job(job, [&](Json& j) {
          j["state"] = "done";
          j["progress"] = 1.0;
          j["report"] = encode(r.report);
        });
      } catch (const std::exception& ex) {
        fail_job(job, "prepare", ex.what());
      }
    });
    return {{"job_id", job}, {"library_id", library_id}};
  }

  Json start_session(const Json& body) {
    const std::string library_id = string_field(body, "library_id", "body");
    if (!valid_id(library_id) || !fs::exists(library_dir(library_id) / "library.json"))
      throw NotFoundError("library '" + library_id + "' not found");

    pipeline::CurateRequest r;
    r.story = string_field(body, "story", "body");
    if (trim(r.story).empty()) throw ParseError("body.story", "must not be empty");
    if (r.story.size() > kMaxStoryChars)
      throw ParseError("body.story", "longer than " + std::to_string(kMaxStoryChars) + " characters");
    if (auto m = optional_field(body, "mode")) {
      if (!m->is_string()) throw ParseError("body.mode", "expected \"full\" or \"keyword_only\"");
      std::string mode = m->get<std::string>();
      std::replace(mode.begin(), mode.end(), '-', '_');
      try {
        r.mode = selection_mode_from_string(mode);
      } catch (const std::exception&) {
        throw ParseError("body.mode", "expected \"full\" or \"keyword_only\"");
      }
    }
    PresentMode present = PresentMode::sized;
    if (auto p = optional_field(body, "present")) {
      try {
        present = present_mode_from_string(p->get<std::string>());
      } catch (const std::exception&) {
        throw ParseError("body.present", "expected \"sized\" or \"uniform\"");
      }
    }
    if (auto w = optional_field(body, "weights")) {
      if (!w->is_array() || w->size() != 3 || !std::all_of(w->begin(), w->end(), [](const Json& x) { return x.is_number() && x.get<double>() >= 0; }))
        throw ParseError("body.weights", "expected three non-negative numbers [w_div, w_cns, w_res]");
      r.scoring.w_div = (*w)[0].get<double>();
      r.scoring.w_cns = (*w)[1].get<double>();
      r.scoring.w_res = (*w)[2].get<double>();
    }
    std::uint64_t shuffle_seed = 7;
    if (auto s = optional_field(body, "seed")) {
      if (!s->is_number_unsigned()) throw ParseError("body.seed", "expected a non-negative integer");
      shuffle_seed = s->get<std::uint64_t>();
    }
    double canvas_width = 1280;
    if (auto cw = optional_field(body, "canvas_width")) {
      if (!cw->is_number() || !(cw->get<double>() > 0)) throw ParseError("body.canvas_width", "expected a positive number");
      canvas_width = cw->get<double>();
    }

    std::optional<BackendDescriptor> recorded;
    if (fs::exists(library_dir(library_id) / "backend.json"))
      recorded = pipeline::decode_descriptor(read_json_file(library_dir(library_id) / "backend.json"));
    // `seed` here is the shuffle seed; the backend keeps the library's.
    Json backend_body = body;
    backend_body.erase("seed");
    const BackendDescriptor d = backend_for(backend_body, recorded);
    const ElementLibrary lib = load_library(library_dir(library_id));
    r.scoring.embedding_dim = lib.embedding_dim;
    const std::string session_id = pipeline::derive_session_id(lib.library_id, r);
    const Json options_json = {{"present", to_string(present)}, {"shuffle_seed", shuffle_seed}, {"canvas_width", canvas_width}};
    const std::string job = new_job("curate", {{"library_id", library_id}, {"session_id", session_id}});

    curate_pool.submit([this, job, r, d, library_id, session_id, options_json] {
      update_job(job, [](Json& j) { j["state"] = "running"; });
      try {
        auto guard = lock_for("session:" + session_id);
        std::lock_guard g(*guard);
        const fs::path final_dir = session_dir(session_id);
        if (!fs::exists(final_dir / "session.json")) {
          const fs::path staging = root / "sessions" / ("." + session_id + ".partial");
          std::error_code ec;
          fs::remove_all(staging, ec);
          BackendPtr backend = make_backend(d);
          pipeline::run_curation(library_dir(library_id), r, d, *backend, staging);
          SceneDocument scene;
          scene.scene_id = session_id;
          write_json_file(staging / "scene.json", encode(scene));
          write_json_file(staging / "options.json", options_json);
          fs::remove_all(final_dir, ec);
          fs::rename(staging, final_dir);
        }
        auto s = session(session_id);
        update_job(job, [&](Json& j) {
          j["state"] = "done";
          j["progress"] = 1.0;
          j["report"] = {{"session_id", session_id},
                         {"insufficient_assets", s->session.insufficient_assets},
                         {"warnings", s->session.warnings},
                         {"llm_calls", s->session.llm_calls}};
        });
      } catch (const CurationError& ex) {
        fail_job(job, ex.stage(), ex.what());
      } catch (const ScoringError& ex) {
        fail_job(job, "scoring", ex.what());
      } catch (const std::exception& ex) {
        fail_job(job, "curation", ex.what());
      }
    });
    return {{"job_id", job}, {"session_id", session_id}};
  }

  Json read_options(const std::string& id) {
    const fs::path p = session_dir(id) / "options.json";
    if (!fs::exists(p)) return {{"present", "sized"}, {"shuffle_seed", 7}, {"canvas_width", 1280}};
    return read_json_file(p);
  }

  LayoutOptions layout_options(const std::string& id, const httplib::Request& req) {
    const Json o = read_options(id);
    LayoutOptions lo;
    lo.mode = present_mode_from_string(o.value("present", "sized"));
    lo.shuffle_seed = o.value("shuffle_seed", std::uint64_t{7});
    lo.canvas_width = o.value("canvas_width", 1280.0);
    try {
      if (req.has_param("present")) lo.mode = present_mode_from_string(req.get_param_value("present"));
    } catch (const std::exception&) {
      throw ParseError("query.present", "expected \"sized\" or \"uniform\"");
    }
    try {
      if (req.has_param("canvas_width")) lo.canvas_width = std::stod(req.get_param_value("canvas_width"));
      if (req.has_param("seed")) lo.shuffle_seed = std::stoull(req.get_param_value("seed"));
    } catch (const std::exception&) {
      throw ParseError("query", "canvas_width and seed must be numbers");
    }
    if (!(lo.canvas_width > 0)) throw ParseError("query.canvas_width", "must be positive");
    return lo;
  }

  SceneDocument read_scene(const std::string& id) {
    const fs::path p = session_dir(id) / "scene.json";
    if (!fs::exists(p)) {
      SceneDocument s;
      s.scene_id = id;
      return s;
    }
    return decode<SceneDocument>(read_json_file(p), "scene");
  }

  Json scene_ops(const std::string& id, const Json& body) {
    auto s = session(id);
    const Json& base = require(body, "base_revision", "body");
    if (!base.is_number_unsigned() && !(base.is_number_integer() && base.get<std::int64_t>() >= 0))
      throw ParseError("body.base_revision", "expected a non-negative integer");
    const Json& ops = require(body, "ops", "body");
    if (!ops.is_array()) throw ParseError("body.ops", "expected a list of ops");

    const ElementPaths paths = leaf_paths(s->session.hierarchy.categories);
    auto guard = lock_for("session:" + id);
    std::lock_guard g(*guard);
    SceneDocument scene = read_scene(id);
    if (base.get<std::uint64_t>() != scene.revision) {
      Json b = error_body("revision_conflict", "the scene moved on since base_revision");
      b["current_revision"] = scene.revision;
      throw HttpError{409, b};
    }
    for (std::size_t i = 0; i < ops.size(); ++i)
      scene = apply_scene_op(scene, paths, ops[i], "body.ops[" + std::to_string(i) + "]");
    write_json_file(session_dir(id) / "scene.json", encode(scene));
    return {{"revision", scene.revision}, {"scene", encode(scene)}};
  }

  Json export_session(const std::string& id, const Json& body) {
    auto s = session(id);
    fs::path out = session_dir(id) / "export";
    if (auto o = optional_field(body, "out_dir")) {
      if (!o->is_string() || o->get<std::string>().empty()) throw ParseError("body.out_dir", "expected a directory path");
      out = o->get<std::string>();
    }
    auto guard = lock_for("session:" + id);
    std::lock_guard g(*guard);
    const ExportBundle b = pipeline::run_export(*s, read_scene(id), out);
    return {{"bundle_dir", b.dir.string()},
            {"assets_json", b.assets_json.string()},
            {"scene_json", b.scene_json.string()},
            {"preview_png", b.preview_png.string()},
            {"cutouts", b.cutouts}};
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError(host + ":" + std::to_string(port), "cannot bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::listen_blocking(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw IoError(host + ":" + std::to_string(port), "cannot bind");
}

void Service::stop() { impl_->stop(); }

}  // namespace collage
