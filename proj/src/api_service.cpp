#include "groupscope/api_service.hpp"

#include <chrono>
#include <regex>

#include <httplib.h>

#include "groupscope/errors.hpp"
#include "groupscope/eval_harness.hpp"
#include "groupscope/payloads.hpp"
#include "groupscope/util.hpp"

namespace groupscope {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) { return {status, render_artifact(body), "application/json"}; }

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

std::optional<std::string> query_value(const ApiRequest& r, const std::string& key) {
  const auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

double query_double(const ApiRequest& r, const std::string& key, double fallback) {
  const auto v = query_value(r, key);
  if (!v || v->empty()) return fallback;
  try {
    std::size_t used = 0;
    const double x = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + *v + "'", 0, key);
  }
}

std::size_t query_size(const ApiRequest& r, const std::string& key, std::size_t fallback) {
  const auto v = query_value(r, key);
  if (!v || v->empty()) return fallback;
  if (v->find_first_not_of("0123456789") != std::string::npos || v->size() > 9) {
    throw ValidationError("not a non-negative integer: '" + *v + "'", 0, key);
  }
  return static_cast<std::size_t>(std::stoul(*v));
}

json parse_body(const ApiRequest& r) {
  if (r.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(r.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("request body is not JSON: ") + e.what());
  }
}

std::string cluster_key(const std::vector<std::string>& attrs, std::size_t k_max) {
  std::string key = std::to_string(k_max);
  for (const auto& a : attrs) key += "|" + a;
  return key;
}

std::vector<std::string> all_attributes(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& s : d.schema()) out.push_back(s.name);
  return out;
}

}  // namespace

ApiService::ApiService(ServiceConfig config, EmbeddingPair embeddings)
    : config_(std::move(config)), embeddings_(std::move(embeddings)) {}

ApiService::~ApiService() {
  stop();
  wait_for_jobs();
}

void ApiService::wait_for_jobs() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

ApiResponse ApiService::handle(const ApiRequest& r) {
  static const std::regex density_re("^/attributes/([^/]+)/density$");
  static const std::regex cues_re("^/attributes/([^/]+)/cues$");
  static const std::regex train_re("^/models/([^/]+)/train$");
  static const std::regex snapshot_re("^/models/([^/]+)/snapshot$");
  static const std::regex model_re("^/models/([^/]+)$");
  std::smatch m;
  try {
    const bool get = r.method == "GET", post = r.method == "POST";
    if (get && r.path == "/health") return json_response(200, {{"status", "ok"}});
    if (get && r.path == "/schema") return json_response(200, response_schemas());
    if (post && r.path == "/datasets") return upload(r);
    if (get && r.path == "/datasets/current") return json_response(200, dataset_summary(*require_dataset()));
    if (get && r.path == "/instances") return instances(r);
    if (get && r.path == "/attributes/summary") return attributes_summary(r);
    if (get && std::regex_match(r.path, m, density_re)) return density(m[1]);
    if (get && std::regex_match(r.path, m, cues_re)) return cues(r, m[1]);
    if (get && r.path == "/subgroups") return subgroups(r);
    if (get && r.path == "/trend") return trend_view(r);
    if (get && r.path == "/eval/histogram") return histogram(r);
    if (post && r.path == "/explain") return explain_request(r);
    if (post && r.path == "/tree/fit") return fit_tree_request(r);
    if (get && r.path == "/tree") {
      std::shared_ptr<const DecisionTree> tree;
      {
        std::lock_guard lock(mutex_);
        tree = tree_;
      }
      if (!tree) throw StateError("no tree fitted; POST /tree/fit first");
      return json_response(200, to_json(*tree));
    }
    if (post && std::regex_match(r.path, m, train_re)) return start_training(r, m[1]);
    if (get && std::regex_match(r.path, m, snapshot_re)) return model_snapshot(m[1]);
    if (get && std::regex_match(r.path, m, model_re)) return model_status(m[1]);
    return error_response(404, "not_found", "no route for " + r.method + " " + r.path);
  } catch (const NoContrastError& e) {
    return error_response(422, "no_contrast", e.what());
  } catch (const NotFoundError& e) {
    return error_response(404, "not_found", e.what());
  } catch (const StateError& e) {
    return error_response(409, "conflict", e.what());
  } catch (const ValidationError& e) {
    return error_response(400, "invalid", e.what());
  } catch (const FormatError& e) {
    return error_response(400, "invalid", e.what());
  } catch (const IntegrityError& e) {
    return error_response(400, "invalid", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

std::shared_ptr<const Dataset> ApiService::require_dataset() const {
  std::lock_guard lock(mutex_);
  if (!dataset_) throw StateError("no dataset loaded; POST /datasets first");
  return dataset_;
}

std::shared_ptr<const TrainedAttributeModel> ApiService::require_model(const std::string& attribute) const {
  std::lock_guard lock(mutex_);
  const auto it = models_.find(attribute);
  if (it == models_.end()) throw StateError("no trained model for attribute '" + attribute + "'");
  return it->second;
}

// Datasets ----------------------------------------------------------------------------

json ApiService::load_dataset(Dataset d) {
  if (!d.has_split() && d.size() >= 3) d = assign_split(d, {}, config_.seed);
  auto shared = std::make_shared<const Dataset>(std::move(d));
  std::lock_guard lock(mutex_);
  dataset_ = shared;
  models_.clear();
  jobs_.clear();
  tree_.reset();
  clusters_.clear();
  cues_.clear();
  evaluations_.clear();
  return dataset_summary(*shared);
}

ApiResponse ApiService::upload(const ApiRequest& r) {
  auto schema = config_.schema;
  std::string jsonl = r.body;
  std::optional<std::filesystem::path> path;
  // A JSON wrapper carries a path or inline JSONL plus an optional schema;
  // anything else is the JSONL itself.
  if (r.body.find('\n') == std::string::npos || r.content_type.rfind("application/json", 0) == 0) {
    try {
      const auto j = json::parse(r.body);
      if (j.is_object() && (j.contains("path") || j.contains("jsonl"))) {
        if (j.contains("schema")) schema = parse_schema(j["schema"]);
        if (j.contains("path")) path = j["path"].get<std::string>();
        if (j.contains("jsonl")) jsonl = j["jsonl"].get<std::string>();
      }
    } catch (const json::exception&) {
      // Not a wrapper; parse as JSONL below so errors carry line numbers.
    }
  }
  Dataset d = path ? ingest(*path, schema) : ingest_text(jsonl, schema);
  if (d.size() == 0) throw ValidationError("upload contains no records");
  if (d.size() >= 3) d = assign_split(d, {}, config_.seed);
  {
    std::lock_guard lock(mutex_);
    if (dataset_ && dataset_->checksum() == d.checksum()) return json_response(200, dataset_summary(*dataset_));
  }
  return json_response(201, load_dataset(std::move(d)));
}

ApiResponse ApiService::instances(const ApiRequest& r) {
  const auto d = require_dataset();
  const std::string q = query_value(r, "q").value_or("");
  const std::size_t page = std::max<std::size_t>(1, query_size(r, "page", 1));
  const std::size_t page_size = query_size(r, "page_size", 20);
  if (page_size == 0 || page_size > 500) throw ValidationError("must be in 1..500", 0, "page_size");
  const auto hits = search(*d, q);
  std::map<std::string, std::shared_ptr<const TrainedAttributeModel>> models;
  {
    std::lock_guard lock(mutex_);
    models = models_;
  }
  json items = json::array();
  const std::size_t begin = (page - 1) * page_size;
  for (std::size_t k = begin; k < hits.size() && k < begin + page_size; ++k) {
    const auto& inst = d->instances()[hits[k]];
    json attrs = json::object();
    for (std::size_t a = 0; a < d->schema().size(); ++a) {
      const auto& s = d->schema()[a];
      if (s.categorical()) {
        attrs[s.name] = {{"value", d->display_value(hits[k], a)}, {"score", d->numeric_value(hits[k], a)}};
      } else {
        attrs[s.name] = {{"value", d->numeric_value(hits[k], a)}, {"score", d->numeric_value(hits[k], a)}};
      }
    }
    json spans = json::object();
    for (const auto& [name, model] : models) {
      const auto p = predict(*model, inst, embeddings_);
      const auto span = extract_span(p.trace);
      spans[name] = {{"begin", span.span.begin},
                     {"end", span.span.end},
                     {"cumulative_attention", span.cumulative_attention},
                     {"group_posterior", {{"Red", p.group_posterior[0]}, {"Blue", p.group_posterior[1]}}}};
    }
    const auto bucket = d->bucket_of(hits[k]);
    items.push_back({{"id", inst.id},
                     {"author_id", inst.author_id},
                     {"text", inst.text},
                     {"tokens", inst.tokens},
                     {"group", to_string(inst.group)},
                     {"split", bucket ? json(to_string(*bucket)) : json(nullptr)},
                     {"attributes", std::move(attrs)},
                     {"spans", std::move(spans)}});
  }
  return json_response(200, {{"checksum", d->checksum()},
                             {"query", q},
                             {"total", hits.size()},
                             {"page", page},
                             {"page_size", page_size},
                             {"items", std::move(items)}});
}

ApiResponse ApiService::attributes_summary(const ApiRequest& r) {
  const auto d = require_dataset();
  return json_response(200, summary_payload(*d, split_list(query_value(r, "attrs").value_or(""))));
}

ApiResponse ApiService::density(const std::string& attribute) {
  const auto d = require_dataset();
  return json_response(200, density_payload(*d, attribute));
}

std::shared_ptr<const ClusterResult> ApiService::cluster_cached(const std::shared_ptr<const Dataset>& d,
                                                                const std::vector<std::string>& attrs,
                                                                std::size_t k_max) {
  const auto key = cluster_key(attrs, k_max);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = clusters_.find(key); it != clusters_.end() && dataset_ == d) return it->second;
  }
  auto result = std::make_shared<const ClusterResult>(cluster_subgroups(*d, attrs, k_max));
  std::lock_guard lock(mutex_);
  if (dataset_ == d) clusters_.emplace(key, result);
  return result;
}

ApiResponse ApiService::subgroups(const ApiRequest& r) {
  const auto d = require_dataset();
  auto attrs = split_list(query_value(r, "attrs").value_or(""));
  if (attrs.empty()) attrs = all_attributes(*d);
  for (const auto& a : attrs) d->attribute_index(a);
  const auto k_max = query_size(r, "kmax", 10);
  return json_response(200, subgroups_payload(*cluster_cached(d, attrs, k_max), *d));
}

std::shared_ptr<const std::vector<LanguageCue>> ApiService::cues_cached(const std::shared_ptr<const Dataset>& d,
                                                                        const std::string& attribute) {
  const auto model = require_model(attribute);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = cues_.find(attribute); it != cues_.end() && dataset_ == d) return it->second;
  }
  auto mined = std::make_shared<const std::vector<LanguageCue>>(mine(*model, *d, embeddings_));
  std::lock_guard lock(mutex_);
  const auto current = models_.find(attribute);
  if (dataset_ == d && current != models_.end() && current->second == model) cues_[attribute] = mined;
  return mined;
}

ApiResponse ApiService::cues(const ApiRequest& r, const std::string& attribute) {
  const auto d = require_dataset();
  d->attribute_index(attribute);
  CriterionWeights w;
  w.posterior = query_double(r, "u_p", 1.0);
  w.length = query_double(r, "u_l", 1.0);
  w.rank = query_double(r, "u_r", 1.0);
  w.frequency = query_double(r, "u_f", 1.0);
  w.validate();
  const std::size_t top_raw = query_size(r, "top", 10);
  const std::optional<std::size_t> top = top_raw == 0 ? std::nullopt : std::optional<std::size_t>(top_raw);
  const auto mined = cues_cached(d, attribute);
  const auto ranked = w == CriterionWeights{} ? *mined : reweight(*mined, w);
  if (query_value(r, "format").value_or("json") == "jsonl") {
    return {200, cues_jsonl(ranked, top), "application/x-ndjson"};
  }
  return json_response(200, cues_payload(*d, attribute, ranked, w, top));
}

ApiResponse ApiService::trend_view(const ApiRequest& r) {
  const auto d = require_dataset();
  auto attrs = split_list(query_value(r, "attrs").value_or(""));
  if (attrs.empty()) attrs = all_attributes(*d);
  std::vector<std::string> ids;
  const std::string selection = query_value(r, "selection").value_or("");
  if (selection.rfind("subgroup:", 0) == 0) {
    std::size_t id = 0;
    try {
      id = std::stoul(selection.substr(9));
    } catch (const std::exception&) {
      throw ValidationError("bad subgroup id", 0, "selection");
    }
    const auto clusters = cluster_cached(d, attrs, query_size(r, "kmax", 10));
    const auto it = std::find_if(clusters->subgroups.begin(), clusters->subgroups.end(),
                                 [&](const Subgroup& s) { return s.id == id; });
    if (it == clusters->subgroups.end()) throw NotFoundError("no subgroup " + std::to_string(id));
    ids = it->members;
  } else if (selection.rfind("ids:", 0) == 0) {
    ids = split_list(selection.substr(4));
    for (const auto& i : ids) d->instance(i);
  } else if (!selection.empty()) {
    throw ValidationError("expected subgroup:N or ids:a,b,...", 0, "selection");
  }
  auto payload = to_json(trend(*d, attrs, ids));
  payload["checksum"] = d->checksum();
  return json_response(200, payload);
}

std::shared_ptr<const Evaluation> ApiService::evaluation_cached(const std::shared_ptr<const Dataset>& d,
                                                                const std::string& source,
                                                                const std::string& attribute) {
  const std::string key = source + "|" + attribute;
  {
    std::lock_guard lock(mutex_);
    if (const auto it = evaluations_.find(key); it != evaluations_.end() && dataset_ == d) return it->second;
  }
  std::shared_ptr<const Evaluation> e;
  if (source == "tree") {
    std::shared_ptr<const DecisionTree> tree;
    {
      std::lock_guard lock(mutex_);
      tree = tree_;
    }
    if (!tree) throw StateError("no tree fitted; POST /tree/fit first");
    e = std::make_shared<const Evaluation>(evaluate(*tree, *d));
  } else {
    d->attribute_index(attribute);
    e = std::make_shared<const Evaluation>(evaluate(*require_model(attribute), *d, embeddings_));
  }
  std::lock_guard lock(mutex_);
  if (dataset_ == d) evaluations_[key] = e;
  return e;
}

ApiResponse ApiService::histogram(const ApiRequest& r) {
  const auto d = require_dataset();
  const std::string source = query_value(r, "source").value_or("tree");
  if (source != "tree" && source != "neural") throw ValidationError("must be tree or neural", 0, "source");
  std::string attribute;
  if (source == "neural") {
    attribute = query_value(r, "attribute").value_or("");
    if (attribute.empty()) throw ValidationError("neural histograms need an attribute", 0, "attribute");
  }
  return json_response(200, histogram_payload(*evaluation_cached(d, source, attribute), *d));
}

ApiResponse ApiService::explain_request(const ApiRequest& r) {
  const auto d = require_dataset();
  std::shared_ptr<const DecisionTree> tree;
  {
    std::lock_guard lock(mutex_);
    tree = tree_;
  }
  if (!tree) throw StateError("no tree fitted; POST /tree/fit first");
  const auto req = parse_explain_request(parse_body(r));
  return json_response(200, to_json(explain(*tree, *d, req.mode, req.fact_id, req.other_id), *tree));
}

ApiResponse ApiService::fit_tree_request(const ApiRequest& r) {
  const auto d = require_dataset();
  const auto body = parse_body(r);
  std::vector<std::string> attrs;
  TreeConfig cfg;
  Group target = Group::red;
  if (body.contains("attributes")) attrs = body["attributes"].get<std::vector<std::string>>();
  if (body.contains("max_depth")) cfg.max_depth = body["max_depth"].get<std::size_t>();
  if (body.contains("min_leaf")) cfg.min_leaf = body["min_leaf"].get<std::size_t>();
  if (body.contains("target")) {
    const auto g = parse_group(body["target"].get<std::string>());
    if (!g) throw ValidationError("unknown group", 0, "target");
    target = *g;
  }
  if (attrs.empty()) attrs = all_attributes(*d);
  auto tree = std::make_shared<const DecisionTree>(fit_tree(*d, attrs, target, cfg));
  std::lock_guard lock(mutex_);
  if (dataset_ != d) throw StateError("dataset changed while fitting");
  tree_ = tree;
  evaluations_.erase("tree|");
  return json_response(200, to_json(*tree));
}

// Training ----------------------------------------------------------------------------

ApiResponse ApiService::start_training(const ApiRequest& r, const std::string& attribute) {
  const auto d = require_dataset();
  d->attribute_index(attribute);
  const auto body = parse_body(r);
  if (!body.is_object()) throw ValidationError("training config must be a JSON object");
  const TrainingConfig cfg = training_config_from_json(body);
  cfg.validate();
  {
    std::lock_guard lock(mutex_);
    if (dataset_ != d) throw StateError("dataset changed");
    auto it = jobs_.find(attribute);
    if (it != jobs_.end() && it->second.status == "running") {
      throw StateError("a training job for '" + attribute + "' is already running");
    }
    jobs_[attribute] = Job{"running", cfg, {}, {}, d->checksum()};
  }
  std::lock_guard lock(workers_mutex_);
  workers_.emplace_back([this, d, attribute, cfg] { run_job(d, attribute, cfg); });
  return json_response(202, {{"attribute", attribute}, {"status", "running"}, {"config", to_json(cfg)}});
}

void ApiService::run_job(std::shared_ptr<const Dataset> d, std::string attribute, TrainingConfig cfg) {
  auto still_current = [&] {
    const auto it = jobs_.find(attribute);
    return dataset_ == d && it != jobs_.end() && it->second.checksum == d->checksum();
  };
  try {
    auto model = std::make_shared<const TrainedAttributeModel>(
        train(*d, attribute, embeddings_, cfg, [&](const EpochRecord& rec) {
          std::lock_guard lock(mutex_);
          if (still_current()) jobs_[attribute].log.push_back(rec);
        }));
    if (!config_.data_dir.empty()) {
      std::filesystem::create_directories(config_.data_dir);
      save_model(*model, config_.data_dir / (attribute + ".model.json"));
    }
    std::lock_guard lock(mutex_);
    if (!still_current()) return;
    models_[attribute] = model;
    cues_.erase(attribute);
    evaluations_.erase("neural|" + attribute);
    jobs_[attribute].status = "done";
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    if (!still_current()) return;
    jobs_[attribute].status = "failed";
    jobs_[attribute].error = e.what();
  }
}

ApiResponse ApiService::model_status(const std::string& attribute) {
  const auto d = require_dataset();
  d->attribute_index(attribute);
  Job job;
  std::shared_ptr<const TrainedAttributeModel> model;
  {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(attribute);
    if (it == jobs_.end()) throw NotFoundError("no model or training job for '" + attribute + "'");
    job = it->second;
    if (const auto m = models_.find(attribute); m != models_.end()) model = m->second;
  }
  json log = json::array();
  for (const auto& rec : job.log) log.push_back(to_json(rec));
  json out = {{"attribute", attribute},
              {"status", job.status},
              {"config", to_json(job.config)},
              {"log", std::move(log)},
              {"error", job.error.empty() ? json(nullptr) : json(job.error)},
              {"checksum", d->checksum()}};
  if (model && job.status == "done") {
    out["best_epoch"] = model->best_epoch;
    out["metrics"] = to_json(evaluation_cached(d, "neural", attribute)->metrics);
  } else {
    out["best_epoch"] = nullptr;
    out["metrics"] = nullptr;
  }
  return json_response(200, out);
}

ApiResponse ApiService::model_snapshot(const std::string& attribute) {
  require_dataset()->attribute_index(attribute);
  const auto model = require_model(attribute);
  return {200, to_json(*model).dump() + "\n", "application/json"};
}

// HTTP ------------------------------------------------------------------------------

void ApiService::serve(std::ostream& log) {
  httplib::Server server;
  std::mutex log_mutex;
  auto forward = [&](const httplib::Request& req, httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    r.content_type = req.get_header_value("Content-Type");
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const auto out = handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::lock_guard lock(log_mutex);
    log << json({{"method", r.method}, {"path", r.path}, {"status", out.status}, {"ms", std::round(ms * 1000) / 1000}})
               .dump()
        << std::endl;
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  {
    std::lock_guard lock(server_mutex_);
    server_ = &server;
  }
  const int port = config_.port == 0 ? server.bind_to_any_port(config_.host) : config_.port;
  const bool bound = config_.port == 0 ? port > 0 : server.bind_to_port(config_.host, port);
  if (!bound) {
    std::lock_guard lock(server_mutex_);
    server_ = nullptr;
    throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  bound_port_ = port;
  listening_ = true;
  server.listen_after_bind();
  listening_ = false;
  std::lock_guard lock(server_mutex_);
  server_ = nullptr;
}

void ApiService::stop() {
  std::lock_guard lock(server_mutex_);
  if (server_) static_cast<httplib::Server*>(server_)->stop();
}

bool ApiService::wait_until_listening(int timeout_ms) const {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (listening_) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return listening_;
}

}  // namespace groupscope
