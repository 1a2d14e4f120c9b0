#pragma once

#include <cstdint>
#include <filesystem>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupscope/contrastive.hpp"
#include "groupscope/corpus.hpp"
#include "groupscope/cue_miner.hpp"
#include "groupscope/embeddings.hpp"
#include "groupscope/eval_harness.hpp"
#include "groupscope/group_insights.hpp"
#include "groupscope/multitask_model.hpp"

namespace groupscope {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir;  // trained models are written here when set
  std::uint64_t seed = 7;          // split seed for uploads
  std::vector<AttributeSchema> schema = default_schema();
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string body;
  std::string content_type;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Single-dataset analytics session behind the HTTP endpoints. handle() is
/// transport independent and safe to call from several threads.
class ApiService {
public:
  ApiService(ServiceConfig config, EmbeddingPair embeddings);
  ~ApiService();
  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  ApiResponse handle(const ApiRequest& request);

  /// Blocks until every training job has finished.
  void wait_for_jobs();

  /// Loads a dataset directly, as POST /datasets would.
  nlohmann::json load_dataset(Dataset d);

  /// Runs an HTTP server until stop() is called; one log line per request.
  void serve(std::ostream& log);
  void stop();
  /// Port actually bound (useful with port 0); 0 before serve() binds.
  int bound_port() const noexcept { return bound_port_.load(); }
  bool wait_until_listening(int timeout_ms) const;

  static nlohmann::json response_schemas();

private:
  struct Job {
    std::string status;  // running, done, failed
    TrainingConfig config;
    std::vector<EpochRecord> log;
    std::string error;
    std::string checksum;
  };

  ApiResponse upload(const ApiRequest& r);
  ApiResponse instances(const ApiRequest& r);
  ApiResponse attributes_summary(const ApiRequest& r);
  ApiResponse density(const std::string& attribute);
  ApiResponse subgroups(const ApiRequest& r);
  ApiResponse cues(const ApiRequest& r, const std::string& attribute);
  ApiResponse trend_view(const ApiRequest& r);
  ApiResponse histogram(const ApiRequest& r);
  ApiResponse explain_request(const ApiRequest& r);
  ApiResponse start_training(const ApiRequest& r, const std::string& attribute);
  ApiResponse model_status(const std::string& attribute);
  ApiResponse model_snapshot(const std::string& attribute);
  ApiResponse fit_tree_request(const ApiRequest& r);

  std::shared_ptr<const Dataset> require_dataset() const;
  std::shared_ptr<const TrainedAttributeModel> require_model(const std::string& attribute) const;
  std::shared_ptr<const ClusterResult> cluster_cached(const std::shared_ptr<const Dataset>& d,
                                                      const std::vector<std::string>& attrs, std::size_t k_max);
  std::shared_ptr<const std::vector<LanguageCue>> cues_cached(const std::shared_ptr<const Dataset>& d,
                                                              const std::string& attribute);
  std::shared_ptr<const Evaluation> evaluation_cached(const std::shared_ptr<const Dataset>& d,
                                                      const std::string& source, const std::string& attribute);
  void run_job(std::shared_ptr<const Dataset> d, std::string attribute, TrainingConfig cfg);

  ServiceConfig config_;
  EmbeddingPair embeddings_;

  // Session state; every cache is tied to dataset_'s checksum and dropped
  // when the dataset changes.
  mutable std::mutex mutex_;
  std::shared_ptr<const Dataset> dataset_;
  std::map<std::string, std::shared_ptr<const TrainedAttributeModel>> models_;
  std::map<std::string, Job> jobs_;
  std::shared_ptr<const DecisionTree> tree_;
  std::map<std::string, std::shared_ptr<const ClusterResult>> clusters_;
  std::map<std::string, std::shared_ptr<const std::vector<LanguageCue>>> cues_;
  std::map<std::string, std::shared_ptr<const Evaluation>> evaluations_;

  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::atomic<int> bound_port_{0};
  std::atomic<bool> listening_{false};
  std::mutex server_mutex_;
  void* server_ = nullptr;  // httplib::Server while serving
};

}  // namespace groupscope
