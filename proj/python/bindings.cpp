// Python bindings. Structured results cross the boundary as JSON text and
// are decoded by the pure-Python wrapper in groupscope/__init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "groupscope/api_service.hpp"
#include "groupscope/errors.hpp"
#include "groupscope/payloads.hpp"
#include "groupscope/synthetic.hpp"

namespace py = pybind11;
using namespace groupscope;
using nlohmann::json;

namespace {

std::vector<std::string> all_attributes(const Dataset& d) {
  std::vector<std::string> names;
  for (const auto& s : d.schema()) names.push_back(s.name);
  return names;
}

TrainingConfig config_from(const std::string& text) {
  return training_config_from_json(text.empty() ? json(nullptr) : json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "groupscope native core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<NoContrastError>(m, "NoContrastError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_jsonl", [](const std::string& text) { return ingest_text(text, default_schema()); })
      .def_static("load", [](const std::string& path) { return load(path); })
      .def("save", [](const Dataset& d, const std::string& path) { persist(d, path); })
      .def("to_jsonl", [](const Dataset& d) { return to_jsonl(d); })
      .def("summary_json", [](const Dataset& d) { return dataset_summary(d).dump(); })
      .def("split", [](const Dataset& d, std::uint64_t seed, double train, double validate, double test) {
             return assign_split(d, {train, validate, test}, seed);
           },
           py::arg("seed") = 7, py::arg("train") = 0.5, py::arg("validate") = 0.15, py::arg("test") = 0.35)
      .def_property_readonly("checksum", &Dataset::checksum)
      .def_property_readonly("has_split", &Dataset::has_split)
      .def("__len__", &Dataset::size);

  py::class_<EmbeddingPair>(m, "Embeddings")
      .def_static("synthetic", &EmbeddingPair::synthetic, py::arg("dimension") = 16, py::arg("seed_a") = 101,
                  py::arg("seed_b") = 202)
      .def_static("from_files", [](const std::string& a, const std::string& b, std::optional<std::uint64_t> oov_seed) {
             const auto oov = oov_seed ? OovPolicy::hashed(*oov_seed) : OovPolicy::zero();
             return EmbeddingPair(load_table(a, oov), load_table(b, oov));
           },
           py::arg("first"), py::arg("second"), py::arg("oov_seed") = py::none())
      .def_property_readonly("dimension", &EmbeddingPair::dimension);

  py::class_<TrainedAttributeModel>(m, "Model")
      .def_static("train", [](const Dataset& d, const std::string& attribute, const EmbeddingPair& emb,
                              const std::string& config) {
             py::gil_scoped_release release;
             return train(d, attribute, emb, config_from(config));
           },
           py::arg("dataset"), py::arg("attribute"), py::arg("embeddings"), py::arg("config_json") = "")
      .def_static("load", [](const std::string& path) { return load_model(path); })
      .def_static("from_snapshot", [](const std::string& text) { return model_from_json(json::parse(text)); })
      .def("save", [](const TrainedAttributeModel& model, const std::string& path) { save_model(model, path); })
      .def("snapshot", [](const TrainedAttributeModel& model) { return render_artifact(to_json(model)); })
      .def("evaluate_json", [](const TrainedAttributeModel& model, const Dataset& d, const EmbeddingPair& emb) {
        return to_json(evaluate(model, d, emb)).dump();
      });

  m.def("mine_cues_jsonl",
        [](const TrainedAttributeModel& model, const Dataset& d, const EmbeddingPair& emb, std::optional<std::size_t> top) {
          py::gil_scoped_release release;
          return cues_jsonl(mine(model, d, emb), top);
        },
        py::arg("model"), py::arg("dataset"), py::arg("embeddings"), py::arg("top") = 10);

  m.def("summary_json", [](const Dataset& d, const std::vector<std::string>& attrs) {
    return summary_payload(d, attrs).dump();
  }, py::arg("dataset"), py::arg("attributes") = std::vector<std::string>{});
  m.def("density_json", [](const Dataset& d, const std::string& attribute) {
    return density_payload(d, attribute).dump();
  });
  m.def("cluster_json", [](const Dataset& d, const std::vector<std::string>& attrs, std::size_t k_max) {
    return subgroups_payload(cluster_subgroups(d, attrs.empty() ? all_attributes(d) : attrs, k_max), d).dump();
  }, py::arg("dataset"), py::arg("attributes") = std::vector<std::string>{}, py::arg("k_max") = 10);

  py::class_<DecisionTree>(m, "Tree")
      .def_static("fit", [](const Dataset& d, const std::vector<std::string>& attrs, std::size_t max_depth,
                            std::size_t min_leaf) {
             return fit_tree(d, attrs.empty() ? all_attributes(d) : attrs, Group::red, TreeConfig{max_depth, min_leaf});
           },
           py::arg("dataset"), py::arg("attributes") = std::vector<std::string>{}, py::arg("max_depth") = 4,
           py::arg("min_leaf") = 5)
      .def("to_json", [](const DecisionTree& t) { return to_json(t).dump(); })
      .def("explain_json", [](const DecisionTree& t, const Dataset& d, const std::string& mode, const std::string& fact,
                              std::optional<std::string> other) {
             return to_json(explain(t, d, parse_mode(mode), fact, other), t).dump();
           },
           py::arg("dataset"), py::arg("mode"), py::arg("fact"), py::arg("other") = py::none());

  m.def("planted_corpus", [](std::size_t n, std::uint64_t seed) {
    PlantedCorpusConfig cfg;
    cfg.instances = n;
    cfg.seed = seed;
    return planted_corpus(cfg);
  }, py::arg("n") = 2000, py::arg("seed") = PlantedCorpusConfig{}.seed);
  m.def("explanation_corpus", &explanation_corpus, py::arg("n") = 120, py::arg("seed") = 5);
  m.def("blob_corpus", [](std::size_t n, std::uint64_t seed) { return blob_corpus(n, seed).dataset; },
        py::arg("n") = 600, py::arg("seed") = 11);

  py::class_<ApiService>(m, "Service")
      .def(py::init([](std::uint64_t seed, std::size_t emb_dim) {
             ServiceConfig cfg;
             cfg.seed = seed;
             return std::make_unique<ApiService>(cfg, EmbeddingPair::synthetic(emb_dim));
           }),
           py::arg("seed") = 7, py::arg("embedding_dimension") = 16)
      .def("handle",
           [](ApiService& s, const std::string& method, const std::string& path,
              const std::map<std::string, std::string>& query, const std::string& body, const std::string& content_type) {
             ApiRequest r{method, path, {query.begin(), query.end()}, body, content_type};
             ApiResponse out;
             {
               py::gil_scoped_release release;
               out = s.handle(r);
             }
             return py::make_tuple(out.status, out.content_type, out.body);
           },
           py::arg("method"), py::arg("path"), py::arg("query") = std::map<std::string, std::string>{},
           py::arg("body") = "", py::arg("content_type") = "application/json")
      .def("wait_for_jobs", [](ApiService& s) {
        py::gil_scoped_release release;
        s.wait_for_jobs();
      })
      .def_static("response_schemas_json", [] { return ApiService::response_schemas().dump(); });
}
