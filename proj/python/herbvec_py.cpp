//  Copyright 2026 The herbvec Authors. All Rights Reserved.
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <fstream>
#include <memory>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "herbvec/checkpoint.hpp"
#include "herbvec/cli.hpp"
#include "herbvec/evaluation.hpp"
#include "herbvec/service.hpp"

namespace py = pybind11;
using namespace herbvec;

namespace {

// A loaded checkpoint. The single-model service gives Python the same
// suggestion semantics as the HTTP endpoint.
class PyModel {
 public:
  explicit PyModel(Checkpoint ck) : meta_(std::move(ck.meta)) {
    ModelSnapshot snap;
    snap.models.push_back({"model", std::move(ck.model), meta_});
    service_->reload(std::move(snap));
  }

  static PyModel load(const std::filesystem::path& path) { return PyModel(load_checkpoint(path)); }

  const TrainedModel& model() const { return service_->snapshot()->models.front().model; }

  void save(const std::filesystem::path& path) const { save_checkpoint(model(), path, meta_); }
  std::string kind() const { return kind_of(model()); }
  long dims() const { return dims_of(model()); }
  std::uint64_t seed() const { return meta_.seed; }
  std::string config_json() const { return meta_.config.dump(); }
  std::vector<std::string> herbs() const {
    const auto& t = vocab_of(model()).tokens();
    return {t.begin() + 1, t.end()};
  }

  py::tuple suggest(const std::vector<std::string>& draft, std::size_t k) const {
    const auto r = service_->suggest({"model", draft, k});
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : r.suggestions) out.emplace_back(s.herb, s.score);
    return py::make_tuple(out, r.warnings);
  }

  std::string predict_blank(const std::vector<std::string>& context, std::size_t blank) const {
    if (blank > context.size()) throw ConfigError("blank position out of range");
    const auto& v = vocab_of(model());
    BlankedPrescription q{{}, blank};
    for (const auto& h : context) q.context.push_back(v.id(h));
    return v.token(herbvec::predict_blank(model(), q));
  }

  double evaluate_prediction(const std::filesystem::path& testset) const {
    std::ifstream in(testset);
    if (!in) throw DataError("cannot open '" + testset.string() + "'");
    const auto items = read_testset(in, vocab_of(model()));
    return std::visit([&](const auto& m) { return eval_prediction(m, items); }, model());
  }

  EmbeddingMatrix embeddings() const {
    auto emb = embeddings_of(model());
    if (!emb) throw ConfigError("a " + kind() + " model has no herb embeddings");
    return std::move(*emb);
  }

 private:
  CheckpointMeta meta_;
  std::shared_ptr<AssistantService> service_ = std::make_shared<AssistantService>();
};

py::list neighbor_list(const EmbeddingMatrix& emb, const std::vector<Neighbor>& ns) {
  py::list out;
  for (const auto& n : ns) out.append(py::make_tuple(emb.vocab().token(n.id), n.score));
  return out;
}

py::dict similarity_dict(const SimilarityResult& r) {
  py::dict d;
  d["rho"] = r.rho;
  d["coverage"] = r.coverage();
  d["evaluated"] = r.evaluated;
  d["total"] = r.total;
  return d;
}

SimilarityBenchmark load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_benchmark(in);
}

}  // namespace

PYBIND11_MODULE(_herbvec, m) {
  m.doc() = "Herb embedding models for prescription corpora.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<NotFoundError>(m, "NotFoundError", base);
  py::register_exception<UndefinedError>(m, "UndefinedError", base);
  py::register_exception<CheckpointError>(m, "CheckpointError", base);
  py::register_exception<TrainingError>(m, "TrainingError", base);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base);

  py::class_<EmbeddingMatrix>(m, "Embeddings")
      .def_static(
          "load",
          [](const std::filesystem::path& path) {
            std::ifstream in(path);
            if (!in) throw DataError("cannot open '" + path.string() + "'");
            return load_text(in);
          },
          py::arg("path"))
      .def("save",
           [](const EmbeddingMatrix& e, const std::filesystem::path& path) {
             std::ofstream out(path);
             if (!out) throw DataError("cannot write '" + path.string() + "'");
             save_text(e, out);
           })
      .def_property_readonly("dim", &EmbeddingMatrix::dim)
      .def_property_readonly("herbs", [](const EmbeddingMatrix& e) { return e.vocab().tokens(); })
      .def_property_readonly("vectors", &EmbeddingMatrix::vectors, "Row i is the vector of herbs[i]; row 0 is <unk>.")
      .def("vector", [](const EmbeddingMatrix& e, const std::string& h) { return e.vector(e.lookup(h)); })
      .def("similarity",
           [](const EmbeddingMatrix& e, const std::string& a, const std::string& b) {
             return e.similarity(e.lookup(a), e.lookup(b));
           })
      .def(
          "neighbors",
          [](const EmbeddingMatrix& e, const std::string& h, std::size_t k) {
            return neighbor_list(e, e.nearest_neighbors(e.lookup(h), k));
          },
          py::arg("herb"), py::arg("k") = 10)
      .def(
          "analogy",
          [](const EmbeddingMatrix& e, const std::string& a, const std::string& b, const std::string& c,
             std::size_t k) { return neighbor_list(e, e.analogy(e.lookup(a), e.lookup(b), e.lookup(c), k)); },
          py::arg("a"), py::arg("b"), py::arg("c"), py::arg("k") = 10)
      .def(
          "evaluate_similarity",
          [](const EmbeddingMatrix& e, const std::filesystem::path& benchmark) {
            return similarity_dict(eval_similarity(e, load_benchmark(benchmark)));
          },
          py::arg("benchmark"));

  py::class_<PyModel>(m, "Model")
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"))
      .def_property_readonly("kind", &PyModel::kind)
      .def_property_readonly("dims", &PyModel::dims)
      .def_property_readonly("seed", &PyModel::seed)
      .def_property_readonly("config_json", &PyModel::config_json)
      .def_property_readonly("herbs", &PyModel::herbs)
      .def("suggest", &PyModel::suggest, py::arg("herbs"), py::arg("k") = 5,
           "Returns ([(herb, score)], warnings) for the next herb of a draft.")
      .def("predict_blank", &PyModel::predict_blank, py::arg("context"), py::arg("blank"))
      .def("evaluate_prediction", &PyModel::evaluate_prediction, py::arg("testset"))
      .def("embeddings", &PyModel::embeddings);

  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); });

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "herbvec");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a herbvec subcommand in-process; returns (exit_code, stdout, stderr).");
}
