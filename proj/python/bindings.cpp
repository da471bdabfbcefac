#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mmfnd/cli.hpp"
#include "mmfnd/encoders.hpp"
#include "mmfnd/error.hpp"
#include "mmfnd/hub.hpp"
#include "mmfnd/metrics.hpp"
#include "mmfnd/synthetic.hpp"
#include "mmfnd/text.hpp"

namespace py = pybind11;
using namespace mmfnd;

namespace {

py::array_t<float> to_array(const std::vector<float>& v) {
  py::array_t<float> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict class_dict(const ClassMetrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodal fake-news detection kit";

  auto& base = py::register_exception<Error>(m, "MmfndError");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ManifestError>(m, "ManifestError", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<CheckpointError>(m, "CheckpointError", base);

  m.attr("FAKE") = kFakeLabel;
  m.attr("REAL") = kRealLabel;

  m.def("clean_text", [](const std::string& s) { return clean_text(s); }, py::arg("raw"));
  m.def("train_size", &train_size, py::arg("n"), py::arg("ratio") = 0.8);
  m.def(
      "split_ids",
      [](const std::vector<std::string>& ids, double ratio, std::uint64_t seed) {
        auto s = split_ids(ids, ratio, seed);
        return py::make_tuple(s.train_ids, s.test_ids);
      },
      py::arg("ids"), py::arg("ratio") = 0.8, py::arg("seed") = 42);

  m.def(
      "stub_vector",
      [](const std::string& backend_id, py::bytes data, int dim) {
        const std::string raw = data;
        return to_array(stub_vector(backend_id, std::as_bytes(std::span(raw.data(), raw.size())), dim));
      },
      py::arg("backend_id"), py::arg("data"), py::arg("dim"));

  m.def(
      "encode_text",
      [](const std::string& role, const std::string& text, std::optional<std::filesystem::path> cache_dir) {
        std::shared_ptr<EmbeddingCache> cache;
        if (cache_dir) cache = std::make_shared<EmbeddingCache>(*cache_dir);
        EncoderHub hub(make_stub_backends(), kDefaultMaxTokens, cache);
        return to_array(hub.text_cls(parse_encoder_role(role), text).values);
      },
      py::arg("role"), py::arg("text"), py::arg("cache_dir") = py::none(),
      "Class-token vector from the stub backend of a text role.");

  m.def("f1_score", &f1_score, py::arg("precision"), py::arg("recall"));
  m.def(
      "binary_metrics",
      [](const std::vector<int>& y_true, const std::vector<int>& y_pred) {
        const auto b = binary_metrics(y_true, y_pred);
        py::dict d;
        d["n"] = b.n;
        d["tp"] = b.counts.tp;
        d["tn"] = b.counts.tn;
        d["fp"] = b.counts.fp;
        d["fn"] = b.counts.fn;
        d["fake"] = class_dict(b.fake);
        d["real"] = class_dict(b.real);
        return d;
      },
      py::arg("y_true"), py::arg("y_pred"));

  m.def(
      "write_synthetic_corpus",
      [](const std::filesystem::path& dir, std::size_t count, std::uint64_t seed, std::size_t missing_images) {
        SyntheticCorpusOptions opts;
        opts.count = count;
        opts.seed = seed;
        opts.missing_images = missing_images;
        return write_synthetic_corpus(dir, opts);
      },
      py::arg("dir"), py::arg("count") = 1000, py::arg("seed") = 7, py::arg("missing_images") = 0);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "mmfnd");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one mmfnd command; returns (exit_code, stdout, stderr).");
}
