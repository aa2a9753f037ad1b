// Python bindings. Tensors cross the boundary as float64 NumPy arrays and
// structured values (interchange specs, configs, reports) as JSON text, which
// the pure-Python layer turns into dicts.

#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ramp_stdae/experiment.hpp"

namespace py = pybind11;
using namespace ramp_stdae;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const Array& a) {
  std::vector<std::int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

Array to_array(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous();
  std::vector<py::ssize_t> shape(c.sizes().begin(), c.sizes().end());
  Array out(shape);
  std::memcpy(out.mutable_data(), c.data_ptr<double>(), sizeof(double) * c.numel());
  return out;
}

InterchangeSpec spec_from(const std::string& text) { return interchange_from_json(nlohmann::json::parse(text)); }
std::string spec_text(const InterchangeSpec& s) { return interchange_to_json(s).dump(); }

py::dict dataset_dict(const Dataset& d) {
  py::dict out;
  out["interchange"] = spec_text(d.spec);
  std::vector<std::string> stamps;
  for (auto t : d.mainline.timestamps) stamps.push_back(format_iso8601(t));
  out["timestamps"] = stamps;
  out["mainline"] = to_array(d.mainline.values);
  out["ramps"] = to_array(d.ramps.values);
  return out;
}

std::vector<double> as_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ramp flow forecasting core (C++)";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ValueError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_ValueError);

  // topology
  m.def("default_interchange", [](std::int64_t interval) { return spec_text(default_interchange(interval)); },
        py::arg("interval_sec") = 300);
  m.def("load_interchange", [](const std::filesystem::path& p) { return spec_text(load_interchange(p)); });
  m.def("validate_interchange", [](const std::string& s) { return spec_text(spec_from(s)); });
  m.def("full_adjacency", [](const std::string& s) {
    const auto adj = full_adjacency(spec_from(s));
    const auto m_ = adj.size();
    py::array_t<std::uint8_t> out({m_, m_});
    std::memcpy(out.mutable_data(), adj.cells().data(), adj.cells().size());
    return out;
  });
  m.def("movement_endpoints",
        [](const std::string& s, const std::string& id) { return movement_endpoints(spec_from(s), id); });

  // data
  m.def("generate", [](const std::string& spec, const std::string& cfg) {
    return dataset_dict(generate(spec_from(spec), SynthConfig::from_json(nlohmann::json::parse(cfg))));
  });
  m.def("write_synthetic", [](const std::string& spec, const std::string& cfg, const std::filesystem::path& dir) {
    save_dataset(generate(spec_from(spec), SynthConfig::from_json(nlohmann::json::parse(cfg))), dir);
  });
  m.def("load_dataset", [](const std::filesystem::path& dir) { return dataset_dict(load_dataset(dir)); });
  m.def("fuse_features", [](const Array& mainline, const std::string& spec) {
    const auto s = spec_from(spec);
    MainlineSeries ml;
    ml.direction_ids = s.directions;
    ml.values = to_tensor(mainline);
    ml.timestamps.resize(ml.values.size(0));
    return to_array(fuse_features(ml, s).values);
  });
  m.def("split_by_days", [](std::int64_t total, std::int64_t interval) {
    const auto r = split_by_days(total, interval);
    return std::vector<std::pair<std::int64_t, std::int64_t>>{
        {r.train.begin, r.train.end}, {r.val.begin, r.val.end}, {r.test.begin, r.test.end}};
  });
  m.def("apply_mask", [](const Array& window, const std::string& mask, const std::string& spec) {
    const auto out = apply_mask(to_tensor(window), MaskSpec::from_json(nlohmann::json::parse(mask)), spec_from(spec));
    return py::make_tuple(to_array(out.values), to_array(out.observed));
  });

  // embedding
  m.def("patchify", [](const Array& x, std::int64_t l) { return to_array(patchify(to_tensor(x), l)); });
  m.def("unpatchify", [](const Array& z, std::int64_t c) { return to_array(unpatchify(to_tensor(z), c)); });
  m.def("positional_encoding_2d", [](std::int64_t nodes, std::int64_t patches, std::int64_t dim) {
    return to_array(positional_encoding_2d(nodes, patches, dim));
  });

  // model shapes with fresh random weights
  m.def("stdae_forward", [](const Array& long_window, const std::string& cfg, std::uint64_t seed) {
    torch::manual_seed(seed);
    Stdae model(StdaeConfig::from_json(nlohmann::json::parse(cfg)));
    model->eval();
    torch::NoGradGuard guard;
    const auto out = model->forward(to_tensor(long_window).to(torch::kFloat32));
    py::dict d;
    d["spatial"] = to_array(out.spatial);
    d["temporal"] = to_array(out.temporal);
    d["spatial_recon"] = to_array(out.spatial_recon);
    d["temporal_recon"] = to_array(out.temporal_recon);
    return d;
  });

  // metrics
  m.def("mae", [](const Array& p, const Array& t) { return mae(as_vector(p), as_vector(t)); });
  m.def("rmse", [](const Array& p, const Array& t) { return rmse(as_vector(p), as_vector(t)); });
  m.def("mape", [](const Array& p, const Array& t) { return mape(as_vector(p), as_vector(t)); });

  // workflow; configs and results are JSON text
  auto config = [](const std::string& text) {
    auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(text));
    cfg.validate(true);
    return cfg;
  };
  m.def("resolve_config", [config](const std::string& text) { return config(text).to_json().dump(); });
  m.def("run_synth", [config](const std::string& text) { return run_synth(config(text)); });
  m.def("run_pretrain", [config](const std::string& text) {
    py::gil_scoped_release release;
    return run_pretrain(config(text)).best_val_loss;
  });
  m.def("run_train", [config](const std::string& text) {
    py::gil_scoped_release release;
    return run_train(config(text)).to_json().dump();
  });
  m.def("run_eval", [config](const std::string& text) {
    py::gil_scoped_release release;
    return run_eval(config(text)).to_json().dump();
  });
  m.def("run_ablate", [config](const std::string& text) {
    py::gil_scoped_release release;
    nlohmann::json out;
    for (const auto& [name, report] : run_ablate(config(text))) out[name] = report.to_json();
    return out.dump();
  });
}
