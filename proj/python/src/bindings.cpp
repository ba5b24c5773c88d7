#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ecladts/concepts.hpp"
#include "ecladts/error.hpp"
#include "ecladts/synthdata.hpp"
#include "ecladts/trainer.hpp"
#include "ecladts/validation.hpp"

namespace py = pybind11;
using namespace ecladts;

namespace {

py::object to_python(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_python(const py::object& o) {
  if (o.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

// Copies a [b, ch, w] float64 array into a Tensor.
Tensor tensor_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3) throw DimensionError("expected a [batch, channels, length] array");
  Tensor t({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
            static_cast<std::size_t>(a.shape(2))});
  std::copy_n(a.data(), t.size(), t.data());
  return t;
}

py::array_t<double> array_from(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy_n(t.data(), t.size(), out.mutable_data());
  return out;
}

py::array_t<double> dataset_x(const Dataset& d) {
  py::array_t<double> out({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.spec.ch),
                           static_cast<py::ssize_t>(d.spec.w)});
  double* dst = out.mutable_data();
  for (const Sample& s : d.samples) dst = std::copy_n(s.x.data(), s.x.size(), dst);
  return out;
}

// [samples, primitives, ch * w] uint8
py::array_t<std::uint8_t> dataset_masks(const Dataset& d) {
  const std::size_t n_p = d.spec.primitives.size(), cells = d.spec.ch * d.spec.w;
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(n_p),
                                 static_cast<py::ssize_t>(cells)});
  std::uint8_t* dst = out.mutable_data();
  std::fill_n(dst, d.size() * n_p * cells, 0);
  for (std::size_t s = 0; s < d.size(); ++s) {
    for (std::size_t p = 0; p < d.samples[s].masks.size() && p < n_p; ++p) {
      std::copy_n(d.samples[s].masks[p].data(), cells, dst + (s * n_p + p) * cells);
    }
  }
  return out;
}

py::array_t<std::uint8_t> report_masks(const ConceptReport& r) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(r.samples.size()),
                                 static_cast<py::ssize_t>(r.n_c), static_cast<py::ssize_t>(r.w)});
  std::uint8_t* dst = out.mutable_data();
  for (const SampleConcepts& s : r.samples) dst = std::copy(s.masks.begin(), s.masks.end(), dst);
  return out;
}

py::array_t<double> importance_array(const ConceptReport& r) {
  py::array_t<double> out({static_cast<py::ssize_t>(r.importance.n_c),
                           static_cast<py::ssize_t>(r.importance.ch)});
  std::copy(r.importance.values.begin(), r.importance.values.end(), out.mutable_data());
  return out;
}

ConceptReport extract(const Model& model, const Dataset& data, const std::string& method,
                      std::size_t n_c, std::uint64_t seed, std::size_t max_batches) {
  const Method m = method_from_string(method);
  if (m == Method::MultiVision) {
    MultiVisionOptions o;
    o.kmeans.max_batches = max_batches;
    return multivision_baseline(model, data, n_c, seed, o);
  }
  ExtractionOptions o;
  o.kmeans.max_batches = max_batches;
  return eclad_from_inputs(prepare_concept_inputs(model, data, o), data, m, n_c, seed, o);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Concept extraction for 1D CNN time-series classifiers";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_OSError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("name", [](const Dataset& d) { return d.spec.name; })
      .def_property_readonly("channels", [](const Dataset& d) { return d.spec.ch; })
      .def_property_readonly("length", [](const Dataset& d) { return d.spec.w; })
      .def_property_readonly("num_classes", [](const Dataset& d) { return d.spec.num_classes; })
      .def_property_readonly("ids", [](const Dataset& d) {
        std::vector<std::size_t> ids;
        for (const Sample& s : d.samples) ids.push_back(s.id);
        return ids;
      })
      .def_property_readonly("labels", [](const Dataset& d) {
        std::vector<int> labels;
        for (const Sample& s : d.samples) labels.push_back(s.label);
        return labels;
      })
      .def_property_readonly("x", &dataset_x)
      .def_property_readonly("masks", &dataset_masks)
      .def_property_readonly("spec", [](const Dataset& d) { return to_python(json(d.spec)); })
      .def("fingerprint", &Dataset::fingerprint)
      .def("save", [](const Dataset& d, const std::filesystem::path& dir, const std::string& format) {
        save_dataset(dir, d, format == "csv" ? StorageFormat::Csv : StorageFormat::Binary);
      }, py::arg("dir"), py::arg("format") = "binary")
      .def("__len__", &Dataset::size);

  m.def("generate", [](const std::string& name, std::size_t n, std::size_t w, std::uint64_t seed) {
    return generate(name, n, w, seed);
  }, py::arg("name"), py::arg("n") = 2560, py::arg("w") = 256, py::arg("seed") = 0);
  m.def("load_dataset", &load_dataset, py::arg("dir"));
  m.def("load_csv", [](const std::filesystem::path& path, bool z_normalize) {
    CsvSchema s;
    s.z_normalize = z_normalize;
    return load_csv(path, s);
  }, py::arg("path"), py::arg("z_normalize") = false);

  py::class_<Model>(m, "Model")
      .def_static("build", [](const std::string& arch, std::size_t channels, std::size_t length,
                              std::size_t num_classes, std::uint64_t seed) {
        return Model::build(ModelSpec::defaults(arch, channels, length, num_classes), seed);
      }, py::arg("architecture"), py::arg("channels"), py::arg("length"), py::arg("num_classes"),
         py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) { return Checkpoint::load(p).to_model(); })
      .def("save", [](const Model& model, const std::filesystem::path& p) {
        Checkpoint::from_model(model).save(p);
      })
      .def("logits", [](const Model& model, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return array_from(model.logits(tensor_from(x)));
      })
      .def("receptive_field", py::overload_cast<const std::string&>(&Model::receptive_field, py::const_))
      .def_property_readonly("layers", &Model::layer_names)
      .def_property_readonly("probe_layers", &Model::probe_layers);

  m.def("train", [](Model& model, const Dataset& data, const py::object& config) {
    TrainConfig c = from_python(config).get<TrainConfig>();
    const TrainResult r = train(model, data, split(data.size(), c.split_fraction, c.seed), c);
    return to_python(json(r.report));
  }, py::arg("model"), py::arg("data"), py::arg("config") = py::none(),
     "Trains in place and returns the training report. `config` takes the TrainConfig keys.");

  m.def("wrapper_g", [](const std::vector<double>& y) { return wrapper_g(y); });
  m.def("input_gradients", [](const Model& model, const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double sign) {
    return array_from(input_gradients(model, tensor_from(x), sign));
  }, py::arg("model"), py::arg("x"), py::arg("sign") = 1.0);

  py::class_<ConceptReport>(m, "ConceptReport")
      .def_property_readonly("method", [](const ConceptReport& r) { return to_string(r.method); })
      .def_readonly("n_c", &ConceptReport::n_c)
      .def_readonly("degenerate", &ConceptReport::degenerate)
      .def_readonly("warnings", &ConceptReport::warnings)
      .def_property_readonly("importance", &importance_array)
      .def_property_readonly("masks", &report_masks)
      .def_property_readonly("metadata", [](const ConceptReport& r) { return to_python(r.metadata); })
      .def("save", [](const ConceptReport& r, const std::filesystem::path& p) { save_concept_report(p, r); });

  m.def("extract", &extract, py::arg("model"), py::arg("data"), py::arg("method") = "eclad-ts",
        py::arg("n_concepts") = 5, py::arg("seed") = 0, py::arg("max_batches") = 0);
  m.def("load_concept_report", &load_concept_report, py::arg("path"));
  m.def("validate", [](const ConceptReport& r, const Dataset& d) {
    return to_python(json(validate_run(r, d)));
  }, py::arg("report"), py::arg("data"));

  m.def("sample_dst", [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                         std::size_t ch, std::size_t w) { return sample_dst(a, b, ch, w); },
        py::arg("a"), py::arg("b"), py::arg("channels"), py::arg("length"));
}
