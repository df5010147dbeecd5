#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ebm/config.hpp"
#include "ebm/dataset.hpp"
#include "ebm/error.hpp"
#include "ebm/explain.hpp"
#include "ebm/loss.hpp"
#include "ebm/metrics.hpp"
#include "ebm/model.hpp"
#include "ebm/synth.hpp"
#include "ebm/trainer.hpp"

namespace py = pybind11;
using namespace ebm;

namespace {

// Python objects cross the boundary as JSON text.
nlohmann::json to_json(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::object from_json(const nlohmann::json& json) {
  return py::module_::import("json").attr("loads")(json.dump());
}

// Columns are (name, values) pairs; string values make a categorical column.
Dataset make_dataset(const py::list& columns, std::vector<double> target, std::vector<double> exposure) {
  std::vector<SchemaEntry> entries;
  std::vector<Column> cols;
  for (const auto& item : columns) {
    const auto pair = item.cast<py::tuple>();
    if (pair.size() != 2) throw ValidationError("column must be a (name, values) pair");
    Column c;
    c.name = pair[0].cast<std::string>();
    const auto values = pair[1].cast<py::sequence>();
    const bool categorical = py::len(values) > 0 && py::isinstance<py::str>(values[0]);
    if (categorical) {
      c.kind = Kind::categorical;
      for (const auto& v : values) {
        const auto label = v.cast<std::string>();
        std::size_t code = 0;
        while (code < c.labels.size() && c.labels[code] != label) ++code;
        if (code == c.labels.size()) c.labels.push_back(label);
        c.codes.push_back(static_cast<std::int32_t>(code));
      }
    } else {
      c.values = values.cast<std::vector<double>>();
    }
    entries.push_back({c.name, Role::feature, c.kind});
    cols.push_back(std::move(c));
  }
  const std::size_t n = cols.empty() ? target.size() : cols.front().size();
  const bool has_exposure = !exposure.empty();
  if (has_exposure) entries.push_back({"exposure", Role::exposure, Kind::continuous});
  entries.push_back({"y", Role::target, Kind::continuous});
  if (!has_exposure) exposure.assign(n, 1.0);
  return Dataset(FeatureSchema(std::move(entries)), std::move(cols), std::move(target), std::move(exposure));
}

py::list column_values(const Column& c) {
  py::list out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.kind == Kind::continuous) {
      out.append(c.values[i]);
    } else {
      out.append(c.label_at(i));
    }
  }
  return out;
}

py::dict importance_dict(const ImportanceReport& report) {
  py::dict out;
  for (const auto& t : report.terms) out[py::str(t.term)] = t.importance;
  return out;
}

}  // namespace

PYBIND11_MODULE(ebm, m) {
  m.doc() = "Explainable boosting machines for insurance pricing";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("columns"), py::arg("target"),
           py::arg("exposure") = std::vector<double>{})
      .def_property_readonly("n_rows", &Dataset::n_rows)
      .def_property_readonly("feature_names",
                             [](const Dataset& d) {
                               std::vector<std::string> names;
                               for (const auto& c : d.columns()) names.push_back(c.name);
                               return names;
                             })
      .def_property_readonly("target", [](const Dataset& d) { return std::vector<double>(d.target().begin(), d.target().end()); })
      .def_property_readonly("exposure",
                             [](const Dataset& d) { return std::vector<double>(d.exposure().begin(), d.exposure().end()); })
      .def("column", [](const Dataset& d, const std::string& name) { return column_values(d.column(name)); })
      .def("to_csv", &to_csv)
      .def("split", &split, py::arg("train_fraction"), py::arg("seed"));

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& schema_path, bool require_target) {
        return load_csv(path, FeatureSchema::load(schema_path), LoadOptions{require_target});
      },
      py::arg("path"), py::arg("schema"), py::arg("require_target") = true);

  m.def(
      "synth",
      [](const std::string& kind, std::size_t n_rows, std::uint64_t seed) {
        auto spec = SynthSpec::default_spec(parse_synth_kind(kind));
        spec.n_rows = n_rows;
        spec.seed = seed;
        auto result = synth_generate(spec);
        return std::make_pair(std::move(result.data), std::move(result.true_score));
      },
      py::arg("kind"), py::arg("n_rows"), py::arg("seed") = 0,
      "Default synthetic portfolio; returns (dataset, true scores).");

  py::class_<EbmModel>(m, "Model")
      .def_property_readonly("intercept", [](const EbmModel& model) { return model.intercept; })
      .def_property_readonly("objective", [](const EbmModel& model) { return to_string(model.objective); })
      .def_property_readonly("term_names",
                             [](const EbmModel& model) {
                               std::vector<std::string> names;
                               for (std::size_t t = 0; t < model.term_count(); ++t) names.push_back(model.term_name(t));
                               return names;
                             })
      .def("predict", &predict)
      .def("predict_scores", py::overload_cast<const EbmModel&, const Dataset&>(&predict_scores))
      .def("save", &save_model)
      .def("to_json", [](const EbmModel& model) { return from_json(model_to_json(model)); })
      .def("shape",
           [](const EbmModel& model, const std::string& term) {
             const auto shape = export_shape(model, term);
             std::vector<double> scores;
             for (const auto& r : shape.records) scores.push_back(r.score);
             return scores;
           })
      .def("local_explain",
           [](const EbmModel& model, const Dataset& data, std::size_t row) {
             const auto e = local_explain(model, data, row);
             py::dict out;
             out["intercept"] = e.intercept;
             py::list terms;
             for (const auto& t : e.terms) terms.append(py::make_tuple(t.name, t.score));
             out["terms"] = terms;
             out["score"] = e.score;
             out["prediction"] = e.prediction;
             return out;
           })
      .def("term_importance",
           [](const EbmModel& model, const Dataset& data) { return importance_dict(term_importance(model, data)); })
      .def(
          "permutation_importance",
          [](const EbmModel& model, const Dataset& data, std::uint64_t seed, std::size_t repeats) {
            return importance_dict(permutation_importance(model, data, model.objective, seed, repeats));
          },
          py::arg("data"), py::arg("seed") = 0, py::arg("repeats") = 1)
      .def(
          "pdp",
          [](const EbmModel& model, const Dataset& data, const std::string& feature, std::size_t grid_size) {
            const auto curve = pdp(model, data, feature, grid_size);
            py::object grid = curve.kind == Kind::continuous ? py::cast(curve.grid) : py::cast(curve.labels);
            return py::make_tuple(grid, curve.pd);
          },
          py::arg("data"), py::arg("feature"), py::arg("grid_size") = 0)
      .def("monotonize", [](const EbmModel& model, const std::string& feature, const std::string& direction) {
        return monotonize(model, feature, parse_direction(direction));
      });

  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "train",
      [](const Dataset& data, const py::object& config, std::size_t threads) {
        const TrainConfig cfg = config.is_none() ? TrainConfig{} : TrainConfig::from_json(to_json(config));
        py::gil_scoped_release release;
        return train(data, cfg, TrainOptions{threads, false});
      },
      py::arg("data"), py::arg("config") = py::none(), py::arg("threads") = 0,
      "Fits a model; config is a dict of training settings.");

  m.def("default_config", [] { return from_json(TrainConfig{}.to_json()); });

  m.def(
      "deviance",
      [](const std::string& loss, const std::vector<double>& y, const std::vector<double>& mu,
         const std::vector<double>& exposure) { return deviance(parse_loss(loss), y, mu, exposure); },
      py::arg("loss"), py::arg("y"), py::arg("mu"), py::arg("exposure") = std::vector<double>{});
  m.def("pseudo_residuals", [](const std::string& loss, const std::vector<double>& y, const std::vector<double>& s) {
    return pseudo_residuals(parse_loss(loss), y, s);
  });
  m.def("hessians", [](const std::string& loss, const std::vector<double>& y, const std::vector<double>& s) {
    return hessians(parse_loss(loss), y, s);
  });

  m.def(
      "edr",
      [](const std::string& loss, const std::vector<double>& y, const std::vector<double>& pred,
         const std::vector<double>& exposure) { return edr(parse_loss(loss), y, pred, exposure); },
      py::arg("loss"), py::arg("y"), py::arg("pred"), py::arg("exposure") = std::vector<double>{});
  m.def("gini_norm", [](const std::vector<double>& y, const std::vector<double>& pred) { return gini_norm(y, pred); });
  m.def(
      "murphy_curve",
      [](const std::vector<double>& y, const std::vector<double>& pred, const std::vector<double>& thetas) {
        const auto curve = murphy_curve(y, pred, thetas);
        return std::make_pair(curve.thetas, curve.s_values);
      },
      py::arg("y"), py::arg("pred"), py::arg("thetas") = std::vector<double>{});
}
