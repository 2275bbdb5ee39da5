// Python bindings for the core library. Models cross the boundary as
// opaque objects; matrices as NumPy arrays; sequences as lists of ints.

#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qpsa/classifier.hpp"
#include "qpsa/cli.hpp"
#include "qpsa/error.hpp"
#include "qpsa/hmm.hpp"
#include "qpsa/io.hpp"
#include "qpsa/metrics.hpp"
#include "qpsa/model.hpp"
#include "qpsa/psa.hpp"
#include "qpsa/qhmm.hpp"
#include "qpsa/trainer.hpp"

namespace py = pybind11;
using namespace qpsa;

namespace {

py::dict record_dict(const psa::LabeledSequence& r) {
  py::dict d;
  d["sequence"] = r.sequence;
  if (r.label) d["label"] = std::string(psa::label_name(*r.label));
  if (r.prob) d["prob"] = *r.prob;
  if (r.split) d["split"] = std::string(psa::split_name(*r.split));
  return d;
}

py::list scenario_list(const std::vector<psa::Scenario>& scenarios) {
  py::list out;
  for (const auto& s : scenarios) {
    py::dict d;
    d["sequence"] = psa::encode_scenario(s.steps);
    d["prob"] = s.probability;
    d["label"] = std::string(psa::label_name(s.label));
    out.append(d);
  }
  return out;
}

// The variant itself has no default state, so it cannot use pybind11's
// variant caster; convert by hand.
SequenceModel as_model(const py::handle& obj) {
  if (py::isinstance<hmm::CategoricalHmm>(obj)) return obj.cast<hmm::CategoricalHmm>();
  if (py::isinstance<quantum::KrausModel>(obj)) return obj.cast<quantum::KrausModel>();
  throw py::type_error("expected a CategoricalHmm or KrausModel");
}

py::object to_py(SequenceModel model) {
  return std::visit([](auto&& m) { return py::cast(std::move(m)); }, std::move(model));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HMM/QHMM sequence models for failure-scenario classification";
  m.attr("__version__") = QPSA_VERSION;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<TransitionError>(m, "TransitionError", base.ptr());
  py::register_exception<DatasetError>(m, "DatasetError", base.ptr());
  py::register_exception<ResourceLimitError>(m, "ResourceLimitError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  py::class_<hmm::CategoricalHmm>(m, "CategoricalHmm")
      .def(py::init<RealMatrix, RealMatrix, RealVector>(), py::arg("transition"),
           py::arg("emission"), py::arg("start"))
      .def_property_readonly("transition", &hmm::CategoricalHmm::transition)
      .def_property_readonly("emission", &hmm::CategoricalHmm::emission)
      .def_property_readonly("start", &hmm::CategoricalHmm::start)
      .def_property_readonly("num_states", &hmm::CategoricalHmm::num_states)
      .def_property_readonly("alphabet_size", &hmm::CategoricalHmm::alphabet_size);

  py::class_<quantum::KrausModel>(m, "KrausModel")
      .def_static(
          "from_stacked",
          [](const ComplexMatrix& kappa, int alphabet_size, int multiplicity,
             const ComplexMatrix& initial_state) {
            return quantum::KrausModel::from_stacked(
                kappa, alphabet_size, multiplicity,
                quantum::DensityMatrix(initial_state));
          },
          py::arg("kappa"), py::arg("alphabet_size"), py::arg("multiplicity"),
          py::arg("initial_state"))
      .def_property_readonly("dim", &quantum::KrausModel::dim)
      .def_property_readonly("alphabet_size", &quantum::KrausModel::alphabet_size)
      .def_property_readonly("multiplicity", &quantum::KrausModel::multiplicity)
      .def_property_readonly("initial_state",
                             [](const quantum::KrausModel& q) {
                               return q.initial_state().matrix();
                             })
      .def("stacked", &quantum::KrausModel::stacked)
      .def("completeness_residual", [](const quantum::KrausModel& q) {
        return quantum::validate_kraus(q).completeness;
      });

  // Works for both model kinds.
  m.def(
      "log_likelihood",
      [](const py::object& model, const Sequence& seq) {
        return log_likelihood(as_model(model), seq);
      },
      py::arg("model"), py::arg("sequence"));
  m.def(
      "sample",
      [](const py::object& model, int length, std::uint64_t seed,
         const Sequence& prefix) { return sample(as_model(model), length, seed, prefix); },
      py::arg("model"), py::arg("length"), py::arg("seed"),
      py::arg("prefix") = Sequence{});
  m.def("kind", [](const py::object& model) { return std::string(kind_name(as_model(model))); });

  m.def(
      "posterior",
      [](const hmm::CategoricalHmm& model, const Sequence& seq, int t) {
        return hmm::posterior(model, seq, t);
      },
      py::arg("model"), py::arg("sequence"), py::arg("t"));
  m.def(
      "baum_welch_fit",
      [](const std::vector<Sequence>& data, int num_states, int alphabet_size,
         int max_iters, double tol, std::uint64_t seed) {
        auto res = hmm::baum_welch_fit(data, num_states, alphabet_size,
                                       {max_iters, tol, seed});
        return py::make_tuple(res.model, res.log_likelihood_trace);
      },
      py::arg("data"), py::arg("num_states"), py::arg("alphabet_size"),
      py::arg("max_iters") = 200, py::arg("tol") = 1e-6, py::arg("seed") = 0);

  m.def("embed_hmm", &quantum::embed_hmm, py::arg("model"));

  m.def(
      "train_qhmm",
      [](const std::vector<Sequence>& data, int alphabet_size, int dim,
         int multiplicity, double learning_rate, double decay, int num_batches,
         int epochs, std::uint64_t seed) {
        train::TrainConfig cfg;
        cfg.dim = dim;
        cfg.multiplicity = multiplicity;
        cfg.learning_rate = learning_rate;
        cfg.decay = decay;
        cfg.num_batches = num_batches;
        cfg.epochs = epochs;
        cfg.seed = seed;
        auto res = train::train_qhmm(data, cfg, alphabet_size);
        std::vector<double> losses;
        for (const auto& r : res.log) losses.push_back(r.loss);
        return py::make_tuple(res.model, losses);
      },
      py::arg("data"), py::arg("alphabet_size"), py::arg("dim") = 4,
      py::arg("multiplicity") = 1, py::arg("learning_rate") = 0.05,
      py::arg("decay") = 0.95, py::arg("num_batches") = 5, py::arg("epochs") = 100,
      py::arg("seed") = 0);

  m.def(
      "da_score",
      [](double log_prob, int length, int alphabet_size) {
        return metrics::da_score(log_prob, length, alphabet_size).value;
      },
      py::arg("log_prob"), py::arg("length"), py::arg("alphabet_size"));
  m.def(
      "average_da",
      [](const py::object& model, const std::vector<Sequence>& data) {
        return metrics::average_da(as_model(model), data);
      },
      py::arg("model"), py::arg("data"));

  m.def(
      "classify",
      [](const py::object& probable, const py::object& no_probable,
         const Sequence& seq) {
        const classify::TwoModelClassifier clf(as_model(probable), as_model(no_probable));
        const auto c = classify::classify(clf, seq);
        return py::make_tuple(std::string(psa::label_name(c.label)), c.da_probable,
                              c.da_no_probable);
      },
      py::arg("probable_model"), py::arg("no_probable_model"), py::arg("sequence"));

  py::class_<psa::SystemModel>(m, "SystemModel")
      .def_property_readonly("name", &psa::SystemModel::name)
      .def_property_readonly("num_events", &psa::SystemModel::num_events);
  m.def("load_system", [](const std::string& path) { return io::load_system(path); });
  m.def(
      "enumerate_scenarios",
      [](const psa::SystemModel& sys, int max_len, double p_min) {
        const auto en = psa::enumerate_scenarios(sys, {}, max_len, p_min);
        return py::make_tuple(scenario_list(en.probable), scenario_list(en.no_probable));
      },
      py::arg("system"), py::arg("max_len") = 4, py::arg("p_min") = 1e-3);
  m.def(
      "build_datasets",
      [](const psa::SystemModel& sys, int max_len, double p_min, double test_fraction,
         std::uint64_t seed) {
        psa::DatasetConfig cfg;
        cfg.max_len = max_len;
        cfg.p_min = p_min;
        cfg.test_fraction = test_fraction;
        cfg.seed = seed;
        const auto [probable, no_probable] = psa::build_datasets(sys, cfg);
        py::list p;
        py::list n;
        for (const auto& r : probable.records) p.append(record_dict(r));
        for (const auto& r : no_probable.records) n.append(record_dict(r));
        return py::make_tuple(p, n);
      },
      py::arg("system"), py::arg("max_len") = 4, py::arg("p_min") = 1e-3,
      py::arg("test_fraction") = 0.25, py::arg("seed") = 0);

  m.def("load_model", [](const std::string& path) { return to_py(io::load_model(path)); });
  m.def("save_model", [](const std::string& path, const py::object& model) {
    io::save_model(path, as_model(model));
  });

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "qpsa");
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a qpsa subcommand; returns (exit_code, stdout, stderr).");
}
