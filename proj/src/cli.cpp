#include "qpsa/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "qpsa/classifier.hpp"
#include "qpsa/error.hpp"
#include "qpsa/io.hpp"
#include "qpsa/metrics.hpp"
#include "qpsa/psa.hpp"
#include "qpsa/random.hpp"
#include "qpsa/trainer.hpp"

namespace qpsa::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;
using io::format_double;

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    json_["command"] = std::move(command);
    json_["argv"] = args;
    json_["tool_version"] = QPSA_VERSION;
  }

  Json& operator[](const char* key) { return json_[key]; }

  void write(const fs::path& dir) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    json_["wall_clock_seconds"] =
        std::chrono::duration<double>(elapsed).count();
    io::write_file(dir / "manifest.json", json_.dump(1) + "\n");
  }

 private:
  std::chrono::steady_clock::time_point start_;
  Json json_;
};

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(fmt::format("cannot create '{}': {}", dir, ec.message()));
  return p;
}

std::vector<psa::LabeledSequence> load_records(const std::vector<std::string>& paths,
                                               const std::string& split) {
  std::optional<psa::Split> only;
  if (split != "all") only = psa::parse_split(split);
  std::vector<psa::LabeledSequence> out;
  for (const auto& p : paths) {
    for (auto& rec : io::load_jsonl(p)) {
      if (only && rec.split != only) continue;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<Sequence> sequences_of(const std::vector<psa::LabeledSequence>& recs) {
  std::vector<Sequence> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(r.sequence);
  return out;
}

int max_symbol(const std::vector<psa::LabeledSequence>& recs) {
  int m = -1;
  for (const auto& r : recs) {
    for (int s : r.sequence) m = std::max(m, s);
  }
  return m;
}

void check_alphabet(const std::vector<psa::LabeledSequence>& recs, int alphabet) {
  const int m = max_symbol(recs);
  if (m >= alphabet) {
    throw InputError(fmt::format(
        "data uses symbol {} but the model alphabet has size {}", m, alphabet));
  }
  for (const auto& r : recs) {
    for (int s : r.sequence) {
      if (s < 0) throw InputError(fmt::format("negative symbol {}", s));
    }
  }
}

// --alphabet-size, else 2n from --system, else inferred from every record
// in the given files (all splits).
int resolve_alphabet(int flag_value, const std::string& system_path,
                     const std::vector<std::string>& data_paths) {
  if (flag_value > 0) return flag_value;
  if (!system_path.empty()) return 2 * io::load_system(system_path).num_events();
  const int m = max_symbol(load_records(data_paths, "all"));
  return std::max(m + 1, 2);
}

struct FitParams {
  int dim = 4;
  int multiplicity = 1;
  double learning_rate = 0.05;
  double decay = 0.95;
  int num_batches = 5;
  int epochs = 100;
  int max_iters = 200;
  double tol = 1e-6;
  std::string initial_belief = "mixed";
  std::string gradient = "analytic";

  Json to_json() const {
    Json j;
    j["K"] = dim;
    j["mu"] = multiplicity;
    j["lr"] = learning_rate;
    j["decay"] = decay;
    j["batches"] = num_batches;
    j["epochs"] = epochs;
    j["max_iters"] = max_iters;
    j["tol"] = tol;
    j["initial_belief"] = initial_belief;
    j["gradient"] = gradient;
    return j;
  }
};

void add_fit_flags(CLI::App* sub, FitParams& p) {
  sub->add_option("--K", p.dim, "Hidden dimension")->check(CLI::PositiveNumber);
  sub->add_option("--mu", p.multiplicity, "Kraus operators per symbol")
      ->check(CLI::PositiveNumber);
  sub->add_option("--lr", p.learning_rate, "Initial learning rate tau");
  sub->add_option("--decay", p.decay, "Learning-rate decay per epoch");
  sub->add_option("--batches", p.num_batches, "Batches per epoch");
  sub->add_option("--epochs", p.epochs, "Training epochs");
  sub->add_option("--max-iters", p.max_iters, "Baum-Welch iteration cap");
  sub->add_option("--tol", p.tol, "Baum-Welch convergence tolerance");
  sub->add_option("--initial-belief", p.initial_belief, "QHMM initial belief")
      ->check(CLI::IsMember({"mixed", "pure"}));
  sub->add_option("--gradient", p.gradient, "QHMM gradient mode")
      ->check(CLI::IsMember({"analytic", "finite_difference"}));
}

// Fills fields from a JSON config unless the flag was given explicitly.
void apply_config_file(const std::string& path, const CLI::App* sub, FitParams& p) {
  if (path.empty()) return;
  const Json cfg = io::read_json(path);
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (cfg.contains(key) && sub->count(flag) == 0) {
      try {
        field = cfg.at(key).get<std::decay_t<decltype(field)>>();
      } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("config '{}': key '{}': {}", path, key, e.what()));
      }
    }
  };
  take("K", "--K", p.dim);
  take("mu", "--mu", p.multiplicity);
  take("lr", "--lr", p.learning_rate);
  take("decay", "--decay", p.decay);
  take("batches", "--batches", p.num_batches);
  take("epochs", "--epochs", p.epochs);
  take("max_iters", "--max-iters", p.max_iters);
  take("tol", "--tol", p.tol);
  take("initial_belief", "--initial-belief", p.initial_belief);
  take("gradient", "--gradient", p.gradient);
}

struct Fitted {
  SequenceModel model;
  std::vector<train::LossRecord> log;
};

Fitted fit_model(const std::string& kind, const std::vector<Sequence>& data,
                 int alphabet, const FitParams& p, std::uint64_t seed) {
  if (kind == "hmm") {
    hmm::BaumWelchConfig cfg{p.max_iters, p.tol, seed};
    auto res = hmm::baum_welch_fit(data, p.dim, alphabet, cfg);
    std::vector<train::LossRecord> log;
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < res.log_likelihood_trace.size(); ++i) {
      log.push_back(train::LossRecord{static_cast<int>(i), 1,
                                      -res.log_likelihood_trace[i] / n, 0.0});
    }
    return Fitted{std::move(res.model), std::move(log)};
  }
  train::TrainConfig cfg;
  cfg.learning_rate = p.learning_rate;
  cfg.decay = p.decay;
  cfg.num_batches = p.num_batches;
  cfg.epochs = p.epochs;
  cfg.multiplicity = p.multiplicity;
  cfg.dim = p.dim;
  cfg.seed = seed;
  cfg.gradient_mode = p.gradient == "analytic" ? train::GradientMode::analytic
                                               : train::GradientMode::finite_difference;
  cfg.initial_belief = p.initial_belief == "pure" ? train::InitialBelief::pure
                                                  : train::InitialBelief::maximally_mixed;
  auto res = train::train_qhmm(data, cfg, alphabet);
  return Fitted{std::move(res.model), std::move(res.log)};
}

bool model_is_valid(const SequenceModel& model) {
  if (const auto* q = std::get_if<quantum::KrausModel>(&model)) {
    return quantum::validate_kraus(*q).passed;
  }
  return true;  // CategoricalHmm validates on construction
}

// ---------------------------------------------------------------- commands

struct MakeDatasetOptions {
  std::string system;
  std::string out;
  std::uint64_t seed = 0;
  int max_len = 4;
  double p_min = 1e-3;
  double test_fraction = 0.25;
  std::string start_state;
};

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> ids;
  std::stringstream ss(text);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!id.empty()) ids.push_back(id);
  }
  return ids;
}

int make_dataset(const MakeDatasetOptions& o, Manifest& manifest, std::ostream& out) {
  const psa::SystemModel system = io::load_system(o.system);
  psa::DatasetConfig cfg;
  cfg.max_len = o.max_len;
  cfg.p_min = o.p_min;
  cfg.test_fraction = o.test_fraction;
  cfg.seed = o.seed;
  cfg.initial = system.state_from_ids(split_ids(o.start_state));
  const auto [probable, no_probable] = psa::build_datasets(system, cfg);

  const fs::path dir = prepare_out_dir(o.out);
  io::write_file(dir / "probable.jsonl", io::to_jsonl(probable.records));
  io::write_file(dir / "no_probable.jsonl", io::to_jsonl(no_probable.records));

  Json config;
  config["max_len"] = o.max_len;
  config["p_min"] = o.p_min;
  config["test_fraction"] = o.test_fraction;
  config["start_state"] = split_ids(o.start_state);
  config["alphabet_size"] = probable.alphabet_size;
  manifest["config"] = std::move(config);
  manifest["seed"] = o.seed;
  manifest["inputs"] = std::vector<std::string>{o.system};
  manifest["outputs"] = std::vector<std::string>{(dir / "probable.jsonl").string(),
                                                 (dir / "no_probable.jsonl").string()};
  manifest.write(dir);
  out << fmt::format("probable={} no_probable={} alphabet_size={}\n",
                     probable.records.size(), no_probable.records.size(),
                     probable.alphabet_size);
  return kExitOk;
}

struct TrainOptions {
  std::string kind;
  std::vector<std::string> data;
  std::string split = "train";
  std::string out;
  std::uint64_t seed = 0;
  int alphabet_size = 0;
  std::string system;
  std::string config;
  FitParams fit;
};

int train_cmd(const TrainOptions& o, Manifest& manifest, std::ostream& out) {
  const auto records = load_records(o.data, o.split);
  if (records.empty()) throw InputError("no training sequences after split filter");
  const int alphabet = resolve_alphabet(o.alphabet_size, o.system, o.data);
  check_alphabet(records, alphabet);

  const fs::path dir = prepare_out_dir(o.out);
  const fs::path model_path = dir / "model.json";
  const fs::path loss_path = dir / "loss.csv";
  try {
    Fitted fitted = fit_model(o.kind, sequences_of(records), alphabet, o.fit, o.seed);
    if (!model_is_valid(fitted.model)) {
      throw TrainingError("trained model fails validation");
    }
    io::save_model(model_path, fitted.model);
    io::write_file(loss_path, io::loss_log_csv(fitted.log));

    Json config = o.fit.to_json();
    config["kind"] = o.kind;
    config["split"] = o.split;
    config["alphabet_size"] = alphabet;
    manifest["config"] = std::move(config);
    manifest["seed"] = o.seed;
    manifest["inputs"] = o.data;
    manifest["outputs"] =
        std::vector<std::string>{model_path.string(), loss_path.string()};
    manifest.write(dir);
    const double final_loss = fitted.log.empty() ? std::nan("") : fitted.log.back().loss;
    out << fmt::format("kind={} sequences={} alphabet_size={} final_loss={}\n",
                       o.kind, records.size(), alphabet, format_double(final_loss));
  } catch (...) {
    std::error_code ec;
    fs::remove(model_path, ec);
    fs::remove(loss_path, ec);
    fs::remove(dir / "manifest.json", ec);
    throw;
  }
  return kExitOk;
}

struct EvalOptions {
  std::string model;
  std::vector<std::string> data;
  std::string split = "all";
  std::string out;
};

int eval_cmd(const EvalOptions& o, Manifest& manifest, std::ostream& out) {
  const SequenceModel model = io::load_model(o.model);
  const auto records = load_records(o.data, o.split);
  if (records.empty()) throw InputError("no sequences to evaluate");
  check_alphabet(records, alphabet_size(model));

  const auto seqs = sequences_of(records);
  const auto scored = metrics::score_dataset(model, seqs);
  std::string csv = "sequence_id,length,log_prob,da\n";
  double total = 0.0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    csv += fmt::format("{},{},{},{}\n", i, seqs[i].size(),
                       format_double(scored[i].log_prob),
                       format_double(scored[i].da.value));
    total += scored[i].da.value;
  }
  const double mean = total / static_cast<double>(scored.size());

  const fs::path dir = prepare_out_dir(o.out);
  io::write_file(dir / "da.csv", csv);
  Json config;
  config["split"] = o.split;
  config["model_kind"] = kind_name(model);
  config["mean_da"] = mean;
  manifest["config"] = std::move(config);
  manifest["inputs"] = [&] {
    auto v = o.data;
    v.insert(v.begin(), o.model);
    return v;
  }();
  manifest["outputs"] = std::vector<std::string>{(dir / "da.csv").string()};
  manifest.write(dir);
  out << fmt::format("mean_da={} sequences={}\n", format_double(mean), scored.size());
  return kExitOk;
}

struct GenerateOptions {
  std::string model;
  int count = 0;
  int length = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string system;
  std::optional<std::string> start_state;
};

int generate_cmd(const GenerateOptions& o, Manifest& manifest, std::ostream& out,
                 std::ostream& err) {
  const SequenceModel model = io::load_model(o.model);
  if (o.count < 0) throw InputError("--count must be >= 0");
  if (o.length < 1) throw InputError("--length must be >= 1");
  if (o.start_state && o.system.empty()) {
    throw InputError("--start-state requires --system");
  }

  std::optional<psa::SystemModel> system;
  psa::SystemState start;
  Sequence prefix;
  if (!o.system.empty()) {
    system = io::load_system(o.system);
    if (2 * system->num_events() != alphabet_size(model)) {
      throw InputError(fmt::format(
          "system has {} events (alphabet {}), model alphabet is {}",
          system->num_events(), 2 * system->num_events(), alphabet_size(model)));
    }
    if (o.start_state) {
      start = system->state_from_ids(split_ids(*o.start_state));
      prefix = psa::encode_scenario(psa::history_to(start, system->num_events()));
    }
  }

  Rng seeds(o.seed);
  std::string jsonl;
  for (int i = 0; i < o.count; ++i) {
    const Sequence seq = sample(model, o.length, seeds(), prefix);
    Json j;
    j["sequence"] = seq;
    if (system) {
      const auto steps = psa::decode_sequence(seq, system->num_events());
      try {
        psa::scenario_probability(*system, steps, start);
        Json js = Json::array();
        for (const auto& s : steps) {
          Json step;
          step["event"] = system->event(s.event).id;
          step["action"] = s.action == psa::Action::fail ? "fail" : "repair";
          js.push_back(std::move(step));
        }
        j["steps"] = std::move(js);
      } catch (const TransitionError& e) {
        err << fmt::format("warning: sequence {} is not a legal scenario: {}\n", i,
                           e.what());
      }
    }
    jsonl += j.dump();
    jsonl += '\n';
  }

  const fs::path dir = prepare_out_dir(o.out);
  io::write_file(dir / "generated.jsonl", jsonl);
  Json config;
  config["count"] = o.count;
  config["length"] = o.length;
  config["start_state"] = o.start_state ? split_ids(*o.start_state)
                                        : std::vector<std::string>{};
  config["prefix"] = prefix;
  manifest["config"] = std::move(config);
  manifest["seed"] = o.seed;
  manifest["inputs"] = o.system.empty() ? std::vector<std::string>{o.model}
                                        : std::vector<std::string>{o.model, o.system};
  manifest["outputs"] = std::vector<std::string>{(dir / "generated.jsonl").string()};
  manifest.write(dir);
  out << fmt::format("generated={}\n", o.count);
  return kExitOk;
}

struct ClassifyOptions {
  std::string probable_model;
  std::string no_probable_model;
  std::vector<std::string> data;
  std::string split = "all";
  std::string out;
};

int classify_cmd(const ClassifyOptions& o, Manifest& manifest, std::ostream& out) {
  classify::TwoModelClassifier clf(io::load_model(o.probable_model),
                                   io::load_model(o.no_probable_model));
  const auto records = load_records(o.data, o.split);
  if (records.empty()) throw InputError("no sequences to classify");
  check_alphabet(records, clf.alphabet_size());

  std::string csv = "sequence_id,true_label,pred_label,da_probable,da_no_probable\n";
  bool all_labeled = true;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto c = classify::classify(clf, records[i].sequence);
    const auto& truth = records[i].label;
    all_labeled = all_labeled && truth.has_value();
    if (truth && *truth == c.label) ++correct;
    csv += fmt::format("{},{},{},{},{}\n", i,
                       truth ? psa::label_name(*truth) : std::string_view(),
                       psa::label_name(c.label), format_double(c.da_probable),
                       format_double(c.da_no_probable));
  }

  const fs::path dir = prepare_out_dir(o.out);
  io::write_file(dir / "classification.csv", csv);
  Json config;
  config["split"] = o.split;
  if (all_labeled) {
    const auto ev = classify::evaluate_classifier(clf, records);
    config["accuracy"] = ev.accuracy;
    config["confusion"] = ev.confusion;
    out << fmt::format("accuracy={} sequences={}\n", format_double(ev.accuracy),
                       ev.count);
    out << fmt::format("confusion probable->[{}, {}] no_probable->[{}, {}]\n",
                       ev.confusion[0][0], ev.confusion[0][1], ev.confusion[1][0],
                       ev.confusion[1][1]);
  } else {
    out << fmt::format("classified={} (unlabeled data, no accuracy)\n", records.size());
  }
  manifest["config"] = std::move(config);
  manifest["inputs"] = [&] {
    auto v = o.data;
    v.insert(v.begin(), {o.probable_model, o.no_probable_model});
    return v;
  }();
  manifest["outputs"] = std::vector<std::string>{(dir / "classification.csv").string()};
  manifest.write(dir);
  return kExitOk;
}

struct CompareOptions {
  std::vector<std::string> data;
  std::vector<std::uint64_t> seeds;
  std::string out;
  int alphabet_size = 0;
  std::string system;
  FitParams fit;
};

struct MeanStd {
  std::string mean;
  std::string std;
};

MeanStd summarize(const std::vector<double>& values) {
  if (values.empty()) return {"nan", ""};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {format_double(mean), ""};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {format_double(mean),
          format_double(std::sqrt(ss / static_cast<double>(values.size() - 1)))};
}

int compare_cmd(const CompareOptions& o, Manifest& manifest, std::ostream& out,
                std::ostream& err) {
  const int alphabet = resolve_alphabet(o.alphabet_size, o.system, o.data);
  std::string csv = "dataset,model_kind,split,mean_da,std_da\n";
  Json directions = Json::array();
  bool any_failed = false;

  for (const auto& path : o.data) {
    const std::string name = fs::path(path).stem().string();
    const auto records = load_records({path}, "all");
    check_alphabet(records, alphabet);
    std::vector<Sequence> train_set;
    std::vector<Sequence> test_set;
    for (const auto& r : records) {
      (r.split == psa::Split::test ? test_set : train_set).push_back(r.sequence);
    }
    if (train_set.empty()) throw InputError(fmt::format("'{}' has no training split", path));

    std::map<std::string, double> mean_test;
    for (const std::string kind : {"hmm", "qhmm"}) {
      std::vector<double> da_train;
      std::vector<double> da_test;
      bool failed = false;
      for (std::uint64_t seed : o.seeds) {
        try {
          const Fitted f = fit_model(kind, train_set, alphabet, o.fit, seed);
          da_train.push_back(metrics::average_da(f.model, train_set));
          if (!test_set.empty()) da_test.push_back(metrics::average_da(f.model, test_set));
        } catch (const Error& e) {
          err << fmt::format("warning: {} training on '{}' seed {} failed: {}\n",
                             kind, path, seed, e.what());
          failed = true;
        }
      }
      any_failed = any_failed || failed;
      for (const auto& [split, values] :
           {std::pair{"train", &da_train}, std::pair{"test", &da_test}}) {
        if (failed) {
          csv += fmt::format("{},{},{},failed,\n", name, kind, split);
          continue;
        }
        const MeanStd s = summarize(*values);
        csv += fmt::format("{},{},{},{},{}\n", name, kind, split, s.mean, s.std);
      }
      if (!failed && !da_test.empty()) {
        mean_test[kind] = 0.0;
        for (double v : da_test) mean_test[kind] += v / static_cast<double>(da_test.size());
      }
    }
    if (mean_test.size() == 2) {
      const bool holds = mean_test["qhmm"] >= mean_test["hmm"];
      Json d;
      d["dataset"] = name;
      d["qhmm_test_mean_da"] = mean_test["qhmm"];
      d["hmm_test_mean_da"] = mean_test["hmm"];
      d["qhmm_ge_hmm"] = holds;
      directions.push_back(std::move(d));
      out << fmt::format("{}: test mean DA qhmm={} hmm={} ({})\n", name,
                         format_double(mean_test["qhmm"]),
                         format_double(mean_test["hmm"]),
                         holds ? "qhmm >= hmm" : "qhmm < hmm");
    }
  }

  const fs::path dir = prepare_out_dir(o.out);
  io::write_file(dir / "comparison.csv", csv);
  Json config = o.fit.to_json();
  config["alphabet_size"] = alphabet;
  config["seeds"] = o.seeds;
  manifest["config"] = std::move(config);
  manifest["inputs"] = o.data;
  manifest["outputs"] = std::vector<std::string>{(dir / "comparison.csv").string()};
  manifest["direction"] = std::move(directions);
  manifest["failed_rows"] = any_failed;
  manifest.write(dir);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Learn HMM/QHMM models of failure scenarios and classify them",
               "qpsa"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QPSA_VERSION);

  MakeDatasetOptions md;
  auto* md_cmd = app.add_subcommand("make-dataset", "Enumerate scenarios into datasets");
  md_cmd->add_option("--system", md.system, "System JSON")->required();
  md_cmd->add_option("--out", md.out, "Output directory")->required();
  md_cmd->add_option("--seed", md.seed, "Split seed")->required();
  md_cmd->add_option("--max-len", md.max_len, "Longest scenario");
  md_cmd->add_option("--p-min", md.p_min, "Probability threshold");
  md_cmd->add_option("--test-fraction", md.test_fraction, "Held-out share per class");
  md_cmd->add_option("--start-state", md.start_state,
                     "Comma-separated ids of initially broken events");

  TrainOptions tr;
  auto* tr_cmd = app.add_subcommand("train", "Fit an HMM or QHMM");
  tr_cmd->add_option("--kind", tr.kind, "Model kind")
      ->required()
      ->check(CLI::IsMember({"hmm", "qhmm"}));
  tr_cmd->add_option("--data", tr.data, "Dataset JSONL (repeatable)")->required();
  tr_cmd->add_option("--split", tr.split, "Records to train on")
      ->check(CLI::IsMember({"train", "test", "all"}));
  tr_cmd->add_option("--out", tr.out, "Output directory")->required();
  tr_cmd->add_option("--seed", tr.seed, "Initialisation/shuffle seed")->required();
  tr_cmd->add_option("--alphabet-size", tr.alphabet_size, "Override alphabet size");
  tr_cmd->add_option("--system", tr.system, "System JSON (alphabet = 2n)");
  tr_cmd->add_option("--config", tr.config, "JSON training config");
  add_fit_flags(tr_cmd, tr.fit);

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "Per-sequence DA report");
  ev_cmd->add_option("--model", ev.model, "Model JSON")->required();
  ev_cmd->add_option("--data", ev.data, "Dataset JSONL (repeatable)")->required();
  ev_cmd->add_option("--split", ev.split, "Records to score")
      ->check(CLI::IsMember({"train", "test", "all"}));
  ev_cmd->add_option("--out", ev.out, "Output directory")->required();

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample sequences from a model");
  gen_cmd->add_option("--model", gen.model, "Model JSON")->required();
  gen_cmd->add_option("--count", gen.count, "Number of sequences")->required();
  gen_cmd->add_option("--length", gen.length, "Symbols per sequence")->required();
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--system", gen.system, "System JSON for decoding");
  gen_cmd->add_option("--start-state", gen.start_state,
                      "Comma-separated ids of broken events to condition on");

  ClassifyOptions cl;
  auto* cl_cmd = app.add_subcommand("classify", "Two-model probable/no-probable decision");
  cl_cmd->add_option("--probable-model", cl.probable_model, "Model of probable scenarios")
      ->required();
  cl_cmd->add_option("--no-probable-model", cl.no_probable_model,
                     "Model of no-probable scenarios")
      ->required();
  cl_cmd->add_option("--data", cl.data, "Dataset JSONL (repeatable)")->required();
  cl_cmd->add_option("--split", cl.split, "Records to classify")
      ->check(CLI::IsMember({"train", "test", "all"}));
  cl_cmd->add_option("--out", cl.out, "Output directory")->required();

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "HMM vs QHMM mean DA table");
  cmp_cmd->add_option("--data", cmp.data, "Dataset JSONL (repeatable)")->required();
  cmp_cmd->add_option("--seed", cmp.seeds, "Seed (repeatable)")->required();
  cmp_cmd->add_option("--out", cmp.out, "Output directory")->required();
  cmp_cmd->add_option("--alphabet-size", cmp.alphabet_size, "Override alphabet size");
  cmp_cmd->add_option("--system", cmp.system, "System JSON (alphabet = 2n)");
  add_fit_flags(cmp_cmd, cmp.fit);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*md_cmd) {
      Manifest m("make-dataset", args);
      return make_dataset(md, m, out);
    }
    if (*tr_cmd) {
      apply_config_file(tr.config, tr_cmd, tr.fit);
      Manifest m("train", args);
      return train_cmd(tr, m, out);
    }
    if (*ev_cmd) {
      Manifest m("eval", args);
      return eval_cmd(ev, m, out);
    }
    if (*gen_cmd) {
      Manifest m("generate", args);
      return generate_cmd(gen, m, out, err);
    }
    if (*cl_cmd) {
      Manifest m("classify", args);
      return classify_cmd(cl, m, out);
    }
    if (*cmp_cmd) {
      Manifest m("compare", args);
      return compare_cmd(cmp, m, out, err);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DatasetError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ResourceLimitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TransitionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace qpsa::cli
