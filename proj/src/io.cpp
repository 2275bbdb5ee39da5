#include "qpsa/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "qpsa/error.hpp"

namespace qpsa::io {

namespace {

template <typename T>
T get_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(fmt::format("missing field '{}'", key));
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("field '{}': {}", key, e.what()));
  }
}

RealMatrix real_matrix(const Json& j, const char* key, int rows, int cols) {
  const auto rows_data = get_field<std::vector<std::vector<double>>>(j, key);
  if (static_cast<int>(rows_data.size()) != rows) {
    throw InputError(fmt::format("'{}' has {} rows, expected {}", key,
                                 rows_data.size(), rows));
  }
  RealMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(rows_data[r].size()) != cols) {
      throw InputError(fmt::format("'{}' row {} has {} entries, expected {}",
                                   key, r, rows_data[r].size(), cols));
    }
    for (int c = 0; c < cols; ++c) m(r, c) = rows_data[r][c];
  }
  return m;
}

Json real_rows(const RealMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

using Tensor3 = std::vector<std::vector<std::vector<double>>>;
using Tensor4 = std::vector<Tensor3>;

ComplexMatrix complex_from_parts(const std::vector<std::vector<double>>& re,
                                 const std::vector<std::vector<double>>& im,
                                 int k, const std::string& what) {
  if (static_cast<int>(re.size()) != k || static_cast<int>(im.size()) != k) {
    throw InputError(fmt::format("{} must have {} rows", what, k));
  }
  ComplexMatrix m(k, k);
  for (int r = 0; r < k; ++r) {
    if (static_cast<int>(re[r].size()) != k || static_cast<int>(im[r].size()) != k) {
      throw InputError(fmt::format("{} row {} must have {} entries", what, r, k));
    }
    for (int c = 0; c < k; ++c) m(r, c) = Complex(re[r][c], im[r][c]);
  }
  return m;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

Json to_json(const hmm::CategoricalHmm& model) {
  Json j;
  j["type"] = "hmm";
  j["K"] = model.num_states();
  j["M"] = model.alphabet_size();
  j["transition"] = real_rows(model.transition());
  j["emission"] = real_rows(model.emission());
  Json start = Json::array();
  for (Eigen::Index i = 0; i < model.start().size(); ++i) start.push_back(model.start()(i));
  j["start"] = std::move(start);
  return j;
}

Json to_json(const quantum::KrausModel& model) {
  const int k = model.dim();
  Json j;
  j["type"] = "qhmm";
  j["K"] = k;
  j["M"] = model.alphabet_size();
  j["mu"] = model.multiplicity();
  Json kre = Json::array();
  Json kim = Json::array();
  for (int x = 0; x < model.alphabet_size(); ++x) {
    Json xre = Json::array();
    Json xim = Json::array();
    for (int m = 0; m < model.multiplicity(); ++m) {
      const ComplexMatrix& op = model.op(x, m);
      xre.push_back(real_rows(op.real()));
      xim.push_back(real_rows(op.imag()));
    }
    kre.push_back(std::move(xre));
    kim.push_back(std::move(xim));
  }
  j["kraus_re"] = std::move(kre);
  j["kraus_im"] = std::move(kim);
  const ComplexMatrix& pi0 = model.initial_state().matrix();
  j["pi0_re"] = real_rows(pi0.real());
  j["pi0_im"] = real_rows(pi0.imag());
  return j;
}

Json to_json(const SequenceModel& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

SequenceModel model_from_json(const Json& j) {
  const auto type = get_field<std::string>(j, "type");
  if (type == "hmm") {
    const int k = get_field<int>(j, "K");
    const int m = get_field<int>(j, "M");
    if (k < 1 || m < 1) throw InputError("hmm K and M must be >= 1");
    RealMatrix transition = real_matrix(j, "transition", k, k);
    RealMatrix emission = real_matrix(j, "emission", k, m);
    const auto start_v = get_field<std::vector<double>>(j, "start");
    if (static_cast<int>(start_v.size()) != k) {
      throw InputError(fmt::format("'start' has {} entries, expected {}",
                                   start_v.size(), k));
    }
    RealVector start = Eigen::Map<const RealVector>(start_v.data(), k);
    return hmm::CategoricalHmm(std::move(transition), std::move(emission),
                               std::move(start));
  }
  if (type == "qhmm") {
    const int k = get_field<int>(j, "K");
    const int m = get_field<int>(j, "M");
    const int mu = get_field<int>(j, "mu");
    if (k < 1 || m < 1 || mu < 1) throw InputError("qhmm K, M and mu must be >= 1");
    const auto kre = get_field<Tensor4>(j, "kraus_re");
    const auto kim = get_field<Tensor4>(j, "kraus_im");
    if (static_cast<int>(kre.size()) != m || static_cast<int>(kim.size()) != m) {
      throw InputError(fmt::format("kraus arrays must have {} symbols", m));
    }
    std::vector<ComplexMatrix> ops;
    for (int x = 0; x < m; ++x) {
      if (static_cast<int>(kre[x].size()) != mu || static_cast<int>(kim[x].size()) != mu) {
        throw InputError(fmt::format("symbol {} must have {} operators", x, mu));
      }
      for (int i = 0; i < mu; ++i) {
        ops.push_back(complex_from_parts(kre[x][i], kim[x][i], k,
                                         fmt::format("kraus[{}][{}]", x, i)));
      }
    }
    ComplexMatrix pi0 = complex_from_parts(
        get_field<std::vector<std::vector<double>>>(j, "pi0_re"),
        get_field<std::vector<std::vector<double>>>(j, "pi0_im"), k, "pi0");
    quantum::KrausModel model(m, mu, std::move(ops),
                              quantum::DensityMatrix(std::move(pi0)));
    const auto v = quantum::validate_kraus(model);
    if (!v.passed) {
      throw InputError(fmt::format(
          "qhmm fails validation (completeness residual {})", v.completeness));
    }
    return model;
  }
  throw InputError(fmt::format("unknown model type '{}'", type));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << contents;
  if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

SequenceModel load_model(const std::filesystem::path& path) {
  const Json j = read_json(path);
  try {
    return model_from_json(j);
  } catch (const InputError& e) {
    throw InputError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void save_model(const std::filesystem::path& path, const SequenceModel& model) {
  write_file(path, to_json(model).dump(1) + "\n");
}

psa::SystemModel system_from_json(const Json& j) {
  std::vector<psa::BasicEvent> events;
  const auto name = j.contains("name") ? get_field<std::string>(j, "name") : std::string();
  if (!j.contains("events") || !j.at("events").is_array()) {
    throw InputError("system needs an 'events' array");
  }
  for (const auto& ev : j.at("events")) {
    events.push_back(psa::BasicEvent{get_field<std::string>(ev, "id"),
                                     get_field<double>(ev, "p_down"),
                                     get_field<double>(ev, "p_repair")});
  }
  auto severe = get_field<std::vector<std::vector<std::string>>>(j, "severe_states");
  return psa::SystemModel(name, std::move(events), std::move(severe));
}

Json to_json(const psa::SystemModel& system) {
  Json j;
  j["name"] = system.name();
  Json events = Json::array();
  for (const auto& ev : system.events()) {
    Json e;
    e["id"] = ev.id;
    e["p_down"] = ev.p_down;
    e["p_repair"] = ev.p_repair;
    events.push_back(std::move(e));
  }
  j["events"] = std::move(events);
  j["severe_states"] = system.severe_states();
  return j;
}

psa::SystemModel load_system(const std::filesystem::path& path) {
  const Json j = read_json(path);
  try {
    return system_from_json(j);
  } catch (const InputError& e) {
    throw InputError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

std::vector<psa::LabeledSequence> load_jsonl(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::vector<psa::LabeledSequence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      psa::LabeledSequence rec;
      rec.sequence = get_field<Sequence>(j, "sequence");
      if (rec.sequence.empty()) throw InputError("empty sequence");
      if (j.contains("label")) rec.label = psa::parse_label(get_field<std::string>(j, "label"));
      if (j.contains("prob")) rec.prob = get_field<double>(j, "prob");
      if (j.contains("split")) rec.split = psa::parse_split(get_field<std::string>(j, "split"));
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<psa::LabeledSequence>& records) {
  std::string out;
  for (const auto& r : records) {
    Json j;
    j["sequence"] = r.sequence;
    if (r.label) j["label"] = psa::label_name(*r.label);
    if (r.prob) j["prob"] = *r.prob;
    if (r.split) j["split"] = psa::split_name(*r.split);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string loss_log_csv(const std::vector<train::LossRecord>& log) {
  std::string out = "epoch,batch,loss,tau\n";
  for (const auto& r : log) {
    out += fmt::format("{},{},{},{}\n", r.epoch, r.batch, format_double(r.loss),
                       format_double(r.tau));
  }
  return out;
}

}  // namespace qpsa::io
