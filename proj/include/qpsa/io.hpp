#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "qpsa/model.hpp"
#include "qpsa/psa.hpp"
#include "qpsa/trainer.hpp"

namespace qpsa::io {

using Json = nlohmann::ordered_json;

/// Decimal with 17 significant digits; "inf", "-inf", "nan" otherwise.
std::string format_double(double value);

Json to_json(const hmm::CategoricalHmm& model);
Json to_json(const quantum::KrausModel& model);
Json to_json(const SequenceModel& model);

/// Dispatches on "type". A qhmm must pass validate_kraus at 1e-8 and an
/// hmm its stochasticity checks; otherwise InputError.
SequenceModel model_from_json(const Json& j);

SequenceModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const SequenceModel& model);

psa::SystemModel system_from_json(const Json& j);
Json to_json(const psa::SystemModel& system);
psa::SystemModel load_system(const std::filesystem::path& path);

/// One JSON object per line; "label", "prob" and "split" are optional.
std::vector<psa::LabeledSequence> load_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<psa::LabeledSequence>& records);

/// Reads a whole file; InputError naming the path if it cannot be opened.
std::string read_file(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// epoch,batch,loss,tau
std::string loss_log_csv(const std::vector<train::LossRecord>& log);

}  // namespace qpsa::io
