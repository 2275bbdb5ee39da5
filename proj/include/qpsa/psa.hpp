#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qpsa/types.hpp"

namespace qpsa::psa {

struct BasicEvent {
  std::string id;
  double p_down = 0.0;
  double p_repair = 0.0;
};

/// Bitmask over event indices; bit i set means event i is broken.
struct SystemState {
  std::uint32_t broken = 0;

  bool is_broken(int event) const { return (broken >> event) & 1U; }
  friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Component system: basic events with failure/repair probabilities and the
/// sets of events whose simultaneous failure is a severe system state.
class SystemModel {
 public:
  static constexpr int kMaxEvents = 31;

  /// Validates unique ids, probabilities in (0, 1), and nonempty severe
  /// sets that reference known ids.
  SystemModel(std::string name, std::vector<BasicEvent> events,
              std::vector<std::vector<std::string>> severe_states);

  const std::string& name() const { return name_; }
  int num_events() const { return static_cast<int>(events_.size()); }
  const std::vector<BasicEvent>& events() const { return events_; }
  const BasicEvent& event(int index) const { return events_.at(static_cast<std::size_t>(index)); }
  /// Severe sets as bitmasks.
  const std::vector<std::uint32_t>& severe_masks() const { return severe_masks_; }
  const std::vector<std::vector<std::string>>& severe_states() const {
    return severe_states_;
  }

  /// Throws InputError for an unknown id.
  int index_of(std::string_view id) const;
  SystemState state_from_ids(const std::vector<std::string>& broken_ids) const;

 private:
  std::string name_;
  std::vector<BasicEvent> events_;
  std::vector<std::vector<std::string>> severe_states_;
  std::vector<std::uint32_t> severe_masks_;
};

enum class Action { fail, repair };

struct Step {
  int event = 0;
  Action action = Action::fail;
  friend bool operator==(const Step&, const Step&) = default;
};

enum class Label { probable, no_probable };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

struct Scenario {
  std::vector<Step> steps;
  double probability = 1.0;
  Label label = Label::no_probable;
};

/// Toggles one event. Throws TransitionError when failing a broken event or
/// repairing a working one.
SystemState apply_event(const SystemModel& system, SystemState state,
                        int event, Action action);

/// True iff some severe set is contained in the broken set.
bool is_severe(SystemState state, const SystemModel& system);

/// Left-to-right product of p_down (fail) and p_repair (repair) over the
/// steps; throws TransitionError on an illegal step.
double scenario_probability(const SystemModel& system,
                            const std::vector<Step>& steps,
                            SystemState initial = {});

/// Probable iff the probability exceeds p_min. Products that agree with
/// p_min to 1e-12 relative are ties and go to no_probable.
Label classify_probability(double probability, double p_min);

struct EnumerationLimits {
  int max_events = 12;
  int max_len = 12;
  /// Cap on search-tree nodes visited.
  std::size_t max_nodes = 20'000'000;
};

struct Enumeration {
  std::vector<Scenario> probable;
  std::vector<Scenario> no_probable;
};

/// Depth-first enumeration of every legal step sequence of length at most
/// `max_len` that first reaches a severe state on its last step. Events are
/// expanded in index order; each list is stable-sorted by descending
/// probability.
Enumeration enumerate_scenarios(const SystemModel& system,
                                SystemState initial, int max_len, double p_min,
                                const EnumerationLimits& limits = {});

/// (i, fail) -> 2i, (i, repair) -> 2i+1.
Sequence encode_scenario(const std::vector<Step>& steps);
/// Inverse of encode_scenario; throws InputError for symbols >= 2n.
std::vector<Step> decode_sequence(SequenceView sequence, int num_events);

/// Fail steps for every broken event, in index order: one history that
/// leads from all-up to `state`.
std::vector<Step> history_to(SystemState state, int num_events);

enum class Split { train, test };

std::string_view split_name(Split split);
Split parse_split(std::string_view text);

struct LabeledSequence {
  Sequence sequence;
  std::optional<Label> label;
  std::optional<double> prob;
  std::optional<Split> split;
};

struct ScenarioDataset {
  int alphabet_size = 0;
  std::vector<LabeledSequence> records;

  std::vector<Sequence> sequences(std::optional<Split> only = std::nullopt) const;
};

struct DatasetConfig {
  int max_len = 4;
  double p_min = 1e-3;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  SystemState initial;
  EnumerationLimits limits;
};

/// Enumerates, encodes, and splits each class into train/test with a seeded
/// shuffle; round(test_fraction * size) sequences of each class go to test.
/// Throws DatasetError if a class, or its training split, comes out empty.
std::pair<ScenarioDataset, ScenarioDataset> build_datasets(
    const SystemModel& system, const DatasetConfig& config);

}  // namespace qpsa::psa
