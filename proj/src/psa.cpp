#include "qpsa/psa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "qpsa/error.hpp"
#include "qpsa/random.hpp"

namespace qpsa::psa {

namespace {

constexpr double kTieRelTol = 1e-12;

void check_event(const SystemModel& system, int event) {
  if (event < 0 || event >= system.num_events()) {
    throw InputError(fmt::format("event index {} outside [0, {})", event,
                                 system.num_events()));
  }
}

struct Enumerator {
  const SystemModel& system;
  int max_len;
  double p_min;
  std::size_t max_nodes;
  std::size_t nodes = 0;
  std::vector<Step> path;
  Enumeration out;

  void visit(SystemState state, double prob) {
    for (int i = 0; i < system.num_events(); ++i) {
      if (++nodes > max_nodes) {
        throw ResourceLimitError(fmt::format(
            "scenario enumeration exceeded {} search nodes; lower max_len",
            max_nodes));
      }
      const bool broken = state.is_broken(i);
      const Action action = broken ? Action::repair : Action::fail;
      const auto& ev = system.event(i);
      const double p = prob * (broken ? ev.p_repair : ev.p_down);
      const SystemState next{state.broken ^ (1U << i)};
      path.push_back(Step{i, action});
      if (is_severe(next, system)) {
        const Label label = classify_probability(p, p_min);
        auto& bucket = label == Label::probable ? out.probable : out.no_probable;
        bucket.push_back(Scenario{path, p, label});
      } else if (static_cast<int>(path.size()) < max_len) {
        visit(next, p);
      }
      path.pop_back();
    }
  }
};

}  // namespace

std::string_view label_name(Label label) {
  return label == Label::probable ? "probable" : "no_probable";
}

Label parse_label(std::string_view text) {
  if (text == "probable") return Label::probable;
  if (text == "no_probable") return Label::no_probable;
  throw InputError(fmt::format("unknown label '{}'", text));
}

std::string_view split_name(Split split) {
  return split == Split::train ? "train" : "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw InputError(fmt::format("unknown split '{}'", text));
}

SystemModel::SystemModel(std::string name, std::vector<BasicEvent> events,
                         std::vector<std::vector<std::string>> severe_states)
    : name_(std::move(name)),
      events_(std::move(events)),
      severe_states_(std::move(severe_states)) {
  if (events_.empty()) throw InputError("system has no basic events");
  if (static_cast<int>(events_.size()) > kMaxEvents) {
    throw InputError(fmt::format("system has {} events, at most {} supported",
                                 events_.size(), kMaxEvents));
  }
  std::set<std::string> seen;
  for (const auto& ev : events_) {
    if (!seen.insert(ev.id).second) {
      throw InputError(fmt::format("duplicate event id '{}'", ev.id));
    }
    if (!(ev.p_down > 0.0 && ev.p_down < 1.0) ||
        !(ev.p_repair > 0.0 && ev.p_repair < 1.0)) {
      throw InputError(fmt::format(
          "event '{}' probabilities must lie in (0, 1)", ev.id));
    }
  }
  if (severe_states_.empty()) throw InputError("system has no severe states");
  for (const auto& subset : severe_states_) {
    if (subset.empty()) throw InputError("empty severe state");
    severe_masks_.push_back(state_from_ids(subset).broken);
  }
}

int SystemModel::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].id == id) return static_cast<int>(i);
  }
  throw InputError(fmt::format("unknown event id '{}'", id));
}

SystemState SystemModel::state_from_ids(
    const std::vector<std::string>& broken_ids) const {
  SystemState s;
  for (const auto& id : broken_ids) s.broken |= 1U << index_of(id);
  return s;
}

SystemState apply_event(const SystemModel& system, SystemState state,
                        int event, Action action) {
  check_event(system, event);
  const bool broken = state.is_broken(event);
  if (action == Action::fail && broken) {
    throw TransitionError(fmt::format(
        "cannot fail event '{}': already broken", system.event(event).id));
  }
  if (action == Action::repair && !broken) {
    throw TransitionError(fmt::format(
        "cannot repair event '{}': not broken", system.event(event).id));
  }
  return SystemState{state.broken ^ (1U << event)};
}

bool is_severe(SystemState state, const SystemModel& system) {
  return std::any_of(system.severe_masks().begin(), system.severe_masks().end(),
                     [&](std::uint32_t mask) {
                       return (state.broken & mask) == mask;
                     });
}

double scenario_probability(const SystemModel& system,
                            const std::vector<Step>& steps,
                            SystemState initial) {
  double p = 1.0;
  SystemState state = initial;
  for (const auto& step : steps) {
    state = apply_event(system, state, step.event, step.action);
    const auto& ev = system.event(step.event);
    p *= step.action == Action::fail ? ev.p_down : ev.p_repair;
  }
  return p;
}

Label classify_probability(double probability, double p_min) {
  return probability > p_min * (1.0 + kTieRelTol) ? Label::probable
                                                  : Label::no_probable;
}

Enumeration enumerate_scenarios(const SystemModel& system,
                                SystemState initial, int max_len, double p_min,
                                const EnumerationLimits& limits) {
  if (system.num_events() > limits.max_events) {
    throw ResourceLimitError(fmt::format(
        "system has {} events; enumeration limited to {}", system.num_events(),
        limits.max_events));
  }
  if (max_len < 1 || max_len > limits.max_len) {
    throw ResourceLimitError(fmt::format(
        "max_len {} outside [1, {}]", max_len, limits.max_len));
  }
  if (initial.broken >> system.num_events() != 0) {
    throw InputError("initial state references events beyond the system");
  }
  if (is_severe(initial, system)) {
    throw InputError("initial state is already severe");
  }
  Enumerator e{system, max_len, p_min, limits.max_nodes, 0, {}, {}};
  e.visit(initial, 1.0);
  auto by_prob = [](const Scenario& a, const Scenario& b) {
    return a.probability > b.probability;
  };
  std::stable_sort(e.out.probable.begin(), e.out.probable.end(), by_prob);
  std::stable_sort(e.out.no_probable.begin(), e.out.no_probable.end(), by_prob);
  return std::move(e.out);
}

Sequence encode_scenario(const std::vector<Step>& steps) {
  Sequence out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    out.push_back(2 * s.event + (s.action == Action::repair ? 1 : 0));
  }
  return out;
}

std::vector<Step> decode_sequence(SequenceView sequence, int num_events) {
  std::vector<Step> out;
  out.reserve(sequence.size());
  for (int sym : sequence) {
    if (sym < 0 || sym >= 2 * num_events) {
      throw InputError(fmt::format("symbol {} outside alphabet of size {}", sym,
                                   2 * num_events));
    }
    out.push_back(Step{sym / 2, sym % 2 == 0 ? Action::fail : Action::repair});
  }
  return out;
}

std::vector<Step> history_to(SystemState state, int num_events) {
  std::vector<Step> out;
  for (int i = 0; i < num_events; ++i) {
    if (state.is_broken(i)) out.push_back(Step{i, Action::fail});
  }
  return out;
}

std::vector<Sequence> ScenarioDataset::sequences(std::optional<Split> only) const {
  std::vector<Sequence> out;
  for (const auto& r : records) {
    if (only && r.split != only) continue;
    out.push_back(r.sequence);
  }
  return out;
}

std::pair<ScenarioDataset, ScenarioDataset> build_datasets(
    const SystemModel& system, const DatasetConfig& config) {
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw InputError("test_fraction must lie in (0, 1)");
  }
  const Enumeration en = enumerate_scenarios(system, config.initial,
                                             config.max_len, config.p_min,
                                             config.limits);
  Rng rng(config.seed);
  auto make = [&](const std::vector<Scenario>& scenarios, Label label) {
    if (scenarios.empty()) {
      throw DatasetError(fmt::format(
          "no {} scenarios (p_min = {}, max_len = {}); adjust p_min or max_len",
          label_name(label), config.p_min, config.max_len));
    }
    const std::size_t n = scenarios.size();
    const auto n_test = static_cast<std::size_t>(
        std::lround(config.test_fraction * static_cast<double>(n)));
    if (n_test >= n) {
      throw DatasetError(fmt::format(
          "{} class has {} scenarios; test_fraction {} leaves no training data",
          label_name(label), n, config.test_fraction));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Split> split(n, Split::train);
    for (std::size_t i = 0; i < n_test; ++i) split[order[i]] = Split::test;

    ScenarioDataset ds;
    ds.alphabet_size = 2 * system.num_events();
    for (std::size_t i = 0; i < n; ++i) {
      ds.records.push_back(LabeledSequence{encode_scenario(scenarios[i].steps),
                                           label, scenarios[i].probability,
                                           split[i]});
    }
    return ds;
  };
  ScenarioDataset probable = make(en.probable, Label::probable);
  ScenarioDataset no_probable = make(en.no_probable, Label::no_probable);
  return {std::move(probable), std::move(no_probable)};
}

}  // namespace qpsa::psa
