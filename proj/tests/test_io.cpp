#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qpsa/error.hpp"
#include "qpsa/io.hpp"

using namespace qpsa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qpsa_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("format_double") {
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(io::format_double(std::nan("")) == "nan");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("model round trips are exact") {
  std::mt19937_64 rng(1);
  const auto h = oracle::random_hmm(3, 4, rng);
  const auto back_h = std::get<hmm::CategoricalHmm>(io::model_from_json(io::to_json(h)));
  CHECK(back_h.transition() == h.transition());
  CHECK(back_h.emission() == h.emission());
  CHECK(back_h.start() == h.start());

  const auto q = oracle::random_kraus_model(2, 3, 2, rng);
  const auto j = io::to_json(q);
  CHECK(j["kraus_re"].size() == 3);
  CHECK(j["kraus_re"][0].size() == 2);
  CHECK(j["kraus_re"][0][0].size() == 2);
  // Text round trip, as written to disk.
  const auto back_q = std::get<quantum::KrausModel>(
      io::model_from_json(io::Json::parse(j.dump(1))));
  CHECK(back_q.stacked() == q.stacked());
  CHECK(back_q.initial_state().matrix() == q.initial_state().matrix());

  TempDir tmp;
  io::save_model(tmp.path / "m.json", q);
  const auto loaded = io::load_model(tmp.path / "m.json");
  CHECK(kind_name(loaded) == "qhmm");
}

TEST_CASE("model parsing rejects bad input") {
  std::mt19937_64 rng(2);
  auto j = io::to_json(oracle::random_kraus_model(2, 2, 1, rng));
  j["kraus_re"][0][0][0][0] = j["kraus_re"][0][0][0][0].get<double>() + 0.5;
  CHECK_THROWS_AS(io::model_from_json(j), InputError);

  io::Json unknown = {{"type", "lstm"}};
  CHECK_THROWS_AS(io::model_from_json(unknown), InputError);
  io::Json missing = {{"type", "hmm"}, {"K", 1}};
  CHECK_THROWS_AS(io::model_from_json(missing), InputError);

  auto h = io::to_json(oracle::random_hmm(2, 2, rng));
  h["emission"][0][0] = 2.0;
  CHECK_THROWS_AS(io::model_from_json(h), InputError);
  CHECK_THROWS_AS(io::load_model("/nonexistent/model.json"), InputError);
}

TEST_CASE("system JSON") {
  const auto sys = oracle::reference_system();
  const auto back = io::system_from_json(io::to_json(sys));
  CHECK(back.name() == sys.name());
  CHECK(back.num_events() == 3);
  CHECK(back.event(1).p_repair == 0.4);
  CHECK(back.severe_masks() == sys.severe_masks());

  const auto parsed = io::system_from_json(io::Json::parse(
      R"({"name":"s","events":[{"id":"x","p_down":0.1,"p_repair":0.2}],"severe_states":[["x"]]})"));
  CHECK(parsed.index_of("x") == 0);
  CHECK_THROWS_AS(io::system_from_json(io::Json::parse(R"({"events":[]})")), InputError);
  CHECK_THROWS_AS(
      io::system_from_json(io::Json::parse(
          R"({"events":[{"id":"x","p_down":"hi","p_repair":0.2}],"severe_states":[["x"]]})")),
      InputError);
}

TEST_CASE("JSONL datasets") {
  TempDir tmp;
  std::vector<psa::LabeledSequence> recs{
      {{0, 2}, psa::Label::probable, 0.02, psa::Split::train},
      {{4, 2, 0}, psa::Label::no_probable, 0.05 * 0.1 * 0.2, psa::Split::test},
      {{1}, std::nullopt, std::nullopt, std::nullopt},
  };
  const auto file = tmp.path / "d.jsonl";
  io::write_file(file, io::to_jsonl(recs));
  const auto back = io::load_jsonl(file);
  REQUIRE(back.size() == 3);
  CHECK(back[0].sequence == Sequence{0, 2});
  CHECK(back[0].label == psa::Label::probable);
  CHECK(back[1].prob == recs[1].prob);  // shortest round-trip doubles
  CHECK(back[1].split == psa::Split::test);
  CHECK_FALSE(back[2].label.has_value());
  CHECK(io::to_jsonl(back) == io::to_jsonl(recs));

  io::write_file(file, "{\"sequence\":[0]}\n\n{\"sequence\":[1],\"label\":\"maybe\"}\n");
  try {
    io::load_jsonl(file);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("d.jsonl:3") != std::string::npos);
  }
  io::write_file(file, "{\"sequence\":[]}\n");
  CHECK_THROWS_AS(io::load_jsonl(file), InputError);
  io::write_file(file, "not json\n");
  CHECK_THROWS_AS(io::load_jsonl(file), InputError);
  CHECK_THROWS_AS(io::load_jsonl(tmp.path / "absent.jsonl"), InputError);
}

TEST_CASE("loss log CSV") {
  const std::vector<train::LossRecord> log{{1, 1, 2.5, 0.05}, {1, 2, 1.25, 0.025}};
  CHECK(io::loss_log_csv(log) ==
        "epoch,batch,loss,tau\n1,1,2.5,0.050000000000000003\n1,2,1.25,0.025000000000000001\n");
}
