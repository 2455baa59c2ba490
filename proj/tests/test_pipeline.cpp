#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "wdimer/checkpoint.hpp"
#include "wdimer/config.hpp"
#include "wdimer/errors.hpp"
#include "wdimer/report.hpp"
#include "wdimer/runner.hpp"

namespace wdimer {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wdimer_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_config() {
  RunConfig c = parse_config(R"(
chi = 0.01
pump_rate = 2
topology = loss_at_well1
t_final = 1
save_interval = 0.25
n_traj = 120
n_batches = 6
master_seed = 9
quadratures = 1:0, 2:0.5
cumulants = 1:0
covariances = 1:0|2:1.5707963267948966
epr = 1, 2
angle_grid = 24
duan_simon = true
checkpoint_interval = 2
cutoff1 = 6
cutoff2 = 6
)");
  return c;
}

TEST(Config, SerializationRoundTrip) {
  RunConfig c = small_config();
  c.observables.kappa4_convention = Kappa4Convention::Standard;
  c.oracle.hamiltonian = OracleHamiltonian::Collisional;
  c.params.loss_rate = 0.1 + 0.2;  // not representable in short decimal
  const RunConfig back = parse_config(serialize(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(serialize(back), serialize(c));
  EXPECT_EQ(back.params.loss_rate, c.params.loss_rate);
  EXPECT_EQ(physics_hash(back), physics_hash(c));
}

TEST(Config, PhysicsHashIgnoresOutputSettings) {
  RunConfig a = small_config(), b = small_config();
  b.output_dir = "elsewhere";
  b.checkpoint_interval = 99;
  EXPECT_EQ(physics_hash(a), physics_hash(b));
  b.master_seed = 10;
  EXPECT_NE(physics_hash(a), physics_hash(b));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("chi = 0.1\nchi = 0.2\n"), ConfigError);
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("chi = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("epr = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("quadratures = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("covariances = 1:0|1:0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("chi = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("n_traj = 5\nn_batches = 10\n"), ConfigError);
  EXPECT_THROW(parse_config("topology = sideways\n"), ConfigError);
  try {
    parse_config("chi = 0\n\nloss_rate = x\n", "a.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a.cfg:3"), std::string::npos);
  }
}

TEST(Config, SetValueForSweeps) {
  RunConfig c = small_config();
  set_config_value(c, sweep_key("gamma"), "0.5");
  set_config_value(c, sweep_key("epsilon"), "3");
  set_config_value(c, sweep_key("topology"), "loss_at_well2");
  EXPECT_EQ(c.params.loss_rate, 0.5);
  EXPECT_EQ(c.params.pump_rate, 3.0);
  EXPECT_EQ(c.params.topology, Topology::LossAtWell2);
  EXPECT_THROW(sweep_key("dt"), ConfigError);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  const RunConfig c = small_config();
  const std::vector<std::uint32_t> ids{1, 4};
  Checkpoint cp;
  cp.physics_hash = physics_hash(c);
  cp.config_text = serialize(c);
  cp.total_batches = c.n_batches;
  cp.batch_ids = ids;
  cp.accumulator = run_batches(c.params, c.grid(), c.engine_options(1), ids);
  const std::string bytes = encode_checkpoint(cp);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(back.physics_hash, cp.physics_hash);
  EXPECT_EQ(back.config_text, cp.config_text);
  EXPECT_EQ(back.batch_ids, ids);
  ASSERT_EQ(back.accumulator.num_batches(), 2u);
  for (std::size_t b = 0; b < 2; ++b)
    EXPECT_TRUE((back.accumulator.batch(b).sums.array() == cp.accumulator.batch(b).sums.array()).all());
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(decode_checkpoint(flipped), CheckpointMismatch);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointMismatch);
  EXPECT_THROW(decode_checkpoint("XXXX" + bytes.substr(4)), CheckpointMismatch);
}

TEST(Runner, OutputIndependentOfThreadsAndResume) {
  const RunConfig c = small_config();
  const fs::path a = scratch_dir("one_thread"), b = scratch_dir("many_threads"), r = scratch_dir("resumed");
  run_engine(c, a, {1, false, 0, nullptr});
  run_engine(c, b, {4, false, 0, nullptr});
  const EngineRun partial = run_engine(c, r, {2, false, 2, nullptr});
  EXPECT_FALSE(partial.completed);
  EXPECT_EQ(partial.batches_done, 2u);
  EXPECT_FALSE(fs::exists(r / kObservablesFile));
  const EngineRun finished = run_engine(c, r, {3, true, 0, nullptr});
  EXPECT_TRUE(finished.completed);
  const std::string reference = read_text_file(a / kObservablesFile);
  EXPECT_EQ(read_text_file(b / kObservablesFile), reference);
  EXPECT_EQ(read_text_file(r / kObservablesFile), reference);
  EXPECT_EQ(read_text_file(r / kSteadyFile), read_text_file(a / kSteadyFile));
  EXPECT_EQ(read_text_file(r / kCheckpointFile), read_text_file(a / kCheckpointFile));
}

TEST(Runner, ResumeRejectsChangedPhysics) {
  RunConfig c = small_config();
  const fs::path dir = scratch_dir("changed");
  run_engine(c, dir, {1, false, 2, nullptr});
  c.params.chi = 0.02;
  EXPECT_THROW(run_engine(c, dir, {1, true, 0, nullptr}), CheckpointMismatch);
}

TEST(Report, CsvRoundTripAndContents) {
  const RunConfig c = small_config();
  const fs::path dir = scratch_dir("csv");
  run_engine(c, dir, {1, false, 0, nullptr});
  const std::string text = read_text_file(dir / kObservablesFile);
  const ObservableTable table = parse_csv(text);
  EXPECT_EQ(table.metadata.at("source"), "engine");
  EXPECT_EQ(table.metadata.at("master_seed"), "9");
  EXPECT_EQ(parse_config(table.config_text), c);
  EXPECT_EQ(format_csv(table), text);
  std::set<std::string> ids;
  for (const auto& row : table.rows) ids.insert(row.id);
  for (const char* id : {"population", "quad_mean", "quad_variance", "kappa3", "kappa4", "quad_covariance",
                         "epr_product_opt", "duan_simon_opt"})
    EXPECT_TRUE(ids.count(id)) << id;
  EXPECT_THROW(parse_csv("time,value\n1,2\n"), SchemaMismatch);
}

TEST(Report, CompareDetectsWrongLossRate) {
  RunConfig c = small_config();
  c.params.pump_rate = 1.0;
  c.observables.quadratures = {QuadratureSpec::make(1, 0.0)};
  const fs::path ok = scratch_dir("oracle_ok"), wrong = scratch_dir("oracle_wrong");
  const ObservableTable reference = parse_csv(format_csv(oracle_table(c, run_oracle(c, ok))));
  EXPECT_EQ(reference.metadata.at("source"), "oracle");
  const CompareReport same = compare_tables(reference, reference);
  EXPECT_TRUE(same.pass());
  c.oracle.loss_scale = 1.5;
  const ObservableTable off = parse_csv(read_text_file(ok / kObservablesFile));
  const ObservableTable skewed = oracle_table(c, run_oracle(c, wrong));
  const CompareReport report = compare_tables(skewed, off);
  EXPECT_FALSE(report.pass());
  CompareOptions loose;
  loose.default_tolerance = 10.0;
  EXPECT_TRUE(compare_tables(skewed, off, loose).pass());
  EXPECT_FALSE(format_report(report).empty());
}

TEST(Runner, SweepContinuesPastFailures) {
  RunConfig c = small_config();
  const fs::path dir = scratch_dir("sweep");
  const auto outcomes = run_sweep(c, "chi", {"0.01", "-1", "0.02"}, dir);
  ASSERT_EQ(outcomes.size(), 3u);
  EXPECT_TRUE(outcomes[0].ok);
  EXPECT_FALSE(outcomes[1].ok);
  EXPECT_TRUE(outcomes[2].ok);
  const std::string summary = read_text_file(dir / "summary.csv");
  EXPECT_NE(summary.find("chi,-1,failed"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "chi=0.02" / kObservablesFile));
}

TEST(Runner, SweepValidation) {
  EXPECT_THROW(run_sweep(small_config(), "chi", {}, scratch_dir("sweep_empty")), ConfigError);
  EXPECT_THROW(run_sweep(small_config(), "dt", {"1e-3"}, scratch_dir("sweep_key")), ConfigError);
}

TEST(Runner, TopologySweepReachesMesoscopicOccupation) {
  RunConfig c = small_config();
  c.params.pump_rate = 10.0;
  c.t_final = 20.0;
  c.save_interval = 1.0;
  c.n_traj = 200;
  c.n_batches = 4;
  c.observables = {};
  const fs::path dir = scratch_dir("sweep_topology");
  const auto outcomes = run_sweep(c, "topology", {"loss_at_well2", "loss_at_well1"}, dir);
  ASSERT_TRUE(outcomes[0].ok && outcomes[1].ok);
  std::istringstream summary(read_text_file(dir / "summary.csv"));
  std::string line;
  std::getline(summary, line);
  int rows = 0;
  while (std::getline(summary, line)) {
    ++rows;
    const auto field = [&](int k) {
      std::stringstream in(line);
      std::string item;
      for (int i = 0; i <= k; ++i) std::getline(in, item, ',');
      return item;
    };
    EXPECT_EQ(field(3), "population");
    EXPECT_GT(std::stod(field(6)), 10.0) << line;
  }
  EXPECT_EQ(rows, 4);  // two wells per topology
}

TEST(Report, LinearSectorAgreesWithOracle) {
  // At chi = 0 the truncated-Wigner equations are exact; compare where the
  // observables are of order one so the 1% tolerance is not noise limited.
  RunConfig c = small_config();
  c.params = {0.0, 1.0, 1.0, 1.0, Topology::LossAtWell2};
  c.t_final = 5.0;
  c.save_interval = 1.0;
  c.n_traj = 200000;
  c.n_batches = 100;
  c.observables = {};
  c.observables.quadratures = {QuadratureSpec::make(1, 0.0), QuadratureSpec::make(2, 1.5707963267948966)};
  c.oracle = {14, 14, 5e-3, OracleHamiltonian::WignerMatched, 1.0};
  const ObservableTable engine = parse_csv(read_text_file([&] {
    const fs::path dir = scratch_dir("linear_engine");
    run_engine(c, dir);
    return dir / kObservablesFile;
  }()));
  const ObservableTable oracle = oracle_table(c, run_oracle(c, scratch_dir("linear_oracle")));
  const auto keep = [](ObservableTable t) {
    std::erase_if(t.rows, [](const ObservableRow& r) {
      return r.time < 1.0 || (r.id != "population" && r.id != "quad_mean");
    });
    return t;
  };
  CompareOptions options;
  options.default_tolerance = 0.01;
  const CompareReport report = compare_tables(keep(engine), keep(oracle), options);
  EXPECT_TRUE(report.pass()) << format_report(report);
  EXPECT_EQ(report.entries.size(), 4u);
}

TEST(Scenarios, FigureScenariosProduceTheirSeries) {
  for (const auto& [file, ids] : std::vector<std::pair<std::string, std::vector<std::string>>>{
           {"fig2.cfg", {"epr_product_opt"}}, {"fig4.cfg", {"kappa4"}}}) {
    RunConfig c = load_config(fs::path(WDIMER_SOURCE_DIR) / "scenarios" / file);
    c.n_traj = 200;
    c.n_batches = 4;
    const fs::path dir = scratch_dir("scenario_" + file);
    run_engine(c, dir);
    const ObservableTable table = parse_csv(read_text_file(dir / kObservablesFile));
    for (const auto& id : ids) {
      std::set<std::string> wells;
      for (const auto& r : table.rows)
        if (r.id == id) wells.insert(r.wells);
      EXPECT_EQ(wells.size(), 2u) << file << " " << id;
    }
    // Same configuration, same bytes.
    const fs::path again = scratch_dir("scenario_again_" + file);
    run_engine(c, again);
    EXPECT_EQ(read_text_file(again / kObservablesFile), read_text_file(dir / kObservablesFile));
  }
}

}  // namespace
}  // namespace wdimer
