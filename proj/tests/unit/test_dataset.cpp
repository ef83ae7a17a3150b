#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "roughsim/dataset.hpp"

using namespace roughsim;
using testing_util::expect_error;

namespace {

DatabaseConfig small_config(std::size_t surfaces, std::size_t per, std::uint64_t seed) {
  DatabaseConfig c;
  c.iterations = 4;
  c.surfaces = surfaces;
  c.deltas_per_surface = per;
  c.seed = seed;
  c.record_timing = false;
  return c;
}

Dataset fake_dataset(std::size_t n) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord r;
    r.id = i;
    r.delta_um = 5.0 + static_cast<double>(i);
    std::array<double, 22> a{};
    for (std::size_t j = 0; j < 22; ++j) a[j] = 1.0 + 0.01 * static_cast<double>(i * j);
    r.stats = StatVector::from_array(a);
    r.effective_area = static_cast<double>(i);
    ds.records.push_back(r);
  }
  return ds;
}

}  // namespace

TEST(Sampling, StratifiedCountsAndRanges) {
  SamplingPlan plan;
  plan.count = 1000;
  plan.seed = 3;
  const auto d = sample_displacements(plan);
  ASSERT_EQ(d.size(), 1000u);
  EXPECT_EQ(std::count_if(d.begin(), d.end(), [](double v) { return v <= 25.0; }), 700);
  for (double v : d) {
    EXPECT_GE(v, 5.0);
    EXPECT_LE(v, 45.0);
  }
  EXPECT_EQ(sample_displacements(plan), d);
  plan.seed = 4;
  EXPECT_NE(sample_displacements(plan), d);
}

TEST(Sampling, SingleStratumIsUniform) {
  SamplingPlan plan;
  plan.strata = {{5.0, 45.0, 1.0}};
  plan.count = 10000;
  plan.seed = 12;
  const auto d = sample_displacements(plan);
  double sum = 0.0;
  for (double v : d) sum += v;
  EXPECT_NEAR(sum / d.size(), 25.0, 1.0);
}

TEST(Sampling, CountOneLandsInHeaviestStratum) {
  SamplingPlan plan;
  plan.count = 1;
  const auto d = sample_displacements(plan);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_GE(d[0], 5.0);
  EXPECT_LE(d[0], 25.0);
}

TEST(Sampling, PlanValidation) {
  SamplingPlan plan;
  plan.count = 10;
  plan.strata = {{5.0, 25.0, 0.5}, {25.0, 45.0, 0.4}};
  expect_error([&] { sample_displacements(plan); }, ErrorKind::PlanError);
  plan.strata = {{5.0, 20.0, 0.5}, {25.0, 45.0, 0.5}};
  expect_error([&] { sample_displacements(plan); }, ErrorKind::PlanError);
  plan.strata = {{5.0, 25.0, 1.5}, {25.0, 45.0, -0.5}};
  expect_error([&] { sample_displacements(plan); }, ErrorKind::PlanError);
  plan.strata = {{5.0, 25.0, 0.7}, {25.0, 45.0, 0.3}};
  plan.count = 0;
  expect_error([&] { sample_displacements(plan); }, ErrorKind::PlanError);
}

TEST(Database, CartesianCountAndIds) {
  const auto ds = build_database(small_config(10, 2, 1));
  ASSERT_EQ(ds.records.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(ds.records[i].id, i);
    EXPECT_EQ(ds.records[i].seed, ds.records[i - i % 2].seed);
  }
  EXPECT_EQ(ds.config_hash.size(), 16u);
}

TEST(Database, OkRecordsReplayBitForBit) {
  const auto config = small_config(4, 3, 9);
  const auto ds = build_database(config);
  for (const auto& r : ds.records) {
    ASSERT_EQ(r.status, RecordStatus::Ok);
    EXPECT_EQ(replay_effective_area(config, r), r.effective_area);
    EXPECT_GE(r.effective_area, 0.0);
    EXPECT_LE(r.effective_area, 110.0);
    EXPECT_GE(r.hurst, 0.5);
    EXPECT_LE(r.hurst, 0.8);
    EXPECT_GE(r.sigma0_um, 3.0);
    EXPECT_LE(r.sigma0_um, 16.0);
  }
}

TEST(Database, AreaNondecreasingInDeltaPerSurface) {
  auto config = small_config(20, 10, 5);
  config.iterations = 5;
  const auto ds = build_database(config);
  ASSERT_EQ(ds.records.size(), 200u);
  for (std::size_t s = 0; s < 20; ++s) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t d = 0; d < 10; ++d) {
      const auto& r = ds.records[s * 10 + d];
      ASSERT_EQ(r.status, RecordStatus::Ok);
      pts.emplace_back(r.delta_um, r.effective_area);
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GE(pts[i].second, pts[i - 1].second);
  }
}

TEST(Database, ParallelMatchesSerialByteForByte) {
  auto config = small_config(6, 2, 17);
  const auto serial = build_database(config);
  config.jobs = 3;
  const auto parallel = build_database(config);
  std::stringstream a, b;
  write_dataset_csv(a, serial);
  write_dataset_csv(b, parallel);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Database, FailedSolvesAreKeptWithStatus) {
  auto config = small_config(3, 2, 2);
  config.max_sweeps = 1;
  const auto ds = build_database(config);
  ASSERT_EQ(ds.records.size(), 6u);
  std::size_t failed = 0;
  for (const auto& r : ds.records) {
    if (r.status == RecordStatus::SolverFailed) {
      ++failed;
      EXPECT_TRUE(std::isnan(r.effective_area));
    }
  }
  EXPECT_GT(failed, 0u);
  const auto cleaned = clean(ds);
  EXPECT_EQ(cleaned.removed, failed);
  EXPECT_EQ(cleaned.dataset.records.size(), 6u - failed);
}

TEST(Config, KeyValuesRoundTripAndRejectUnknown) {
  auto c = small_config(7, 3, 11);
  c.strata = {{5.0, 15.0, 0.5}, {15.0, 45.0, 0.5}};
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : c.to_key_values()) kv[k] = v;
  const auto back = DatabaseConfig::from_key_values(kv);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(back.strata.size(), 2u);
  kv["colour"] = "blue";
  expect_error([&] { DatabaseConfig::from_key_values(kv); }, ErrorKind::InvalidSpec);
  kv.erase("colour");
  kv["hurst_hi"] = "1.2";
  expect_error([&] { DatabaseConfig::from_key_values(kv); }, ErrorKind::InvalidSpec);
  kv["hurst_hi"] = "0.8";
  kv["strata"] = "5:25:0.6;25:45:0.6";
  expect_error([&] { DatabaseConfig::from_key_values(kv); }, ErrorKind::PlanError);
}

TEST(Clean, FilterCountsAndFiniteFields) {
  auto ds = fake_dataset(10);
  EXPECT_EQ(clean(ds).removed, 0u);
  EXPECT_EQ(clean(ds).dataset.records.size(), 10u);
  for (std::size_t i : {1u, 4u, 7u}) {
    ds.records[i].status = i == 4 ? RecordStatus::DegenerateSurface : RecordStatus::SolverFailed;
    ds.records[i].effective_area = std::nan("");
  }
  const auto c = clean(ds);
  EXPECT_EQ(c.removed, 3u);
  ASSERT_EQ(c.dataset.records.size(), 7u);
  std::stringstream ss;
  write_dataset_csv(ss, c.dataset);
  const std::string text = ss.str();
  EXPECT_EQ(text.find(",,"), std::string::npos);
  EXPECT_EQ(text.find("nan"), std::string::npos);
  EXPECT_EQ(text.find("inf"), std::string::npos);
}

TEST(Split, CountsDisjointAndDeterministic) {
  const auto ds = fake_dataset(10);
  const auto [train, test] = split(ds, 0.8, 1);
  EXPECT_EQ(train.records.size(), 8u);
  EXPECT_EQ(test.records.size(), 2u);
  std::set<std::uint64_t> ids;
  for (const auto& r : train.records) ids.insert(r.id);
  for (const auto& r : test.records) EXPECT_TRUE(ids.insert(r.id).second);
  EXPECT_EQ(ids.size(), 10u);

  const auto again = split(ds, 0.8, 1);
  std::stringstream a, b;
  write_dataset_csv(a, test);
  write_dataset_csv(b, again.second);
  EXPECT_EQ(a.str(), b.str());

  const auto big = fake_dataset(200);
  const auto s1 = split(big, 0.8, 1), s2 = split(big, 0.8, 2);
  EXPECT_EQ(s1.first.records.size(), s2.first.records.size());
  std::vector<std::uint64_t> t1, t2;
  for (const auto& r : s1.second.records) t1.push_back(r.id);
  for (const auto& r : s2.second.records) t2.push_back(r.id);
  EXPECT_NE(t1, t2);
}

TEST(Split, FullScaleSizes) {
  const auto [train, test] = split(fake_dataset(15878), 0.8, 0);
  EXPECT_EQ(train.records.size(), 12703u);
  EXPECT_EQ(test.records.size(), 3175u);
}

TEST(Split, Errors) {
  expect_error([] { split(fake_dataset(1), 0.8, 0); }, ErrorKind::Validation);
  expect_error([] { split(fake_dataset(5), 1.0, 0); }, ErrorKind::Validation);
  expect_error([] { split(fake_dataset(5), 0.0, 0); }, ErrorKind::Validation);
}

TEST(Features, WidthAndOrder) {
  const auto ds = fake_dataset(3);
  const auto x = feature_matrix(ds);
  EXPECT_EQ(x.cols(), 23);
  EXPECT_EQ(feature_names().size(), 23u);
  EXPECT_EQ(feature_names()[0], "delta_um");
  EXPECT_EQ(x(2, 0), 7.0);
  EXPECT_EQ(target_vector(ds)(2), 2.0);
}

TEST(Normalize, UnitRows) {
  Eigen::MatrixXd m(1, 2);
  m << 3, 4;
  const auto n = normalize_rows(m);
  EXPECT_DOUBLE_EQ(n(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(n(0, 1), 0.8);
  const auto twice = normalize_rows(n);
  EXPECT_NEAR((twice - n).norm(), 0.0, 1e-12);

  Rng rng(4);
  Eigen::MatrixXd r(100, 23);
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) r(i, j) = rng.uniform(-50, 50);
  const auto rn = normalize_rows(r);
  for (Eigen::Index i = 0; i < rn.rows(); ++i) EXPECT_NEAR(rn.row(i).norm(), 1.0, 1e-12);
}

TEST(Normalize, ZeroRowNamesSample) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(3, 4);
  m.row(1).setZero();
  try {
    normalize_rows(m, {10, 42, 77});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Normalization);
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
}

TEST(Normalize, StandardizerCentresAndScales) {
  Rng rng(8);
  Eigen::MatrixXd x(50, 3);
  for (Eigen::Index i = 0; i < 50; ++i) x.row(i) << rng.normal() * 3 + 1, rng.normal(), 7.0;
  const auto s = Standardizer::fit(x);
  const auto z = s.apply(x);
  for (Eigen::Index j = 0; j < 2; ++j) {
    EXPECT_NEAR(z.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(z.col(j).squaredNorm() / 50), 1.0, 1e-12);
  }
  EXPECT_NEAR(z.col(2).norm(), 0.0, 1e-12);
}

TEST(DatasetCsv, RoundTripIncludingFailures) {
  auto ds = build_database(small_config(3, 2, 4));
  ds.records[1].status = RecordStatus::SolverFailed;
  ds.records[1].effective_area = std::nan("");
  std::stringstream ss;
  write_dataset_csv(ss, ds);
  const auto back = read_dataset_csv(ss);
  ASSERT_EQ(back.records.size(), ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& a = ds.records[i];
    const auto& b = back.records[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_EQ(a.hurst, b.hurst);
    EXPECT_EQ(a.delta_um, b.delta_um);
    EXPECT_EQ(a.stats, b.stats);
    EXPECT_EQ(a.status, b.status);
    if (a.status == RecordStatus::Ok) EXPECT_EQ(a.effective_area, b.effective_area);
  }
  EXPECT_TRUE(std::isnan(back.records[1].effective_area));
  std::stringstream out;
  write_dataset_csv(out, back);
  std::stringstream orig;
  write_dataset_csv(orig, ds);
  EXPECT_EQ(out.str(), orig.str());
}

TEST(DatasetCsv, RejectsBadHeaderAndDuplicateIds) {
  std::stringstream bad("id,seed\n1,2\n");
  expect_error([&] { read_dataset_csv(bad); }, ErrorKind::Validation);
  const auto ds = fake_dataset(2);
  std::stringstream ss;
  write_dataset_csv(ss, ds);
  std::string text = ss.str();
  const auto second = text.find('\n', text.find('\n') + 1) + 1;
  text += text.substr(text.find('\n') + 1, second - text.find('\n') - 1);
  std::stringstream dup(text);
  expect_error([&] { read_dataset_csv(dup); }, ErrorKind::Validation);
}

TEST(Database, FlatSurfacesAreFlaggedDegenerate) {
  auto config = small_config(2, 2, 6);
  config.sigma0_lo = 0.0;
  config.sigma0_hi = 0.0;
  const auto ds = build_database(config);
  for (const auto& r : ds.records) {
    EXPECT_EQ(r.status, RecordStatus::DegenerateSurface);
    EXPECT_TRUE(std::isnan(r.stats.peak_mean));
  }
  EXPECT_EQ(clean(ds).dataset.records.size(), 0u);
}
