#include <gtest/gtest.h>

#include "ebm/config.hpp"
#include "ebm/error.hpp"
#include "test_util.hpp"

namespace ebm {
namespace {

TEST(TrainConfigTest, DefaultsMatchReferenceTable) {
  const TrainConfig c;
  EXPECT_EQ(c.max_bins, 1024u);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.outer_bags, 14u);
  EXPECT_EQ(c.validation_size, 0.15);
  EXPECT_EQ(c.smoothing_rounds, 200u);
  EXPECT_EQ(c.early_stopping_rounds, 50u);
  EXPECT_EQ(c.early_stopping_tolerance, 1e-5);
  EXPECT_EQ(c.max_leaves, 3u);
  EXPECT_EQ(c.min_samples_leaf, 2u);
  EXPECT_EQ(c.min_hessian, 1e-4);
  EXPECT_EQ(c.interactions, InteractionSpec::fraction(0.9));
  EXPECT_EQ(c.max_rounds, 25000u);
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfigTest, JsonRoundTrip) {
  TrainConfig c;
  c.objective = LossKind::poisson_deviance;
  c.learning_rate = 0.05;
  c.outer_bags = 3;
  c.interactions = InteractionSpec::explicit_list({{"a", "b"}});
  c.exclude = {"noise"};
  c.seed = 7;
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
  c.interactions = InteractionSpec::count(4);
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
}

TEST(TrainConfigTest, MissingKeysKeepDefaults) {
  const auto c = TrainConfig::from_json(nlohmann::json{{"learning_rate", 0.1}});
  EXPECT_EQ(c.learning_rate, 0.1);
  EXPECT_EQ(c.outer_bags, 14u);
}

TEST(TrainConfigTest, UnknownKeyRejected) {
  try {
    TrainConfig::from_json(nlohmann::json{{"learning_rat", 0.1}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
  }
}

TEST(TrainConfigTest, OutOfRangeValuesRejected) {
  auto invalid = [](auto edit) {
    TrainConfig c;
    edit(c);
    EXPECT_THROW(c.validate(), ValidationError);
  };
  invalid([](TrainConfig& c) { c.learning_rate = 0.0; });
  invalid([](TrainConfig& c) { c.validation_size = 1.0; });
  invalid([](TrainConfig& c) { c.outer_bags = 0; });
  invalid([](TrainConfig& c) { c.max_bins = 1; });
  invalid([](TrainConfig& c) { c.greedy_ratio = 0.5; });
  invalid([](TrainConfig& c) { c.cyclic_progress = 0.5; });
}

TEST(TrainConfigTest, UnimplementedOptionsSayWhy) {
  try {
    TrainConfig::from_json(nlohmann::json{{"greedy_ratio", 10.0}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("not implemented"), std::string::npos);
  }
}

TEST(InteractionSpecTest, ParsesAllForms) {
  EXPECT_EQ(InteractionSpec::from_json(5), InteractionSpec::count(5));
  EXPECT_EQ(InteractionSpec::from_json(0.5), InteractionSpec::fraction(0.5));
  EXPECT_EQ(InteractionSpec::from_json(3.0), InteractionSpec::count(3));
  EXPECT_EQ(InteractionSpec::from_json(nlohmann::json::parse(R"([["a","b"]])")),
            InteractionSpec::explicit_list({{"a", "b"}}));
  EXPECT_THROW(InteractionSpec::from_json(-1), ValidationError);
  EXPECT_THROW(InteractionSpec::from_json(1.5), ValidationError);
  EXPECT_THROW(InteractionSpec::from_json("many"), ValidationError);
  EXPECT_THROW(InteractionSpec::from_json(nlohmann::json::parse(R"([["a"]])")), ValidationError);
}

TEST(TrainConfigTest, LoadFromFile) {
  testing::TempDir dir;
  testing::write_file(dir.file("c.json"), R"({"objective": "gamma_deviance", "outer_bags": 2})");
  const auto c = TrainConfig::load(dir.file("c.json"));
  EXPECT_EQ(c.objective, LossKind::gamma_deviance);
  EXPECT_EQ(c.outer_bags, 2u);
  testing::write_file(dir.file("bad.json"), "{");
  EXPECT_THROW(TrainConfig::load(dir.file("bad.json")), ValidationError);
  EXPECT_THROW(TrainConfig::load(dir.file("missing.json")), ValidationError);
}

}  // namespace
}  // namespace ebm
