#include <fstream>

#include <gtest/gtest.h>

#include "avseg/io/checkpoint.hpp"
#include "avseg/io/config.hpp"
#include "avseg/io/dataset.hpp"
#include "avseg/io/image_io.hpp"
#include "avseg/io/report.hpp"
#include "avseg/synthetic.hpp"
#include "unit/helpers.hpp"

namespace {

using namespace avseg;
using namespace avseg::io;
using testing_helpers::temp_dir;

TEST(Config, DefaultsSurviveTextRoundTrip) {
  RunConfig a;
  a.train.lr = 3e-4;
  a.train.seeds = {7, 9};
  a.unet.base_channels = 16;
  a.augment.rotation_deg = {-10, 10};
  a.loss.class_weights = {1, 2, 3, 0};
  RunConfig b;
  apply_config_text(b, to_config_text(a));
  EXPECT_EQ(config_values(a), config_values(b));
}

TEST(Config, CommentsBlankLinesAndErrorsWithLineNumbers) {
  RunConfig c;
  apply_config_text(c, "# comment\n\nlr = 0.002  # trailing\nseeds = 1, 2,3\napproach = traditional\n");
  EXPECT_EQ(c.train.lr, 0.002);
  EXPECT_EQ(c.train.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.train.approach, Approach::traditional);
  try {
    apply_config_text(c, "lr = 1\nno_such_key = 3\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
    EXPECT_EQ(e.exit_code(), 1);
  }
  EXPECT_THROW(apply_config_text(c, "lr = fast\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "just words\n"), ConfigError);
}

TEST(Config, OverridesWinOverFileAndFinalizeAppliesApproach) {
  const auto dir = temp_dir("config");
  {
    std::ofstream(dir / "run.cfg") << "lr = 0.01\npatience_epochs = 7\n";
  }
  RunConfig c;
  apply_config_file(c, dir / "run.cfg");
  apply_override(c, "lr=0.5");
  EXPECT_EQ(c.train.lr, 0.5);
  EXPECT_EQ(c.train.patience_epochs, 7);
  apply_override(c, "approach=traditional");
  c.finalize();
  EXPECT_EQ(c.unet.out_channels, 4);
  EXPECT_EQ(c.loss.kind, LossKind::ce4);
  EXPECT_THROW(apply_override(c, "lr"), ConfigError);
  EXPECT_THROW(apply_config_file(c, dir / "missing.cfg"), ConfigError);
}

TEST(Config, InvalidValuesFailFinalize) {
  RunConfig c;
  apply_override(c, "lr=-1");
  EXPECT_THROW(c.finalize(), ConfigError);
  RunConfig d;
  EXPECT_THROW(apply_override(d, "batch_norm=maybe"), ConfigError);
}

TEST(Checkpoint, RoundTripRestoresTheModel) {
  const auto dir = temp_dir("ckpt");
  CheckpointInfo info;
  info.unet.base_channels = 2;
  info.unet.depth = 2;
  info.seed = 5;
  info.best_epoch = 3;
  info.train_ids = {"a", "b"};
  nn::UNet<float> model(info.unet);
  model.init_params(5);
  save_checkpoint(dir / "model", info, model.flat_values());
  const auto loaded = load_checkpoint(dir / "model.json");
  EXPECT_EQ(loaded.model.flat_values(), model.flat_values());
  EXPECT_EQ(loaded.info.best_epoch, 3);
  EXPECT_EQ(loaded.info.train_ids, info.train_ids);
  EXPECT_EQ(loaded.info.unet.base_channels, 2);
  EXPECT_NO_THROW(load_checkpoint(dir / "model.bin"));
  EXPECT_NO_THROW(load_checkpoint(dir / "model"));
}

TEST(Checkpoint, TruncatedOrDiagnosticFilesAreRejected) {
  const auto dir = temp_dir("ckpt_bad");
  CheckpointInfo info;
  info.unet.base_channels = 2;
  info.unet.depth = 1;
  nn::UNet<float> model(info.unet);
  save_checkpoint(dir / "m", info, model.flat_values());
  std::filesystem::resize_file(dir / "m.bin", std::filesystem::file_size(dir / "m.bin") - 4);
  EXPECT_THROW(load_checkpoint(dir / "m"), DataError);
  info.diagnostic = true;
  save_checkpoint(dir / "d", info, model.flat_values());
  EXPECT_THROW(load_checkpoint(dir / "d"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "nothing"), DataError);
}

TEST(Images, Png16RoundTripWithinQuantisation) {
  const auto dir = temp_dir("png16");
  Grid<float> g(5, 7);
  Rng rng(1);
  for (float& v : g) v = static_cast<float>(rng.uniform01());
  write_png16(dir / "g.png", g);
  const auto back = read_gray01(dir / "g.png");
  for (std::size_t i = 0; i < g.numel(); ++i) EXPECT_NEAR(back[i], g[i], 0.5 / 65535 + 1e-7);
}

TEST(Dataset, WriteThenLoadIsLossless) {
  const auto root = temp_dir("dataset");
  SyntheticConfig sc;
  sc.size = {40, 48};
  const auto a = synthetic_fundus(sc, 3, "03_test");
  write_item(root, "test", a);
  const auto ids = list_ids(root, "test");
  ASSERT_EQ(ids, std::vector<std::string>{"03_test"});
  const auto b = load_item(root, "test", "03_test");
  EXPECT_EQ(b.annotation, a.annotation);
  EXPECT_EQ(b.roi, a.roi);
  EXPECT_EQ(b.vessel_gt, a.vessel_gt);
  for (std::size_t i = 0; i < a.image.numel(); ++i) ASSERT_NEAR(b.image[i], a.image[i], 0.5 / 255 + 1e-6);
  EXPECT_EQ(load_dataset(root, "test").size(), 1u);
}

TEST(Dataset, VesselDirectoryIsOptional) {
  const auto root = temp_dir("dataset_novessel");
  const auto a = testing_helpers::random_annotated({12, 12}, 2);
  write_item(root, "train", a, false);
  EXPECT_EQ(load_item(root, "train", a.id).vessel_gt, a.vessel_gt);
}

TEST(Dataset, MissingFilesAndEmptySplitsAreDataErrors) {
  const auto root = temp_dir("dataset_bad");
  EXPECT_THROW(list_ids(root, "train"), DataError);
  const auto a = testing_helpers::random_annotated({12, 12}, 2);
  write_item(root, "train", a);
  std::filesystem::remove(root / "train" / "mask" / (a.id + ".png"));
  try {
    load_item(root, "train", a.id);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(a.id), std::string::npos);
    EXPECT_EQ(e.exit_code(), 2);
  }
  EXPECT_THROW(load_dataset(root, "validation"), ConfigError);
}

TEST(Dataset, OffPaletteAnnotationNamesImageAndColour) {
  const auto root = temp_dir("dataset_palette");
  const auto a = testing_helpers::random_annotated({12, 12}, 6);
  write_item(root, "test", a);
  auto rgb = read_rgb8(root / "test" / "av" / (a.id + ".png"));
  rgb(0, 3, 3) = 254;  // anti-aliased red
  write_rgb8(root / "test" / "av" / (a.id + ".png"), rgb);
  try {
    load_item(root, "test", a.id);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(a.id), std::string::npos) << msg;
    EXPECT_NE(msg.find("off-palette"), std::string::npos) << msg;
  }
}

TEST(Report, JsonSchemaAndRounding) {
  const auto gt = testing_helpers::random_annotated({20, 20}, 4);
  SetEvaluator ev(Approach::ms, EvalSettings{});
  ev.add(gt_as_prediction(gt, Approach::ms), gt);
  const auto r = ev.result();
  const auto j = report_json(r);
  EXPECT_EQ(j["schema"], "avseg-evaluation-1");
  EXPECT_EQ(j["approach"], "ms");
  EXPECT_EQ(j["segmentation"]["vessel"]["auc_roc"], 1.0);
  EXPECT_EQ(j["av_classification"]["accuracy"], 1.0);
  EXPECT_FALSE(j["crossings"].is_null());
  EXPECT_TRUE(num(std::nan("")).is_null());
  EXPECT_EQ(num(0.123456).get<double>(), 0.1235);
  const auto m = summary_metrics(r);
  EXPECT_EQ(m.at("vessel.auc_roc"), 1.0);
  EXPECT_EQ(m.at("av.accuracy"), 1.0);
}

TEST(Report, WriteEvaluationProducesCurveFiles) {
  const auto dir = temp_dir("report");
  const auto gt = testing_helpers::random_annotated({20, 20}, 5);
  SetEvaluator ev(Approach::ms, EvalSettings{});
  Rng rng(5);
  auto p = gt_as_prediction(gt, Approach::ms);
  for (float& v : p.maps.span()) v = static_cast<float>(0.8 * v + 0.2 * rng.uniform01());
  ev.add(p, gt);
  write_evaluation(dir / "report.json", ev.result());
  for (const char* f : {"report.json", "roc_vessel.csv", "pr_artery.csv", "roc.png", "pr.png", "joint_curve.csv", "crossings_pr.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
}

}  // namespace
