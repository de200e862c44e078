// Acceptance suite. `acceptance --criterion N` runs one criterion and prints
// one line: "[PASS] criterion N: ...", "[FAIL] ..." or "[SKIP] ...".
// Exit status: 0 pass, 1 fail, 77 skip (data not configured).
//
// Data-dependent criteria read:
//   AVSEG_RITE_ROOT   dataset root in the loader layout (train/ and test/)
//   AVSEG_REPRO_DIR   output directory of `avseg reproduce` (summary.json)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "avseg/io/dataset.hpp"
#include "avseg/losses.hpp"
#include "avseg/metrics/curves.hpp"
#include "avseg/pipeline.hpp"
#include "avseg/preprocess.hpp"
#include "avseg/synthetic.hpp"
#include "avseg/train.hpp"
#include "oracles/oracles.hpp"
#include "unit/helpers.hpp"

namespace {

namespace fs = std::filesystem;
using namespace avseg;
using testing_helpers::random_annotated;
using testing_helpers::random_tensor;
using Clock = std::chrono::steady_clock;

constexpr int kSkip = 77;

struct Outcome {
  enum Kind { pass, fail, skip } kind;
  std::string detail;
};

Outcome check(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

std::optional<fs::path> env_dir(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return fs::path(v);
}

template <typename G>
std::vector<int> to_ints(const G& g) {
  return {g.span().begin(), g.span().end()};
}

std::vector<double> to_vec(const Tensor3<double>& t) { return {t.span().begin(), t.span().end()}; }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

AnnotatedFundusImage center_crop(const AnnotatedFundusImage& a, Size2 s) {
  const int r0 = (a.size().rows - s.rows) / 2, c0 = (a.size().cols - s.cols) / 2;
  if (r0 < 0 || c0 < 0) throw ShapeError("image " + a.id + " is smaller than the crop");
  AnnotatedFundusImage out;
  out.id = a.id;
  out.image = Tensor3<float>(3, s);
  out.annotation = Annotation(s);
  out.roi = Mask(s);
  out.vessel_gt = Mask(s);
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) out.image(ch, r, c) = a.image(ch, r0 + r, c0 + c);
      out.annotation(r, c) = a.annotation(r0 + r, c0 + c);
      out.roi(r, c) = a.roi(r0 + r, c0 + c);
      out.vessel_gt(r, c) = a.vessel_gt(r0 + r, c0 + c);
    }
  return out;
}

std::vector<AnnotatedFundusImage> rite_split(const fs::path& root, const std::string& split) {
  io::DatasetOptions o;
  o.require_vessel_consistency = false;  // vessel/ holds an independent expert segmentation
  return io::load_dataset(root, split, o);
}

// ---------------------------------------------------------------------------

// Losses against naive per-pixel sums, 100 random 8x8 instances, 1e-10 relative.
Outcome criterion1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = random_annotated({8, 8}, 1000 + seed);
    Rng rng(seed);
    const auto ms = build_ms_target(a);
    const auto p3 = random_tensor<double>(3, {8, 8}, rng, 0.0, 1.0);
    worst = std::max(worst, rel_err(bce3_loss(p3, ms), oracle::naive_bce3(to_vec(p3), to_ints(ms.channels), to_ints(ms.loss_roi), 8, 8)));
    const auto ce = build_ce4_target(a);
    const auto p4 = apply_softmax(random_tensor<double>(4, {8, 8}, rng, -4.0, 4.0));
    const std::vector<double> w(ce.class_weights.begin(), ce.class_weights.end());
    worst = std::max(worst, rel_err(ce4_loss(p4, ce), oracle::naive_ce4(to_vec(p4), to_ints(ce.labels), w, to_ints(ce.roi), 8, 8)));
  }
  const double t = seconds_since(t0);
  return check(worst <= 1e-10 && t < 10.0, "loss oracle max relative error " + fmt(worst) + " (tol 1e-10), " + fmt(t) + " s (limit 10 s)");
}

// Analytic logit gradients against central differences, step 1e-4.
// Relative error |a - f| / max(|a|, |f|); entries where both are exactly 0
// (masked pixels) count as 0.
template <typename LossGrad>
double worst_gradient_error(const Tensor3<double>& z, LossGrad f) {
  const auto lg = f(z);
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t i = 0; i < z.numel(); ++i) {
    auto zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double fd = (f(zp).loss - f(zm).loss) / (2 * h);
    const double denom = std::max(std::abs(lg.grad[i]), std::abs(fd));
    if (denom > 0) worst = std::max(worst, std::abs(lg.grad[i] - fd) / denom);
  }
  return worst;
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_annotated({8, 8}, 2000 + seed);
    Rng rng(seed);
    const auto ms = build_ms_target(a);
    const auto ce = build_ce4_target(a);
    worst = std::max(worst, worst_gradient_error(random_tensor<double>(3, {8, 8}, rng, -4.0, 4.0),
                                                 [&](const Tensor3<double>& z) { return bce3_loss_and_grad(z, ms); }));
    worst = std::max(worst, worst_gradient_error(random_tensor<double>(4, {8, 8}, rng, -4.0, 4.0),
                                                 [&](const Tensor3<double>& z) { return ce4_loss_and_grad(z, ce); }));
  }
  const double t = seconds_since(t0);
  return check(worst < 1e-4 && t < 60.0, "gradient max relative error " + fmt(worst) + " (tol 1e-4), " + fmt(t) + " s (limit 60 s)");
}

Outcome criterion3() {
  int av_changed = 0, vessel_unchanged = 0, ce4_changed = 0, instances_with_uncertain = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = random_annotated({8, 8}, 3000 + seed);
    Rng rng(seed);
    const auto ms = build_ms_target(a);
    const auto p = random_tensor<double>(3, {8, 8}, rng, 0.05, 0.95);
    const double base = bce3_loss(p, ms);
    auto q_av = p, q_vessel = p;
    bool any = false;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c)
        if (a.annotation(r, c) == VesselClass::uncertain && a.roi(r, c)) {
          any = true;
          q_av(kArtery, r, c) = rng.uniform(0.0, 1.0);
          q_av(kVein, r, c) = rng.uniform(0.0, 1.0);
          q_vessel(kVessel, r, c) = 1.0 - q_vessel(kVessel, r, c) + 0.01;
        }
    if (!any) continue;
    ++instances_with_uncertain;
    if (bce3_loss(q_av, ms) != base) ++av_changed;
    if (bce3_loss(q_vessel, ms) == base) ++vessel_unchanged;

    const auto ce = build_ce4_target(a);
    const auto z = random_tensor<double>(4, {8, 8}, rng, -3.0, 3.0);
    auto z2 = z;
    for (std::size_t i = 0; i < ce.labels.numel(); ++i)
      if (ce.labels[i] == 3)
        for (int ch = 0; ch < 4; ++ch) z2.plane(ch)[i] = rng.uniform(-3.0, 3.0);
    if (ce4_loss(apply_softmax(z2), ce) != ce4_loss(apply_softmax(z), ce)) ++ce4_changed;
  }
  const bool ok = instances_with_uncertain == 50 && av_changed == 0 && vessel_unchanged == 0 && ce4_changed == 0;
  return check(ok, std::to_string(instances_with_uncertain) + "/50 instances with uncertain pixels; BCE3 changed by A/V perturbation in " +
                       std::to_string(av_changed) + ", unchanged by vessel perturbation in " + std::to_string(vessel_unchanged) +
                       ", CE4 changed at label-3 pixels in " + std::to_string(ce4_changed));
}

Outcome criterion4() {
  const auto root = env_dir("AVSEG_RITE_ROOT");
  if (!root) return {Outcome::skip, "class counts need the RITE dataset; set AVSEG_RITE_ROOT"};
  const auto t0 = Clock::now();
  ClassCounts n;
  std::size_t images = 0;
  for (const char* split : {"train", "test"})
    for (const auto& a : rite_split(*root, split)) {
      n += count_classes(a.annotation, a.roi);
      ++images;
    }
  const double t = seconds_since(t0);
  const bool ok = n.vessel() == 546029 && n.artery == 227210 && n.vein == 278576 && n.crossing == 14003 && n.uncertain == 26240 && t < 30.0;
  return check(ok, std::to_string(images) + " images: vessel " + std::to_string(n.vessel()) + " artery " + std::to_string(n.artery) +
                       " vein " + std::to_string(n.vein) + " crossing " + std::to_string(n.crossing) + " uncertain " +
                       std::to_string(n.uncertain) + " (expected 546029/227210/278576/14003/26240), " + fmt(t) + " s");
}

// Worst |std - 1| over every channel of the enhanced images.
double worst_std_error(const std::vector<AnnotatedFundusImage>& data) {
  double worst = 0.0;
  for (const auto& a : data) {
    const auto e = normalize_contrast(tensor_cast<double>(a.image), a.roi, EnhancementConfig{});
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(population_std<double>(e.plane(c)) - 1.0));
  }
  return worst;
}

Outcome criterion5() {
  double gain_worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticConfig sc;
    sc.size = {96, 112};
    const auto a = synthetic_fundus(sc, 5000 + seed, "g");
    Rng rng(seed);
    const auto img = tensor_cast<double>(a.image);
    auto scaled = img;
    const double gain = rng.uniform(0.25, 4.0);
    for (double& v : scaled.span()) v *= gain;
    const auto e1 = enhance(img, a.roi), e2 = enhance(scaled, a.roi);
    for (std::size_t i = 0; i < e1.numel(); ++i) gain_worst = std::max(gain_worst, std::abs(e1[i] - e2[i]));
  }
  std::vector<AnnotatedFundusImage> synth;
  for (std::uint64_t s = 0; s < 5; ++s) synth.push_back(synthetic_fundus(SyntheticConfig{}, 5100 + s, "s"));
  const double synth_std = worst_std_error(synth);
  const std::string base = "gain invariance max |diff| " + fmt(gain_worst) + " (tol 1e-6)";
  if (gain_worst > 1e-6 || synth_std > 1e-6) return {Outcome::fail, base + ", synthetic std error " + fmt(synth_std)};

  const auto root = env_dir("AVSEG_RITE_ROOT");
  if (!root) return {Outcome::skip, base + " passed; std = 1 on RITE needs AVSEG_RITE_ROOT (synthetic std error " + fmt(synth_std) + ")"};
  auto data = rite_split(*root, "train");
  const auto test = rite_split(*root, "test");
  data.insert(data.end(), test.begin(), test.end());
  const double rite_std = worst_std_error(data);
  return check(rite_std <= 1e-6, base + ", RITE max |std - 1| " + fmt(rite_std) + " over " + std::to_string(data.size()) + " images");
}

Outcome criterion6() {
  Rng rng(6);
  double roc_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(999);
    std::vector<double> s(n);
    std::vector<int> l(n);
    metrics::ScoredSamples samples;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? rng.uniform01() : static_cast<double>(rng.below(50)) / 49.0;  // every other trial has heavy ties
      l[i] = rng.uniform01() < 0.3;
    }
    l[0] = 1;
    l[1] = 0;
    for (std::size_t i = 0; i < n; ++i) samples.add(s[i], l[i] != 0);
    roc_worst = std::max(roc_worst, std::abs(metrics::roc_curve(samples).auc - oracle::pairwise_auc(s, l)));
  }
  int pr_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(99);
    std::vector<double> s(n);
    std::vector<int> l(n);
    metrics::ScoredSamples samples;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(40)) / 39.0;
      l[i] = rng.uniform01() < 0.4;
    }
    l[0] = 1;
    l[1] = 0;
    for (std::size_t i = 0; i < n; ++i) samples.add(s[i], l[i] != 0);
    const auto c = metrics::pr_curve(samples);
    const auto ref = oracle::exhaustive_pr_points(s, l);
    bool same = c.points.size() == ref.size() && c.auc == oracle::exhaustive_pr_auc(s, l);
    for (std::size_t k = 0; same && k < ref.size(); ++k)
      same = c.points[k].threshold == ref[k].threshold && c.points[k].recall == ref[k].recall && c.points[k].precision == ref[k].precision;
    pr_mismatch += !same;
  }
  return check(roc_worst <= 1e-9 && pr_mismatch == 0, "ROC AUC vs pairwise max |diff| " + fmt(roc_worst) + " (tol 1e-9); PR curve/AUC exact mismatches " +
                                                          std::to_string(pr_mismatch) + "/100");
}

// GT-as-prediction crossing recovery on a set of images: {images, tp, fp, fn}.
struct IdentityResult {
  std::size_t images = 0, failed_images = 0;
  metrics::CrossingMatch total;
};

IdentityResult identity_pipeline(const std::vector<AnnotatedFundusImage>& data) {
  IdentityResult r;
  for (const auto& a : data) {
    const auto gt = metrics::gt_crossing_centroids(a.annotation);
    const auto pred = metrics::localize_crossings(gt_as_prediction(a, Approach::ms), 0.5, 0);
    const auto m = metrics::match_crossings(pred, gt, 10.0);
    ++r.images;
    r.failed_images += m.fp != 0 || m.fn != 0 || m.tp != gt.size();
    r.total += m;
  }
  return r;
}

Outcome criterion7() {
  Rng rng(7);
  int divergences = 0, unjustified = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<metrics::Point2> pred, gt;
    std::vector<oracle::Pt> op, og;
    for (std::size_t k = rng.below(7); k > 0; --k) {
      pred.push_back({rng.uniform(0, 30), rng.uniform(0, 30)});
      op.emplace_back(pred.back().x, pred.back().y);
    }
    for (std::size_t k = rng.below(7); k > 0; --k) {
      gt.push_back({rng.uniform(0, 30), rng.uniform(0, 30)});
      og.emplace_back(gt.back().x, gt.back().y);
    }
    const auto m = metrics::match_crossings(pred, gt, 10.0);
    const std::size_t best = oracle::exhaustive_match(op, og, 10.0);
    if (m.tp == best) continue;
    ++divergences;
    // A divergence is justified when the greedy result is still a maximal
    // matching (no unmatched pair within d remains) and only loses pairs
    // to a closer competitor taking a shared point.
    const bool maximal = oracle::is_maximal_matching(op, og, 10.0, m.pairs);
    if (!maximal || m.tp > best) ++unjustified;
    std::cerr << "divergence trial " << trial << ": greedy " << m.tp << " vs maximum " << best << " (pred " << pred.size() << ", gt "
              << gt.size() << ")" << (maximal ? "" : " NOT MAXIMAL") << "\n";
  }
  SyntheticConfig sc;
  sc.size = {128, 128};
  std::vector<AnnotatedFundusImage> synth;
  for (std::uint64_t s = 0; s < 20; ++s) synth.push_back(synthetic_fundus(sc, 7000 + s, "c" + std::to_string(s)));
  const auto syn = identity_pipeline(synth);
  const std::string matcher = "matcher: " + std::to_string(divergences) + "/1000 trials below the maximum assignment, " +
                              std::to_string(unjustified) + " unjustified (each divergence listed on stderr)";
  const std::string syn_s = "synthetic identity " + std::to_string(syn.images - syn.failed_images) + "/" + std::to_string(syn.images) +
                            " images exact (" + std::to_string(syn.total.tp) + " crossings)";
  if (unjustified != 0 || syn.failed_images != 0) return {Outcome::fail, matcher + "; " + syn_s};

  const auto root = env_dir("AVSEG_RITE_ROOT");
  if (!root) return {Outcome::skip, matcher + "; " + syn_s + "; RITE-test identity needs AVSEG_RITE_ROOT"};
  const auto rite = identity_pipeline(rite_split(*root, "test"));
  return check(rite.failed_images == 0 && rite.images == 20,
               matcher + "; RITE-test identity " + std::to_string(rite.images - rite.failed_images) + "/" + std::to_string(rite.images) +
                   " images exact, tp " + std::to_string(rite.total.tp) + " fp " + std::to_string(rite.total.fp) + " fn " +
                   std::to_string(rite.total.fn));
}

// Desk-scale training: two 256x256 crops, N=8 U-Net, 200 Adam iterations
// with both crops in every batch.
Outcome criterion8() {
  const auto t0 = Clock::now();
  std::vector<AnnotatedFundusImage> crops;
  if (const auto root = env_dir("AVSEG_RITE_ROOT")) {
    for (const auto& a : rite_split(*root, "train")) {
      if (crops.size() == 2) break;
      crops.push_back(center_crop(a, {256, 256}));
    }
  } else {
    for (std::uint64_t s = 0; s < 2; ++s) crops.push_back(synthetic_fundus(SyntheticConfig{}, 8000 + s, "crop" + std::to_string(s)));
  }
  nn::UNetConfig ucfg;
  ucfg.base_channels = 8;
  LossConfig lcfg;
  apply_approach(Approach::ms, ucfg, lcfg);
  TrainingConfig tcfg;
  tcfg.lr = 1e-3;
  nn::UNet<float> model(ucfg);
  model.init_params(8);
  nn::Adam<float> adam(model.parameters(), tcfg.adam());
  std::vector<TrainingSample> samples;
  for (const auto& a : crops) samples.push_back(pad_sample(make_sample(a, Approach::ms, true, lcfg), ucfg.multiple()));
  std::vector<const TrainingSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);

  const double first = train_step(model, adam, batch, lcfg);
  double last = first;
  for (int it = 1; it < 200; ++it) last = train_step(model, adam, batch, lcfg);
  const double final_loss = evaluate_loss(model, samples, lcfg);

  SetEvaluator ev(Approach::ms, EvalSettings{});
  for (const auto& a : crops) ev.add(predict_maps(model, Approach::ms, true, a), a);
  const double auc = ev.result().structures.roc[kVessel]->auc;
  const double t = seconds_since(t0);
  const double drop = 1.0 - final_loss / first;
  return check(drop > 0.9 && auc > 0.98 && t < 600.0,
               std::string(env_dir("AVSEG_RITE_ROOT") ? "RITE" : "synthetic") + " crops: BCE3 " + fmt(first, 5) + " -> " +
                   fmt(final_loss, 5) + " (drop " + fmt(100 * drop) + "%, need > 90%), last step " + fmt(last, 5) +
                   ", vessel AUC-ROC " + fmt(auc, 5) + " (need > 0.98), " + fmt(t) + " s (limit 600 s)");
}

Outcome criterion9() {
  const auto dir = env_dir("AVSEG_REPRO_DIR");
  if (!dir) return {Outcome::skip, "full reproduction needs `avseg reproduce` output on RITE; set AVSEG_REPRO_DIR"};
  std::ifstream in(*dir / "summary.json");
  if (!in) return {Outcome::fail, "cannot read " + (*dir / "summary.json").string()};
  nlohmann::json j;
  in >> j;
  const auto& v = j.at("variants");
  if (!v.contains("bce3-enhanced") || !v.contains("ce4-enhanced")) return {Outcome::fail, "summary.json lacks bce3-enhanced or ce4-enhanced"};
  const auto& bce = v["bce3-enhanced"];
  const auto& agg = bce.at("aggregate");
  const double vessel_auc = agg.at("vessel.auc_roc").at("mean").get<double>() * 100.0;
  const double av_acc = agg.at("av.accuracy").at("mean").get<double>() * 100.0;
  const auto n = agg.at("vessel.auc_roc").at("n").get<std::size_t>();

  std::map<std::uint64_t, double> ce_pr;
  for (const auto& r : v["ce4-enhanced"].at("runs"))
    if (r.at("ok").get<bool>()) ce_pr[r.at("seed").get<std::uint64_t>()] = r.at("metrics").at("vessel.auc_pr").get<double>();
  int paired = 0, wins = 0;
  for (const auto& r : bce.at("runs")) {
    if (!r.at("ok").get<bool>()) continue;
    const auto it = ce_pr.find(r.at("seed").get<std::uint64_t>());
    if (it == ce_pr.end()) continue;
    ++paired;
    wins += r.at("metrics").at("vessel.auc_pr").get<double>() > it->second;
  }
  const bool ok = n == 5 && std::abs(vessel_auc - 98.33) <= 0.5 && std::abs(av_acc - 89.24) <= 2.0 && paired == 5 && wins >= 4;
  return check(ok, "BCE3-enhanced over " + std::to_string(n) + " seeds: vessel AUC-ROC " + fmt(vessel_auc, 4) + " (98.33 +- 0.5), A/V accuracy " +
                       fmt(av_acc, 4) + " (89.24 +- 2.0); BCE3 > CE4 vessel AUC-PR in " + std::to_string(wins) + "/" +
                       std::to_string(paired) + " paired seeds (need >= 4/5)");
}

// Joint curve at 0.5 vs the operating-point vessel sensitivity, per image.
Outcome criterion10() {
  std::vector<AnnotatedFundusImage> images;
  std::string source;
  if (const auto root = env_dir("AVSEG_RITE_ROOT")) {
    images = rite_split(*root, "test");
    source = "RITE-test";
  } else {
    SyntheticConfig sc;
    sc.size = {128, 128};
    for (std::uint64_t s = 0; s < 20; ++s) images.push_back(synthetic_fundus(sc, 10000 + s, "t" + std::to_string(s)));
    source = "synthetic test";
  }
  Rng rng(10);
  int checked = 0, mismatched = 0;
  for (const auto& a : images) {
    // Noisy ground truth, so the sensitivity is neither 0 nor 1.
    auto p = gt_as_prediction(a, Approach::ms);
    for (float& v : p.maps.span()) v = static_cast<float>(std::clamp(0.6 * v + 0.4 * rng.uniform01() + (rng.uniform01() < 0.02 ? 0.5 : 0.0), 0.0, 1.0));
    metrics::PooledEvaluation e;
    e.add(p, a);
    bool found = false;
    for (const auto& pt : e.joint_curve().points)
      if (pt.threshold == 0.5) {
        found = true;
        mismatched += pt.sensitivity != e.vessel_counts().sensitivity();
      }
    if (!found) ++mismatched;
    ++checked;
  }
  return check(mismatched == 0, std::to_string(checked - mismatched) + "/" + std::to_string(checked) + " " + source +
                                    " images: joint-curve sensitivity at 0.5 bit-identical to the operating point");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avseg acceptance criteria"};
  int n = 0;
  app.add_option("--criterion", n, "criterion number")->required()->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  Outcome (*const table[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                criterion6, criterion7, criterion8, criterion9, criterion10};
  Outcome o;
  try {
    o = table[n - 1]();
  } catch (const std::exception& e) {
    o = {Outcome::fail, std::string("error: ") + e.what()};
  }
  const char* tag = o.kind == Outcome::pass ? "[PASS]" : o.kind == Outcome::fail ? "[FAIL]" : "[SKIP]";
  std::cout << tag << " criterion " << n << ": " << o.detail << std::endl;
  return o.kind == Outcome::pass ? 0 : o.kind == Outcome::fail ? 1 : kSkip;
}
