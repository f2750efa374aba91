// Acceptance checks, one line per criterion. Run with --criterion <name> for
// a single one (ctest registers each separately) or with no arguments for all.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glips/baselines.hpp"
#include "glips/glips.hpp"
#include "glips/harness.hpp"
#include "glips/ibs.hpp"
#include "test_support.hpp"

using namespace glips;
namespace gt = glips::testing;

namespace {

// Pinned tolerances.
constexpr double kTable3MadTol = 0.01;
constexpr double kTable3MapeTol = 0.5;
constexpr double kTable2Tol = 0.005;
constexpr double kWorkedExampleTol = 1e-9;
constexpr double kMmdSelfTol = 1e-9;
constexpr double kMmdSymTol = 1e-12;
constexpr double kMmdHandTol = 1e-12;
constexpr double kDiceTol = 1e-12;
constexpr double kIdentityTol = 1e-9;
constexpr double kPsnrTol = 1e-3;
constexpr double kFidTol = 1e-6;
constexpr double kMsSsimTol = 1e-9;
// So that a difference of exactly 0.01 still counts as within tolerance.
constexpr double kFloatSlack = 1e-9;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& what) {
    if (!pass) detail << "; ";
    else detail.str("");
    pass = false;
    detail << what;
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string strip_spaces(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  return s;
}

void table3_arithmetic(Outcome& o) {
  const auto doc = nlohmann::json::parse(gt::read_text(gt::data_path("table3.json")));
  int checked = 0, bad = 0;
  for (const auto& r : doc.at("rows")) {
    const double rescaled = r.at("rescaled"), human = r.at("human");
    const double h[1] = {human}, m[1] = {rescaled};
    const double got_mad = mad(h, m), got_mape = mape(h, m);
    const double want_mad = r.at("mad"), want_mape = r.at("mape");
    ++checked;
    std::string row = r.at("model").get<std::string>() + " " + r.at("metric").get<std::string>();
    if (r.contains("lambda")) row += " lambda=" + fmt(r.at("lambda").get<double>(), 2);
    if (std::abs(got_mad - want_mad) > kTable3MadTol + kFloatSlack) {
      o.fail(row + ": MAD " + fmt(got_mad) + " vs printed " + fmt(want_mad, 2));
      ++bad;
    }
    if (std::abs(got_mape - want_mape) > kTable3MapeTol) {
      o.fail(row + ": MAPE " + fmt(got_mape, 2) + " vs printed " + fmt(want_mape, 2));
      ++bad;
    }
    // Likert columns follow from the rescaled and human values.
    if (strip_spaces(r.at("likert_human")) != to_string(likert_label(human))) {
      o.fail(row + ": human label " + to_string(likert_label(human)));
      ++bad;
    }
  }
  if (checked != 28) o.fail("expected 28 rows, found " + std::to_string(checked));
  if (o.pass) o.detail << checked << " rows match";
  else o.detail << " (" << bad << " mismatches over " << checked << " rows)";
}

void table2_averages(Outcome& o) {
  const auto h = load_human_scores(gt::data_path("table2_human_scores.csv"));
  const std::map<std::string, double> printed{
      {"Camera Generated", 4.06}, {"DALL.E2", 3.63}, {"Glide", 2.04}, {"Stable Diffusion", 3.30}, {"DALL.E3", 2.75}};
  const auto avg = h.averages();
  if (avg.size() != printed.size()) o.fail("expected 5 models, found " + std::to_string(avg.size()));
  for (const auto& [model, want] : printed) {
    const auto it = avg.find(model);
    if (it == avg.end()) {
      o.fail("missing " + model);
      continue;
    }
    if (std::abs(it->second - want) > kTable2Tol) o.fail(model + ": " + fmt(it->second) + " vs " + fmt(want, 2));
  }
  if (o.pass) o.detail << "5 model means within " << kTable2Tol;
}

void ibs_worked_example(Outcome& o) {
  const BinTable& t = find_table(default_bin_tables(), "SSIM");
  const Bin& b = classify(t, 0.45);
  if (b.label != LikertLabel::SomewhatAgree) o.fail("0.45 classified as " + to_string(b.label));
  const double score = ibs_score(t, 0.45);
  if (std::abs(score - 3.55) > kWorkedExampleTol) o.fail("score " + fmt(score, 12) + ", expected 3.55");
  // The printed 3.6 is what a unit slope gives, not the 0.9-wide span.
  if (!(std::abs(score - 3.6) > 0.04)) o.fail("canonical score does not diverge from 3.6");
  const double unit = ibs_score_unit_slope(t, 0.45);
  if (std::abs(unit - 3.6) > kWorkedExampleTol) o.fail("unit-slope variant gives " + fmt(unit, 12));
  if (o.pass) o.detail << "SomewhatAgree, 3.55 (unit-slope variant 3.6)";
}

void ibs_properties(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::size_t total = 0;
  for (const auto& [name, t] : default_bin_tables()) {
    const double lo = t.bins.front().interp_lo, hi = t.bins.back().interp_hi;
    const double pad = 0.25 * (hi - lo);
    std::uniform_real_distribution<double> u(lo - pad, hi + pad);
    std::vector<std::pair<double, double>> per_bin[5];
    for (int i = 0; i < 10000; ++i) {
      const double x = u(rng);
      int hits = 0, idx = -1;
      for (int k = 0; k < 5; ++k) {
        if (x >= t.bins[k].metric_lo && x < t.bins[k].metric_hi) {
          ++hits;
          idx = k;
        }
      }
      const Bin& b = classify(t, x);
      if (hits != 1 || &b != &t.bins[idx]) {
        o.fail(name + ": classification of " + fmt(x) + " not unique");
        return;
      }
      const double s = ibs_score(t, x);
      if (s < b.score_lo || s > b.score_hi) {
        o.fail(name + ": score " + fmt(s) + " outside span of " + to_string(b.label));
        return;
      }
      if (likert_label(s) != b.label) {
        o.fail(name + ": label round trip " + to_string(likert_label(s)) + " vs " + to_string(b.label));
        return;
      }
      per_bin[idx].emplace_back(x, s);
      ++total;
    }
    for (auto& v : per_bin) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 1; i < v.size(); ++i) {
        const bool ok = t.orientation == Orientation::HigherIsBetter ? v[i].second >= v[i - 1].second
                                                                     : v[i].second <= v[i - 1].second;
        if (!ok) {
          o.fail(name + ": not monotone near " + fmt(v[i].first));
          return;
        }
      }
    }
  }
  o.detail << total << " values over " << default_bin_tables().size() << " tables";
}

void mmd_properties(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(2, 24), dim(1, 12);
  for (KernelFamily fam : {KernelFamily::Rbf, KernelFamily::Polynomial, KernelFamily::Exponential}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int d = dim(rng);
      const auto f = gt::random_features(rng, count(rng), d);
      const auto g = gt::random_features(rng, count(rng), d, 1.5);
      KernelSpec spec;
      spec.family = fam;
      const KernelSpec k = resolve_median_heuristic(spec, f, g);
      const double ff = mmd(f, f, k), fg = mmd(f, g, k), gf = mmd(g, f, k);
      if (ff > kMmdSelfTol) o.fail(to_string(fam) + ": mmd(F,F) = " + fmt(ff, 12));
      if (std::abs(fg - gf) > kMmdSymTol) o.fail(to_string(fam) + ": asymmetry " + fmt(std::abs(fg - gf), 15));
      if (fg < 0.0 || ff < 0.0) o.fail(to_string(fam) + ": negative mmd");
      if (!o.pass) return;
    }
  }
  KernelSpec unit;
  unit.gamma = 1.0;
  const double hand = mmd(FeatureSet::from_rows({{0.0}}), FeatureSet::from_rows({{1.0}}), unit);
  const double want = 1.0 + 1.0 - 2.0 * std::exp(-1.0);
  if (std::abs(hand - want) > kMmdHandTol) o.fail("1-D case " + fmt(hand, 15) + " vs " + fmt(want, 15));
  if (o.pass) o.detail << "300 pairs, 1-D case " << fmt(hand, 12);
}

void dice_properties(Outcome& o) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 768);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(len(rng)), b(a.size());
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    if (i % 10 == 0) std::fill(b.begin(), b.begin() + b.size() / 2, 0.0);
    const double ab = dice_patch(a, b), ba = dice_patch(b, a), aa = dice_patch(a, a);
    double sq = 0, s = 0;
    for (double v : a) {
      sq += v * v;
      s += v;
    }
    if (ab < 0.0 || ab > 1.0) o.fail("dice " + fmt(ab) + " outside [0,1]");
    if (ab != ba) o.fail("asymmetric dice");
    if (std::abs(aa - sq / s) > kDiceTol) o.fail("self dice " + fmt(aa, 15) + " vs " + fmt(sq / s, 15));
    if (!o.pass) return;
  }
  o.detail << "1000 patch pairs";
}

void end_to_end_identity(Outcome& o) {
  FixtureBackend backend(fixture_manifest(0));
  double worst = 0.0;
  int runs = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const ImageTensor img = gt::pattern_image(224, 224, 500 + i);
    const BackendOutput out = backend.analyze(img);
    for (KernelFamily fam : {KernelFamily::Rbf, KernelFamily::Polynomial, KernelFamily::Exponential}) {
      for (double lambda : {0.0, 0.54, 0.62, 1.0}) {
        GlipsConfig cfg;
        cfg.lambda = lambda;
        cfg.kernel.family = fam;
        const double s = glips_score(img, img, out, out, backend.patch_grid(), cfg).score;
        worst = std::max(worst, std::abs(s));
        ++runs;
      }
    }
  }
  if (worst > kIdentityTol) o.fail("max |GLIPS(x,x)| = " + fmt(worst, 12));
  else o.detail << runs << " runs, max |GLIPS(x,x)| = " << worst;
}

void baselines(Outcome& o) {
  const ImageTensor a = gt::pattern_image(224, 224, 42);
  const double s = ssim(a, a), ms = ms_ssim(a, a);
  if (s != 1.0) o.fail("ssim(a,a) = " + fmt(s, 15));
  if (std::abs(ms - 1.0) > kMsSsimTol) o.fail("ms_ssim(a,a) = " + fmt(ms, 15));
  const double p6 = psnr(ImageTensor(16, 16, 0.0), ImageTensor(16, 16, 0.5));
  const double p0 = psnr(ImageTensor(16, 16, 0.0), ImageTensor(16, 16, 1.0));
  if (std::abs(p6 - 6.0206) > kPsnrTol) o.fail("psnr half-range " + fmt(p6));
  if (std::abs(p0) > kPsnrTol) o.fail("psnr full-range " + fmt(p0));

  auto g1 = [](double mean, double var) {
    GaussianSummary g;
    g.mean = Eigen::VectorXd::Constant(1, mean);
    g.covariance = Eigen::MatrixXd::Constant(1, 1, var);
    return g;
  };
  const double f9 = fid(g1(0, 1), g1(3, 1)), f1 = fid(g1(0, 1), g1(0, 4));
  if (std::abs(f9 - 9.0) > kFidTol) o.fail("fid shifted mean " + fmt(f9, 9));
  if (std::abs(f1 - 1.0) > kFidTol) o.fail("fid scaled variance " + fmt(f1, 9));

  std::mt19937_64 rng(3);
  const auto f = gt::random_features(rng, 50, 16);
  const double k = kid(f, f);
  if (k != 0.0) o.fail("kid(F,F) = " + fmt(k, 15));
  if (o.pass) o.detail << "ssim 1, ms_ssim " << fmt(ms, 12) << ", psnr " << fmt(p6) << "/" << fmt(p0) << " dB, fid "
                       << fmt(f9, 6) << "/" << fmt(f1, 6) << ", kid 0";
}

void harness_determinism(Outcome& o) {
  gt::TempDir dir("acceptance");
  const auto ds = gt::write_fixture_dataset(dir.path(), 4, false);
  const auto manifest = load_dataset_manifest(ds.manifest);
  const auto humans = load_human_scores(ds.humans);
  FixtureBackend backend(fixture_manifest(0));
  const std::string first = report_to_csv(evaluate(manifest, humans, backend));
  FixtureBackend again(fixture_manifest(0));
  const std::string second = report_to_csv(evaluate(manifest, humans, again));
  if (first != second) o.fail("reports differ");
  else o.detail << first.size() << " bytes identical";
}

struct Criterion {
  std::string name;
  std::function<void(Outcome&)> run;
  double budget_seconds;  // 0: no runtime bound
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"table3_arithmetic", table3_arithmetic, 1.0},
      {"table2_averages", table2_averages, 0.0},
      {"ibs_worked_example", ibs_worked_example, 0.0},
      {"ibs_properties", ibs_properties, 5.0},
      {"mmd_properties", mmd_properties, 0.0},
      {"dice_properties", dice_properties, 0.0},
      {"end_to_end_identity", end_to_end_identity, 0.0},
      {"baselines", baselines, 0.0},
      {"harness_determinism", harness_determinism, 0.0},
  };
  return all;
}

bool run_one(const Criterion& c) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    c.run(o);
  } catch (const std::exception& e) {
    o.fail(std::string("threw: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
    o.fail("took " + fmt(secs, 2) + " s, budget " + fmt(c.budget_seconds, 1) + " s");
  }
  std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << fmt(secs, 3) << " s] " << o.detail.str() << "\n";
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) only = argv[++i];
    else if (a == "--list") {
      for (const auto& c : criteria()) std::cout << c.name << "\n";
      return 0;
    } else {
      std::cerr << "usage: acceptance [--list] [--criterion NAME]\n";
      return 2;
    }
  }
  bool ok = true, found = only.empty();
  for (const auto& c : criteria()) {
    if (!only.empty() && c.name != only) continue;
    found = true;
    ok = run_one(c) && ok;
  }
  if (!found) {
    std::cerr << "unknown criterion " << only << "\n";
    return 2;
  }
  return ok ? 0 : 1;
}
