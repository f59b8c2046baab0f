#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rvn/evaluation.hpp"
#include "test_util.hpp"

#include <nlohmann/json.hpp>

using namespace rvn;
namespace fs = std::filesystem;

namespace {

Manifest tiny_dataset(const std::string& dir) {
  DataConfig d;
  d.ny = d.nx = 16;
  d.n_coils = 2;
  d.slices_per_volume = 2;
  d.train_volumes = 1;
  d.val_volumes = 1;
  d.test_volumes = 2;
  d.seed = 21;
  fs::remove_all(dir);
  return generate_dataset(d, dir);
}

EvalOptions small_options() {
  EvalOptions o;
  o.accelerations = {2};
  o.mask_kind = "random_cartesian";
  o.acs_fraction = 0.25;
  o.seed = 5;
  return o;
}

/// Returns the fully-sampled reference regardless of the mask: a "perfect"
/// reconstructor for testing. Captured per volume via closure over the
/// dataset is impossible (the reconstructor only sees masked data), so
/// tests that need it synthesize datasets where zero-filled is exact.
Tensor<float> zero_reconstructor(const CTensor<float>& masked,
                                 const SamplingMask&) {
  return Tensor<float>({masked.dim(1), masked.dim(2)});
}

}  // namespace

TEST_CASE("a perfect reconstructor scores SSIM 1, NMSE 0, infinite pSNR") {
  const auto dir = (fs::temp_directory_path() / "rvn_eval_perfect").string();
  auto manifest = tiny_dataset(dir);

  // cheat deliberately: reconstruct from the *unmasked* volume by reading
  // it again, keyed off the mask-independent slice shape; here we instead
  // evaluate at R=1 so masked == full and zero-filled is exact
  EvalOptions o = small_options();
  o.accelerations = {1};
  auto reports = evaluate_dataset(
      manifest, Split::test,
      [](const CTensor<float>& masked, const SamplingMask&) {
        return zero_filled_recon(masked);
      },
      "zero-filled", o);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].n_slices == 4);
  CHECK(reports[0].mean_ssim == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(reports[0].mean_nmse == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::isinf(reports[0].mean_psnr));
  fs::remove_all(dir);
}

TEST_CASE("the zero reconstructor has NMSE exactly 1 on every slice") {
  const auto dir = (fs::temp_directory_path() / "rvn_eval_zero").string();
  auto manifest = tiny_dataset(dir);
  auto reports = evaluate_dataset(manifest, Split::test, zero_reconstructor,
                                  "zero", small_options());
  for (const auto& v : reports[0].volumes) {
    REQUIRE(v.error.empty());
    for (const auto& s : v.slices)
      CHECK(s.nmse == doctest::Approx(1.0).epsilon(1e-9));
  }
  fs::remove_all(dir);
}

TEST_CASE("slice-equal averaging is invariant to volume order") {
  const auto dir = (fs::temp_directory_path() / "rvn_eval_perm").string();
  auto manifest = tiny_dataset(dir);
  auto a = evaluate_dataset(manifest, Split::test,
                            [](const CTensor<float>& m, const SamplingMask&) {
                              return zero_filled_recon(m);
                            },
                            "zf", small_options());

  // permute the test entries; per-volume mask seeds are tied to the
  // original volume index, so evaluate with the identity-but-renamed
  // manifest and compare the pooled mean across a full permutation
  Manifest shuffled = manifest;
  std::reverse(shuffled.entries.begin(), shuffled.entries.end());
  auto b = evaluate_dataset(shuffled, Split::test,
                            [](const CTensor<float>& m, const SamplingMask&) {
                              return zero_filled_recon(m);
                            },
                            "zf", small_options());
  // means are averages over the same multiset of (volume, slice) metrics
  // as long as the per-volume masks are the same; reversing swaps the two
  // test volumes and their seeds, so compare against a freshly pooled mean
  double pooled_a = 0, pooled_b = 0;
  std::int64_t na = 0, nb = 0;
  for (const auto& v : a[0].volumes)
    for (const auto& s : v.slices) {
      pooled_a += s.ssim;
      ++na;
    }
  for (const auto& v : b[0].volumes)
    for (const auto& s : v.slices) {
      pooled_b += s.ssim;
      ++nb;
    }
  CHECK(na == nb);
  CHECK(a[0].mean_ssim == doctest::Approx(pooled_a / na).epsilon(1e-12));
  CHECK(b[0].mean_ssim == doctest::Approx(pooled_b / nb).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("a missing volume yields an error entry and evaluation continues") {
  const auto dir = (fs::temp_directory_path() / "rvn_eval_missing").string();
  auto manifest = tiny_dataset(dir);
  // break the first test volume
  auto test_entries = manifest.split_entries(Split::test);
  REQUIRE(test_entries.size() == 2);
  fs::remove(test_entries[0]->path);

  auto reports = evaluate_dataset(manifest, Split::test, zero_reconstructor,
                                  "zero", small_options());
  REQUIRE(reports[0].volumes.size() == 2);
  CHECK_FALSE(reports[0].volumes[0].error.empty());
  CHECK(reports[0].volumes[1].error.empty());
  CHECK(reports[0].n_slices == 2);  // only the surviving volume pooled
  fs::remove_all(dir);
}

TEST_CASE("reports serialize to JSON and render as a table") {
  const auto dir = (fs::temp_directory_path() / "rvn_eval_json").string();
  auto manifest = tiny_dataset(dir);
  EvalOptions o = small_options();
  o.accelerations = {1, 2};
  auto reports = evaluate_dataset(
      manifest, Split::test,
      [](const CTensor<float>& m, const SamplingMask&) {
        return zero_filled_recon(m);
      },
      "zero-filled", o);

  const auto json_path = (fs::temp_directory_path() / "rvn_report.json").string();
  write_report_json(json_path, reports);
  std::ifstream f(json_path);
  nlohmann::json j;
  f >> j;
  CHECK(j.at("reports").size() == 2);
  CHECK(j["reports"][0]["method"] == "zero-filled");
  CHECK(j["reports"][0]["mean_psnr"] == "inf");  // R=1 is exact
  CHECK(j["reports"][0]["volumes"].size() == 2);

  const auto table = render_report_table(reports);
  CHECK(table.find("zero-filled") != std::string::npos);
  CHECK(table.find("SSIM") != std::string::npos);
  std::remove(json_path.c_str());
  fs::remove_all(dir);
}

TEST_CASE("comparison panels are written as PNG files") {
  const auto dir = (fs::temp_directory_path() / "rvn_eval_png").string();
  auto manifest = tiny_dataset(dir);
  const auto out = (fs::temp_directory_path() / "rvn_eval_png_out").string();
  fs::remove_all(out);
  emit_comparison_panels(manifest, Split::test,
                         [](const CTensor<float>& m, const SamplingMask&) {
                           return zero_filled_recon(m);
                         },
                         2.0, small_options(), out);
  std::int64_t count = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    CHECK(e.path().extension() == ".png");
    CHECK(fs::file_size(e.path()) > 100);
    ++count;
  }
  CHECK(count == 2);
  fs::remove_all(dir);
  fs::remove_all(out);
}
