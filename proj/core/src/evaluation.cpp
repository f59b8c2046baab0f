#include "rvn/evaluation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rvn/png_io.hpp"
#include "rvn/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace rvn {
namespace {

SamplingMask eval_mask(const EvalOptions& o, std::int64_t ny, std::int64_t nx,
                       double R, std::uint64_t vol_idx, std::int64_t slice) {
  const std::uint64_t seed =
      Rng::derive_seed(o.seed, 0xe7a1, vol_idx * 1000 + slice,
                       static_cast<std::uint64_t>(std::llround(R * 16)));
  if (o.mask_kind == "random_cartesian")
    return random_cartesian_mask(ny, nx, R, o.acs_fraction, seed);
  return variable_density_mask(ny, nx, R, o.center_radius, seed);
}

json to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::vector<MethodReport> evaluate_dataset(const Manifest& manifest,
                                           Split split,
                                           const Reconstructor& reconstruct,
                                           const std::string& method_name,
                                           const EvalOptions& options) {
  const auto entries = manifest.split_entries(split);
  std::vector<MethodReport> reports;
  for (double R : options.accelerations) {
    MethodReport report;
    report.method = method_name;
    report.acceleration = R;
    double sum_ssim = 0, sum_psnr = 0, sum_nmse = 0;
    std::int64_t n = 0;
    bool psnr_inf = false;
    std::uint64_t vol_idx = 0;
    for (const auto* entry : entries) {
      VolumeReport vr;
      vr.path = entry->path;
      try {
        const Volume vol = read_volume(entry->path);
        double v_ssim = 0, v_psnr = 0, v_nmse = 0;
        for (std::int64_t s = 0; s < vol.n_slices(); ++s) {
          const auto full = vol.slice(s);
          const auto mask =
              eval_mask(options, vol.ny(), vol.nx(), R, vol_idx, s);
          const auto recon = reconstruct(apply_mask(full, mask), mask);
          const auto ref = vol.reference(s);
          SliceReport sr;
          sr.slice = s;
          sr.ssim = ssim(ref, recon, max_abs(ref));
          sr.psnr = psnr(ref, recon);
          sr.nmse = nmse(ref, recon);
          vr.slices.push_back(sr);
          v_ssim += sr.ssim;
          v_nmse += sr.nmse;
          if (std::isinf(sr.psnr))
            psnr_inf = true;
          else
            v_psnr += sr.psnr;
        }
        const double ns = static_cast<double>(vol.n_slices());
        vr.mean_ssim = v_ssim / ns;
        vr.mean_psnr = psnr_inf ? std::numeric_limits<double>::infinity()
                                : v_psnr / ns;
        vr.mean_nmse = v_nmse / ns;
        sum_ssim += v_ssim;
        sum_psnr += v_psnr;
        sum_nmse += v_nmse;
        n += vol.n_slices();
      } catch (const std::exception& e) {
        vr.error = e.what();
      }
      report.volumes.push_back(std::move(vr));
      ++vol_idx;
    }
    if (n > 0) {
      report.mean_ssim = sum_ssim / static_cast<double>(n);
      report.mean_psnr = psnr_inf ? std::numeric_limits<double>::infinity()
                                  : sum_psnr / static_cast<double>(n);
      report.mean_nmse = sum_nmse / static_cast<double>(n);
      report.n_slices = n;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_report_json(const std::string& path,
                       const std::vector<MethodReport>& reports) {
  json j;
  j["version"] = 1;
  j["reports"] = json::array();
  for (const auto& r : reports) {
    json jr{{"method", r.method},
            {"acceleration", r.acceleration},
            {"n_slices", r.n_slices},
            {"mean_ssim", to_json(r.mean_ssim)},
            {"mean_psnr", to_json(r.mean_psnr)},
            {"mean_nmse", to_json(r.mean_nmse)}};
    jr["volumes"] = json::array();
    for (const auto& v : r.volumes) {
      json jv{{"path", fs::path(v.path).filename().string()}};
      if (!v.error.empty()) {
        jv["error"] = v.error;
      } else {
        jv["mean_ssim"] = to_json(v.mean_ssim);
        jv["mean_psnr"] = to_json(v.mean_psnr);
        jv["mean_nmse"] = to_json(v.mean_nmse);
        jv["slices"] = json::array();
        for (const auto& s : v.slices)
          jv["slices"].push_back({{"slice", s.slice},
                                  {"ssim", to_json(s.ssim)},
                                  {"psnr", to_json(s.psnr)},
                                  {"nmse", to_json(s.nmse)}});
      }
      jr["volumes"].push_back(std::move(jv));
    }
    j["reports"].push_back(std::move(jr));
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_report_json: cannot open " + path);
  f << j.dump(2) << "\n";
}

std::string render_report_table(const std::vector<MethodReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "method" << std::setw(8) << "R"
     << std::setw(12) << "SSIM" << std::setw(12) << "pSNR" << std::setw(12)
     << "NMSE" << "slices\n";
  os << std::string(68, '-') << "\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(20) << r.method << std::setw(8)
       << r.acceleration << std::setw(12) << std::fixed
       << std::setprecision(4) << r.mean_ssim;
    if (std::isinf(r.mean_psnr))
      os << std::setw(12) << "inf";
    else
      os << std::setw(12) << std::setprecision(2) << r.mean_psnr;
    os << std::setw(12) << std::setprecision(4) << r.mean_nmse << r.n_slices
       << "\n";
  }
  return os.str();
}

void emit_comparison_panels(const Manifest& manifest, Split split,
                            const Reconstructor& reconstruct, double R,
                            const EvalOptions& options,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::uint64_t vol_idx = 0;
  for (const auto* entry : manifest.split_entries(split)) {
    const Volume vol = read_volume(entry->path);
    const std::int64_t s = 0;
    const auto full = vol.slice(s);
    const auto mask = eval_mask(options, vol.ny(), vol.nx(), R, vol_idx, s);
    const auto masked = apply_mask(full, mask);
    const auto panel_path =
        (fs::path(out_dir) /
         (fs::path(entry->path).stem().string() + "_R" +
          std::to_string(static_cast<int>(std::llround(R))) + ".png"))
            .string();
    write_panel_png(panel_path, {vol.reference(s), zero_filled_recon(masked),
                                 reconstruct(masked, mask)});
    ++vol_idx;
  }
}

}  // namespace rvn
